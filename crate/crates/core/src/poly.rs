//! Dense real polynomials in the monomial basis, used as segment densities.

use std::ops::{Add, Mul};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    pub fn zero() -> Self {
        Poly::constant(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        for (j, &c) in self.coeffs.iter().enumerate() {
            out.push(c / (j + 1) as f64);
        }
        Poly::new(out)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| c * j as f64)
                .collect(),
        )
    }

    /// `y * p(y)`.
    pub fn mul_y(&self) -> Poly {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend_from_slice(&self.coeffs);
        Poly::new(out)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// ∫_a^b p(y) dy.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    /// ∫_a^b y p(y) dy.
    pub fn first_moment(&self, a: f64, b: f64) -> f64 {
        self.mul_y().integral(a, b)
    }

    /// `q(y) = p(y - c)`: the density after translating the variable by `c`.
    pub fn shifted(&self, c: f64) -> Poly {
        // Expand (y - c)^j binomially.
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        for (j, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let mut binom = 1.0;
            for (i, o) in out.iter_mut().enumerate().take(j + 1) {
                // coefficient of y^i in (y - c)^j is C(j,i) (-c)^(j-i)
                *o += a * binom * (-c).powi((j - i) as i32);
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
        }
        Poly::new(out)
    }

    /// `q(y) = p(-y)`.
    pub fn reflected(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| if j % 2 == 1 { -c } else { c })
                .collect(),
        )
    }

    /// `q(z) = p(z / s) / s` for `s > 0`: the density of `s * Y`.
    pub fn dilated(&self, s: f64) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| c / s.powi(j as i32 + 1))
                .collect(),
        )
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly::new(out)
    }
}

impl Mul<f64> for &Poly {
    type Output = Poly;

    fn mul(self, rhs: f64) -> Poly {
        self.scale(rhs)
    }
}

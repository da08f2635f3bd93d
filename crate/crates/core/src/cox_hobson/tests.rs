use super::*;
use crate::orderings::{default_grid, psi_wds};
use crate::testing::{negative_density_measure, negative_measure};
use crate::transforms::examples::{density, discrete};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn two_point() -> Measure {
    Measure::discrete(&[(-2.0, 0.5), (1.0, 0.5)]).unwrap()
}

/// `int |y - x| mu(dy) - m` evaluated atom by atom.
fn pi_direct(m: &Measure, x: f64) -> f64 {
    m.atoms().iter().map(|a| a.weight * (a.location - x).abs()).sum::<f64>() - m.mean()
}

#[test]
fn pi_examples() {
    let m = two_point();
    assert_eq!(pi_function(&m, 0.0).unwrap(), 2.0);
    assert_eq!(pi_function(&m, -2.0).unwrap(), 2.0);
    for x in [-3.0, -1.0, 0.5, 1.0, 4.0] {
        assert!((pi_function(&m, x).unwrap() - pi_direct(&m, x)).abs() < 1e-14);
    }
    let l = m.support_inf();
    assert!((pi_function(&m, l - 10.0).unwrap() + (l - 10.0)).abs() < 1e-12);
    assert!(matches!(
        pi_function(&Measure::dirac(0.5), 0.0),
        Err(CoxHobsonError::NonNegativeMean(_))
    ));
}

#[test]
fn tangent_examples() {
    let m = two_point();
    let t = tangent_construction(&m, -1.0).unwrap();
    assert_eq!((t.u, t.z), (TangentPoint::LeftRay, 0.0));
    let t = tangent_construction(&m, 0.0).unwrap();
    assert_eq!((t.u, t.z), (TangentPoint::At(-2.0), 2.0));
    assert!(matches!(
        tangent_construction(&m, 1.0),
        Err(CoxHobsonError::ThetaOutOfRange(_))
    ));
    assert!(matches!(
        tangent_construction(&m, -1.5),
        Err(CoxHobsonError::ThetaOutOfRange(_))
    ));
}

#[test]
fn barrier_examples() {
    let b = barrier(&two_point()).unwrap();
    assert_eq!(
        b.knots(),
        &[
            Knot {
                alpha: 0.0,
                b: -2.0,
                kind: KnotKind::Step
            },
            Knot {
                alpha: 2.0,
                b: 1.0,
                kind: KnotKind::Step
            },
        ]
    );
    assert_eq!(b.eval(0.0), -2.0);
    assert_eq!(b.eval(1.5), -2.0);
    assert_eq!(b.eval(2.0), -2.0);
    assert_eq!(b.eval(2.0 + 1e-12), 1.0);
    assert_eq!(b.eval(100.0), 1.0);
    assert_eq!(b.inverse(-2.0), 0.0);
    assert_eq!(b.inverse(0.0), 2.0);
    assert_eq!(b.inverse(1.5), f64::INFINITY);

    let b = barrier(&Measure::dirac(-1.0)).unwrap();
    assert_eq!(b.knots().len(), 1);
    assert!([0.0, 1.0, 1e6].iter().all(|&a| b.eval(a) == -1.0));

    for t in [0.1, 0.3, 0.5, 0.9] {
        let b = barrier(&discrete(1, t).unwrap()).unwrap();
        let c = 1.0 - t + t / (1.0 - t);
        assert!((b.knots()[1].alpha - c).abs() < 1e-12);
        assert_eq!(b.eval(c * (1.0 - 1e-9)), -t);
        assert_eq!(b.eval(c * (1.0 + 1e-9)), 1.0 - t);
    }
}

#[test]
fn density_barrier_is_continuous() {
    let m = density(0, 1.0).unwrap();
    let b = barrier(&m).unwrap();
    let kinds: Vec<KnotKind> = b.knots().iter().map(|k| k.kind).collect();
    assert_eq!(kinds, vec![KnotKind::Linear, KnotKind::Linear]);
    // At x = 0 both branches give Psi = 3.
    assert!((b.knots()[1].alpha - 3.0).abs() < 1e-12);
    assert!((b.eval(3.0) - 0.0).abs() < 1e-9);
    let mut prev = b.eval(0.0);
    for i in 1..200 {
        let v = b.eval(i as f64 * 0.1);
        assert!(v >= prev && v < m.support_sup());
        prev = v;
    }
}

#[test]
fn csv_shapes_and_round_trip() {
    let csv = barrier(&two_point()).unwrap().to_csv();
    let knot_rows: Vec<&str> = csv.lines().skip(1).filter(|l| !l.ends_with("sample")).collect();
    assert_eq!(knot_rows, vec!["0,-2,step", "2,1,step"]);
    assert_eq!(csv.lines().count(), 1 + 2 + CSV_SAMPLES);

    let csv = barrier(&Measure::dirac(-1.0)).unwrap().to_csv();
    assert_eq!(csv.lines().filter(|l| !l.ends_with("sample")).count(), 2);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for m in [two_point(), discrete(2, 0.4).unwrap(), density(1, 0.8).unwrap()] {
        let b = barrier(&m).unwrap();
        let back = Barrier::from_csv(&b.to_csv()).unwrap();
        assert_eq!(back, b);
        let detached = b.detached();
        let json = Barrier::from_json(&b.to_json()).unwrap();
        for _ in 0..1000 {
            let a = rng.random_range(0.0..10.0);
            assert_eq!(back.eval(a), detached.eval(a));
            assert_eq!(json.eval(a), b.eval(a));
            if m.is_atomic() {
                assert_eq!(back.eval(a), b.eval(a));
            }
        }
    }
    assert!(Barrier::from_csv("alpha,b\n").is_err());
    assert!(Barrier::from_csv("alpha,b,kind\n0,1,weird\n").is_err());
}

fn check_inverse(m: &Measure) -> Result<(), TestCaseError> {
    let b = barrier(m).unwrap();
    let r = m.support_sup();
    for x in default_grid(&[m]) {
        let psi = psi_wds(m, x).unwrap();
        let inv = b.inverse(x);
        if x < r {
            prop_assert!(
                (inv - psi.to_f64()).abs() <= 1e-8,
                "x = {x}: inverse {inv} vs psi {psi}"
            );
        } else if x > r {
            prop_assert_eq!(inv, f64::INFINITY);
        }
    }
    Ok(())
}

fn check_tangents(m: &Measure) -> Result<(), TestCaseError> {
    let b = barrier(m).unwrap();
    let mut prev = 0.0;
    for i in 1..=64 {
        let theta = -1.0 + 2.0 * i as f64 / 65.0;
        let t = tangent_construction(m, theta).unwrap();
        let TangentPoint::At(u) = t.u else {
            return Err(TestCaseError::fail("finite slope must touch"));
        };
        prop_assert!(t.z >= prev);
        prev = t.z;
        let bz = b.eval(t.z);
        prop_assert!(
            (bz - u).abs() <= 1e-8 * (1.0 + u.abs()),
            "theta {theta}: b(z) = {bz}, u = {u}"
        );
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn inverse_identity_atoms(m in negative_measure()) {
        check_inverse(&m)?;
    }

    #[test]
    fn inverse_identity_densities(m in negative_density_measure()) {
        check_inverse(&m)?;
    }

    #[test]
    fn tangent_consistency(m in negative_measure()) {
        check_tangents(&m)?;
    }

    #[test]
    fn tangent_consistency_densities(m in negative_density_measure()) {
        check_tangents(&m)?;
    }

    #[test]
    fn pi_convex_with_asymptotes(m in negative_measure(), x in -6.0..6.0f64) {
        let mean = m.mean();
        let p = pi_function(&m, x).unwrap();
        prop_assert!(p >= (-x).max(x - 2.0 * mean) - 1e-12);
        let (l, r) = (m.support_inf(), m.support_sup());
        prop_assert!((pi_function(&m, l - 10.0).unwrap() - (10.0 - l)).abs() <= 1e-9);
        prop_assert!((pi_function(&m, r + 10.0).unwrap() - (r + 10.0 - 2.0 * mean)).abs() <= 1e-9);
        // Subgradient 1 - 2 mu([x, inf)) is non-decreasing across knots.
        let slopes: Vec<f64> = m.knots().iter().map(|&k| 1.0 - 2.0 * m.survival_from(k)).collect();
        prop_assert!(slopes.windows(2).all(|w| w[0] <= w[1] + 1e-15));
    }

    #[test]
    fn tangent_translates(m in negative_measure(), c in -1.0..0.0f64, theta in -0.99..0.99f64) {
        let shifted = m.translate(c);
        let (t0, t1) = (tangent_construction(&m, theta).unwrap(), tangent_construction(&shifted, theta).unwrap());
        let (TangentPoint::At(u0), TangentPoint::At(u1)) = (t0.u, t1.u) else {
            return Err(TestCaseError::fail("finite slope must touch"));
        };
        prop_assert!((u1 - u0 - c).abs() <= 1e-9);
    }
}

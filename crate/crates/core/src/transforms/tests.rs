use super::*;
use crate::measures::io::{measure_from_json, measure_to_json};
use crate::orderings::{
    compare_family, default_grid, interpolation_decomposition, k_function, tp2_check_grid, GridPolicy,
    InterpolationCase, Relation, DEFAULT_TOL,
};
use crate::reproduce::random_tp2_tabulation;
use crate::transforms::examples::{discrete, two_atom};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn k(m: &Measure, x: f64) -> f64 {
    k_function(m, x).unwrap()
}

fn two_point() -> Measure {
    Measure::discrete(&[(-2.0, 0.5), (1.0, 0.5)]).unwrap()
}

fn discrete_family(times: &[f64]) -> MeasureFamily {
    example_family(&Example::Discrete { k: 1 }, times).unwrap()
}

fn wds_holds(fam: &MeasureFamily) -> bool {
    let v = compare_family(Relation::Wds, fam, &GridPolicy::Auto, DEFAULT_TOL).unwrap();
    assert!(!v.inconclusive, "{v:?}");
    v.holds
}

#[test]
fn censor_examples() {
    let c = censor(&two_point(), -3.0, 0.0).unwrap();
    let expected = [(-3.0, 1.0 / 3.0), (0.0, 1.0 / 6.0), (1.0, 0.5)];
    assert_eq!(c.atoms().len(), 3);
    for (a, (x, w)) in c.atoms().iter().zip(expected) {
        assert_eq!(a.location, x);
        assert!((a.weight - w).abs() < 1e-15);
    }
    assert!((c.mean() + 0.5).abs() < 1e-15);

    assert_eq!(censor(&two_point(), 2.0, 3.0).unwrap(), two_point());
    assert_eq!(
        &censor(&Measure::dirac(0.5), -0.5, 1.5).unwrap().atoms(),
        &[Atom::new(-0.5, 0.5), Atom::new(1.5, 0.5)]
    );
    assert!(matches!(
        censor(&two_point(), 1.0, 1.0),
        Err(TransformError::DegenerateInterval { .. })
    ));
}

#[test]
fn censor_interpolates_k() {
    let uniform = Measure::new(vec![Atom::new(-2.0, 0.5)], vec![Segment::new(-1.0, 1.0, vec![0.25])]).unwrap();
    let (a, b) = (-0.5, 0.25);
    let c = censor(&uniform, a, b).unwrap();
    assert!((c.mean() - uniform.mean()).abs() < 1e-15);
    assert!((c.total_mass() - 1.0).abs() < 1e-15);
    let (ka, kb) = (k(&uniform, a), k(&uniform, b));
    for i in 0..=40 {
        let x = -3.0 + i as f64 * 0.1;
        let expected = if x < a || x > b {
            k(&uniform, x)
        } else {
            ((b - x) * ka + (x - a) * kb) / (b - a)
        };
        assert!(
            (k(&c, x) - expected).abs() < 1e-14,
            "x = {x}: {} vs {expected}",
            k(&c, x)
        );
    }
}

#[test]
fn convex_combination() {
    let times: Vec<f64> = (2..=8).map(|i| i as f64 / 10.0).collect();
    let fam = discrete_family(&times);
    let out = convex_combine_family(&fam, &[0.2, 0.5, 0.8]).unwrap().family;
    assert_eq!(out.get(0.2), fam.get(0.2));
    assert_eq!(out.get(0.5), fam.get(0.5));
    // 0.35 lies half way between 0.2 and 0.5.
    let mid = convex_combine_family(&discrete_family(&[0.2, 0.35, 0.5]), &[0.2, 0.5])
        .unwrap()
        .family;
    for x in [-1.0, -0.3, 0.0, 0.6] {
        let expected = 0.5 * (k(&discrete(1, 0.2).unwrap(), x) + k(&discrete(1, 0.5).unwrap(), x));
        assert!((k(mid.get(0.35).unwrap(), x) - expected).abs() < 1e-14);
    }
    assert!(wds_holds(&out));
    assert!(matches!(
        convex_combine_family(&fam, &[0.2, 0.45]),
        Err(TransformError::TauOutOfRange(_))
    ));
    assert!(matches!(
        convex_combine_family(&fam, &[0.5, 0.2]),
        Err(TransformError::TauOutOfRange(_))
    ));
}

#[test]
fn smoothing_familywise_keeps_wds() {
    let fam = discrete_family(&[0.2, 0.4, 0.6, 0.8]);
    let f = LogConcaveDensity::triangular(1.0, 100).unwrap();
    let out = random_translate_family(&fam, &f).unwrap();
    assert!(out.provenance.renormalization.unwrap() >= 0.999);
    assert!(wds_holds(&out.family));
    let f = PositiveDensity::lognormal(0.0, 0.3, 200).unwrap();
    assert!(wds_holds(&scale_mix_family(&fam, &f).unwrap().family));
}

#[test]
fn deterministic_translation_breaks_wds() {
    let times = [0.25, 0.5, 0.75];
    let fam = MeasureFamily::new(times.iter().map(|&t| (t, two_atom(t).unwrap())).collect()).unwrap();
    assert!(wds_holds(&fam));
    let shifted = fam.map(|_, m| Ok::<_, TransformError>(m.translate(-1.0))).unwrap();
    assert!(!wds_holds(&shifted));
}

#[test]
fn provenance_round_trips() {
    let f = LogConcaveDensity::triangular(0.5, 20).unwrap();
    let out = random_translate(&two_point(), &f).unwrap();
    let json = measure_to_json(&out.measure, Some(out.provenance.to_value()));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["provenance"]["transform"], "random-translate");
    assert!(v["provenance"]["renormalization"].as_f64().unwrap() >= 0.999);
    assert_eq!(measure_from_json(&json).unwrap(), out.measure);
}

#[test]
fn interpolation_cases_decompose() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut seen = [false; 4];
    for _ in 0..200 {
        let tab = random_tp2_tabulation(&mut rng, 8, 6);
        let i0 = rng.random_range(0..6);
        let i1 = rng.random_range(i0 + 1..8);
        let x1 = rng.random_range(0..7);
        let x2 = rng.random_range(x1 + 1..8);
        let j = rng.random_range(0..5);
        let l = rng.random_range(j + 1..6);
        let d = interpolation_decomposition(&tab, (i0, i1), (x1, x2), (j, l));
        // Minors of rank-one blocks are pure roundoff, so scale by entries.
        let scale = tab.values.iter().flatten().fold(0.0f64, |a, v| a.max(v * v));
        assert!((d.interpolated - d.combined()).abs() <= 1e-12 * scale);
        assert!(d.terms.iter().all(|(c, m)| *c >= 0.0 && *m >= -1e-12 * scale));
        seen[match d.case {
            InterpolationCase::BothOutside => 0,
            InterpolationCase::SecondInside => 1,
            InterpolationCase::FirstInside => 2,
            InterpolationCase::BothInside => 3,
        }] = true;
        let anchors = [i0, i1];
        assert!(
            tp2_check_grid(&tab.interpolate_rows(&anchors), DEFAULT_TOL)
                .unwrap()
                .holds
        );
    }
    assert_eq!(seen, [true; 4]);
}

#[test]
fn products_stay_tp2() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let l = random_tp2_tabulation(&mut rng, 5, 7);
        let mut m = random_tp2_tabulation(&mut rng, 7, 4);
        m.rows = l.cols.clone();
        let eta: Vec<f64> = (0..7).map(|_| rng.random_range(0.1..2.0)).collect();
        let n = l.compose(&m, &eta).unwrap();
        assert!(tp2_check_grid(&n, DEFAULT_TOL).unwrap().holds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn censoring_keeps_mean_and_wds(a in -1.5..0.9f64, len in 0.05..1.5f64) {
        let fam = discrete_family(&[0.2, 0.4, 0.6, 0.8]);
        let out = censor_family(&fam, a, a + len).unwrap().family;
        for (m, c) in fam.measures().zip(out.measures()) {
            prop_assert!((m.mean() - c.mean()).abs() < 1e-14);
        }
        prop_assert!(wds_holds(&out));
    }

    #[test]
    fn spike_translation_is_identity(w in 1e-9..1e-6f64) {
        let m = two_point();
        let out = random_translate(&m, &LogConcaveDensity::spike(0.0, w).unwrap()).unwrap();
        prop_assert_eq!(out.measure, m);
    }

    #[test]
    fn censoring_grid_points_interpolate(a in -2.5..0.5f64, len in 0.1..2.0f64) {
        let m = two_point();
        let c = censor(&m, a, a + len).unwrap();
        for x in default_grid(&[&m, &c]) {
            let inside = x >= a && x <= a + len;
            if !inside {
                prop_assert!((k(&c, x) - k(&m, x)).abs() < 1e-13);
            }
        }
    }
}

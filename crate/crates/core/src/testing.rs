//! Shared proptest strategies.

use proptest::prelude::*;

use crate::measures::{Atom, Measure, Segment};

/// Up to three atoms plus an optional uniform segment, negative mean.
pub fn negative_measure() -> impl Strategy<Value = Measure> {
    let atoms = prop::collection::vec((-3.0..2.0f64, 0.05..1.0f64), 1..4);
    let seg = prop::option::of((-3.0..1.5f64, 0.1..2.0f64, 0.05..1.0f64));
    (atoms, seg)
        .prop_map(|(atoms, seg)| {
            let total: f64 = atoms.iter().map(|a| a.1).sum::<f64>() + seg.map_or(0.0, |s| s.2);
            let atoms = atoms.iter().map(|&(x, w)| Atom::new(x, w / total)).collect();
            let segs = seg
                .map(|(a, len, w)| vec![Segment::new(a, a + len, vec![w / total / len])])
                .unwrap_or_default();
            Measure::from_parts(atoms, segs).unwrap()
        })
        .prop_filter("negative mean", |m| m.mean() < -1e-3)
}

/// Linear densities on one or two segments with an optional atom.
pub fn negative_density_measure() -> impl Strategy<Value = Measure> {
    let seg = (-3.0..0.5f64, 0.2..2.0f64, 0.0..1.0f64, 0.05..1.0f64);
    (
        seg.clone(),
        prop::option::of(seg),
        prop::option::of((-3.0..1.0f64, 0.05..0.5f64)),
    )
        .prop_map(|(s1, s2, atom)| {
            let mut parts = vec![s1];
            if let Some(s) = s2 {
                let (a0, l0, _, _) = parts[0];
                parts.push((a0 + l0 + s.0.abs() * 0.3, s.1, s.2, s.3));
            }
            let total: f64 = parts.iter().map(|p| p.3).sum::<f64>() + atom.map_or(0.0, |a| a.1);
            let segments = parts
                .iter()
                .map(|&(a, len, slope, w)| {
                    // Mass w/total with profile 1 + slope * (y - a) / len.
                    let norm = len * (1.0 + slope / 2.0);
                    let c1 = w / total / norm * slope / len;
                    let c0 = w / total / norm - c1 * a;
                    Segment::new(a, a + len, vec![c0, c1])
                })
                .collect();
            let atoms = atom.map(|(x, w)| vec![Atom::new(x, w / total)]).unwrap_or_default();
            Measure::from_parts(atoms, segments).unwrap()
        })
        .prop_filter("negative mean", |m| m.mean() < -1e-3)
}

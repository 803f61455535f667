use num_traits::Zero;
use proptest::prelude::*;

use tautgen_core::exact::{rat, BigInt, QMatrix};
use tautgen_core::flag::{
    casimir_quadrics, fundamental_rep, highest_weight_submodule, segre_veronese, weyl_dimension, ParabolicChoice,
    RootDataA,
};
use tautgen_core::period::{period_series, period_series_with_numerator, verify_system};
use tautgen_core::taut::{build_enhanced, build_toric_gkz};
use tautgen_core::toric::{a_matrix, anticanonical_sections, class_group, sections, FanData};
use tautgen_core::FormalSeries;

fn fans() -> Vec<FanData> {
    vec![
        FanData::new(1, vec![vec![1], vec![-1]], None).unwrap(),
        FanData::projective_space(2),
        FanData::new(2, vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]], None).unwrap(),
        FanData::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, 1], vec![0, -1]], None).unwrap(),
    ]
}

/// P^2 with L = O(6): the torus acts on the O(3) numerators y^m by the
/// weight -m, the scaling direction acts trivially.
#[test]
fn enhanced_system_for_p2_with_o6() {
    let fan = FanData::projective_space(2);
    let a = a_matrix(&sections(&fan, &[2, 2, 2]).unwrap());
    assert_eq!(a.num_columns(), 28);
    let system = build_toric_gkz(&a).unwrap();
    let numerators = sections(&fan, &[1, 1, 1]).unwrap().laurent_exponents;
    assert_eq!(numerators.len(), 10);
    let m = numerators.len();
    let rho: Vec<QMatrix> = system
        .symmetry_ops()
        .iter()
        .map(|s| {
            let mut r = QMatrix::zeros(m, m);
            if let Some(row) = s.label.strip_prefix("torus:") {
                let row: usize = row.parse().unwrap();
                for (k, mu) in numerators.iter().enumerate() {
                    r[(k, k)] = rat(-mu[row - 1]);
                }
            }
            r
        })
        .collect();
    let enhanced = build_enhanced(&system, rho).unwrap();
    let periods: Vec<FormalSeries> = numerators
        .iter()
        .map(|mu| period_series_with_numerator(&a, 3, mu).unwrap().into_series())
        .collect();
    assert!(periods.iter().all(|p| !p.is_empty()));
    let report = enhanced.verify(&periods).unwrap();
    assert!(report.passed, "{:?}", report.checks.iter().filter(|c| !c.2).collect::<Vec<_>>());

    // the same tuple fails once rho is dropped
    let zero = vec![QMatrix::zeros(m, m); system.symmetry_ops().len()];
    assert!(!build_enhanced(&system, zero).unwrap().verify(&periods).unwrap().passed);
}

#[test]
fn gkz_annihilates_periods_of_every_fan() {
    for fan in fans() {
        let a = a_matrix(&anticanonical_sections(&fan).unwrap());
        let sys = build_toric_gkz(&a).unwrap();
        let series = period_series(&a, 5).unwrap();
        assert!(verify_system(&sys, series.series()).unwrap().passed, "{:?}", fan.rays());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn period_series_invariants(which in 0usize..4, order in 0usize..7) {
        let fan = &fans()[which];
        let a = a_matrix(&anticanonical_sections(fan).unwrap());
        let s = period_series(&a, order).unwrap();
        prop_assert!(s.check_invariants(&a).is_ok());
        for (e, _) in s.series().terms() {
            prop_assert_eq!(e.iter().sum::<i64>(), -1);
        }
    }

    #[test]
    fn characters_have_zero_class(which in 0usize..4, mu in prop::collection::vec(-5i64..=5, 2)) {
        let fan = &fans()[which];
        let g = class_group(fan);
        let n = fan.dimension();
        let d: Vec<i64> = fan.rays().iter().map(|r| r.iter().zip(&mu[..n]).map(|(a, b)| a * b).sum()).collect();
        prop_assert!(g.class_of(&d).is_zero());
    }

    #[test]
    fn lowering_span_has_weyl_dimension(
        n in 2usize..=4,
        mask in 1u32..8,
        coeffs in prop::collection::vec(1u32..=2, 3),
    ) {
        let root = RootDataA::new(n).unwrap();
        let complement: Vec<usize> = (1..n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        prop_assume!(!complement.is_empty());
        let p = ParabolicChoice::from_complement(&root, &complement).unwrap();
        let c = &coeffs[..complement.len()];
        let sv = segre_veronese(&root, &p, c, false).unwrap();
        prop_assume!(sv.dim() <= 120);
        let (sub, _) = highest_weight_submodule(sv.rep(), 200).unwrap();
        prop_assert_eq!(BigInt::from(sub.dim()), weyl_dimension(&root, sv.weight()).unwrap());
        prop_assert!(sub.check_axioms().is_ok());
    }

    #[test]
    fn quadrics_vanish_for_every_seed(seed in any::<u64>(), which in 0usize..3) {
        let (n, k) = [(4, 2), (5, 2), (3, 1)][which];
        let rep = fundamental_rep(n, k).unwrap();
        let qs = casimir_quadrics(&rep).unwrap();
        for pt in rep.sample_cone_points(4, seed).unwrap() {
            prop_assert!(qs.evaluate(&pt).iter().all(Zero::is_zero));
        }
    }
}

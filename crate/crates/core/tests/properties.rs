//! Deterministic property checks that are too slow or too specific for proptest.

use num_rational::BigRational;
use num_traits::One;

use udk_core::fractal::{
    khodak_fractal_partition, moran_dimension, vdc_fractal_partition, vdc_fractal_points, ElementarySweep, IFSSystem,
    Similarity,
};
use udk_core::khodak::{
    khodak_step_leaves, m_of_threshold, predicted_mr_rational, spectral_analysis, step_threshold, NODE_BUDGET,
};
use udk_core::probs::ProbabilityVector;
use udk_core::qmc::{mc_baseline, qmc_integrate, TestIntegrand};
use udk_core::refine::{kakutani_rule, ls_rule, RefinedPartition, RefinementRule};
use udk_core::sequences::{van_der_corput, Base};

fn r(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

#[test]
fn partition_discrepancy_tends_to_zero() {
    let rules = vec![
        RefinementRule::from_rationals(vec![r(1, 2), r(1, 2)]).unwrap(),
        RefinementRule::from_rationals(vec![r(1, 4), r(1, 4), r(1, 2)]).unwrap(),
        RefinementRule::from_rationals(vec![r(1, 3), r(2, 3)]).unwrap(),
        kakutani_rule(r(2, 5)).unwrap(),
        ls_rule(2, 1).unwrap(),
        RefinementRule::from_f64(vec![0.3, 0.7]).unwrap(),
    ];
    // D_n oscillates in the irrational case, so the trend is checked on
    // windows: the worst value once k > 10^4 must beat the worst value for
    // small k, and some step past k = 10^4 must fall below 0.01.
    for rule in &rules {
        let name = format!("{:?}", rule.probabilities().probs_f64());
        let mut p = RefinedPartition::trivial(rule);
        let (mut early, mut late, mut best_late) = (0.0f64, 0.0f64, f64::INFINITY);
        while p.k() <= 100_000 {
            p.refine_in_place().unwrap();
            let d = p.discrepancy().value;
            if (10..=1000).contains(&p.k()) {
                early = early.max(d);
            }
            if p.k() > 10_000 {
                late = late.max(d);
                best_late = best_late.min(d);
            }
        }
        assert!(late < early, "{name}: late max {late} vs early max {early}");
        assert!(best_late < 0.01, "{name}: min D past k = 10^4 is {best_late}");
    }
}

#[test]
fn rational_case_constant_is_stable() {
    for p in [vec![r(1, 2), r(1, 2)], vec![r(1, 4), r(1, 4), r(1, 2)]] {
        let pv = ProbabilityVector::from_rationals(p).unwrap();
        let sd = spectral_analysis(&pv).unwrap();
        let mut cs = Vec::new();
        for n in 10..=25 {
            let thr = step_threshold(&pv, n, NODE_BUDGET).unwrap();
            let m = m_of_threshold(&pv, &thr).unwrap() as f64;
            let pred = predicted_mr_rational(&sd, pv.m(), pv.len_f64(&thr));
            let rel = (m - pred).abs() / m;
            cs.push(rel / (m.powf(-sd.eta.min(1.0)) * m.ln().powi(sd.d as i32)));
        }
        let max = cs.iter().cloned().fold(0.0, f64::max);
        assert!(max <= 5.0, "{cs:?}");
    }
}

#[test]
fn fractal_probabilities_sum_to_one() {
    let unequal = IFSSystem::new(vec![
        Similarity::scale_shift(r(1, 2), r(0, 1)).unwrap(),
        Similarity::scale_shift(r(1, 4), r(3, 4)).unwrap(),
    ])
    .unwrap();
    let irr = IFSSystem::new(vec![
        Similarity::scale_shift(r(1, 2), r(0, 1)).unwrap(),
        Similarity::scale_shift(r(1, 3), r(2, 3)).unwrap(),
    ])
    .unwrap();
    let (sier, _) = IFSSystem::preset("sierpinski-right").unwrap();
    for n in 0..=10 {
        for sys in [&unequal, &irr, &sier] {
            let fp = khodak_fractal_partition(sys, n).unwrap();
            let s: f64 = fp.probabilities.iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n}: {s}");
        }
        if n <= 6 {
            let vp = vdc_fractal_partition(&sier, n).unwrap();
            assert!((vp.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn unequal_partition_matches_khodak_tree() {
    let sys = IFSSystem::new(vec![
        Similarity::scale_shift(r(1, 2), r(0, 1)).unwrap(),
        Similarity::scale_shift(r(1, 4), r(3, 4)).unwrap(),
    ])
    .unwrap();
    let fp0 = khodak_fractal_partition(&sys, 0).unwrap();
    let pv = fp0.letter_probs.clone();
    for n in 0..=14 {
        let fp = khodak_fractal_partition(&sys, n).unwrap();
        let mut got: Vec<Vec<u32>> = fp
            .sets
            .iter()
            .map(|w| (1..=2).map(|j| w.letters().iter().filter(|&&l| l == j).count() as u32).collect())
            .collect();
        let mut want: Vec<Vec<u32>> =
            khodak_step_leaves(&pv, n, NODE_BUDGET).unwrap().iter().map(|l| l.exponents(2)).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want, "n={n}");
    }
}

#[test]
fn moran_residual_and_closed_form() {
    let families: Vec<Vec<f64>> =
        vec![vec![0.5, 0.25], vec![0.5, 1.0 / 3.0], vec![0.2, 0.3, 0.4], vec![0.9, 0.05], vec![0.1; 7]];
    for c in &families {
        let s = moran_dimension(c).unwrap();
        let res: f64 = c.iter().map(|x| x.powf(s)).sum::<f64>() - 1.0;
        assert!(res.abs() < 1e-14, "{c:?}: {res}");
    }
    for (m, c) in [(2usize, 1.0 / 3.0), (3, 0.5), (4, 1.0 / 3.0), (5, 0.2), (8, 0.25)] {
        let s = moran_dimension(&vec![c; m]).unwrap();
        assert!((s - (m as f64).ln() / (1.0 / c).ln()).abs() < 1e-12);
    }
}

#[test]
fn elementary_bound_up_to_1e5() {
    let one = BigRational::one();
    for name in ["sierpinski-right", "cantor"] {
        let (sys, x0) = IFSSystem::preset(name).unwrap();
        let m = sys.m();
        let n_max = 100_000;
        let depth_for = |n: usize| ((n as f64).ln() / (m as f64).ln()).ceil() as usize + 1;
        let fp = vdc_fractal_points(&sys, &x0, n_max).unwrap();
        let mut sweep = ElementarySweep::new(m, depth_for(n_max)).unwrap();
        for (i, w) in fp.addresses.iter().enumerate() {
            sweep.push(w).unwrap();
            let n = i + 1;
            let d = sweep.value(depth_for(n)).unwrap().exact.unwrap();
            assert!(d * BigRational::from_integer(n.into()) <= one, "{name} N={n}");
        }
    }
}

#[test]
fn qmc_beats_mc() {
    let n = 1 << 12;
    let vdc = van_der_corput(n, Base::new(2).unwrap());
    for f in TestIntegrand::SHIPPED.iter().filter(|f| f.dim() == 1) {
        let q = (qmc_integrate(&vdc, f).unwrap() - f.exact_integral()).abs();
        let wins =
            (0..100u64).filter(|&seed| q < (mc_baseline(n, seed, f).unwrap() - f.exact_integral()).abs()).count();
        assert!(wins >= 90, "{}: {wins}/100", f.name());
    }
}

//! Property tests for the documented invariants.

use num_rational::BigRational;
use proptest::prelude::*;

use num_complex::Complex64;
use udk_core::discrepancy::{extreme_discrepancy_1d, star_discrepancy_1d, Breakpoints};
use udk_core::fractal::{apply_address, vdc_fractal_points, AddressWord, IFSSystem, Point};
use udk_core::khodak::{
    a_of_v, characteristic_residual, khodak_step_leaves, m_of_threshold, q1, spectral_analysis, step_threshold,
    NODE_BUDGET,
};
use udk_core::probs::ProbabilityVector;
use udk_core::qmc::sequential_random_reordering;
use udk_core::refine::{rho_refine_n, RefinedPartition, RefinementRule};
use udk_core::sequences::{halton, hammersley, radical_inverse, van_der_corput, weyl_sum, Base, PointSet};

fn r(a: u64, b: u64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// Exact probability vectors with small denominators.
fn exact_probs() -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec(1u64..6, 2..5).prop_map(|w| {
        let total: u64 = w.iter().sum();
        w.into_iter().map(|x| r(x, total)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vdc_prefix_is_permutation(b in 2u64..8, k in 1u32..5) {
        let base = Base::new(b).unwrap();
        let n = b.pow(k);
        let mut got: Vec<BigRational> = (0..n).map(|i| radical_inverse(i, base)).collect();
        got.sort();
        let want: Vec<BigRational> = (0..n).map(|j| r(j, n)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn weyl_sum_bounded(n in 1usize..200, h in 1i64..20) {
        let ps = van_der_corput(n, Base::new(3).unwrap());
        let w = weyl_sum(&ps, &[h]).unwrap();
        prop_assert!(w <= 1.0 + 1e-12);
    }

    #[test]
    fn discrepancy_bounds(xs in prop::collection::vec(0.0f64..=1.0, 1..60)) {
        let n = xs.len() as f64;
        let ps = PointSet::float(1, xs).unwrap();
        let s = star_discrepancy_1d(&ps).unwrap().value;
        let e = extreme_discrepancy_1d(&ps).unwrap().value;
        prop_assert!(s >= 1.0 / (2.0 * n) - 1e-12 && s <= 1.0 + 1e-12);
        prop_assert!(e >= 1.0 / n - 1e-12 && e <= 1.0 + 1e-12);
        prop_assert!(s <= e + 1e-12 && e <= 2.0 * s + 1e-12);
    }

    #[test]
    fn halton_in_unit_cube(n in 1usize..100) {
        let ps = halton(n, &[Base::new(2).unwrap(), Base::new(5).unwrap()]).unwrap();
        prop_assert!(ps.to_f64_flat().iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn refinement_nests(p in exact_probs(), n in 0usize..8) {
        let rule = RefinementRule::from_rationals(p).unwrap();
        let coarse = rho_refine_n(&rule, n).unwrap().breakpoints_exact().unwrap();
        let fine = rho_refine_n(&rule, n + 1).unwrap().breakpoints_exact().unwrap();
        prop_assert!(fine.len() > coarse.len());
        // Every coarse breakpoint survives refinement.
        for b in &coarse {
            prop_assert!(fine.binary_search(b).is_ok());
        }
        let total: BigRational = rho_refine_n(&rule, n + 1).unwrap().lengths().iter().map(|l| match l {
            udk_core::probs::Length::Exact(x) => x.clone(),
            _ => unreachable!(),
        }).sum();
        prop_assert_eq!(total, r(1, 1));
    }

    #[test]
    fn leaves_match_refinement(p in exact_probs(), n in 0usize..10) {
        let rule = RefinementRule::from_rationals(p).unwrap();
        let pv = rule.probabilities();
        let mut a: Vec<_> = khodak_step_leaves(pv, n, NODE_BUDGET).unwrap().into_iter().map(|l| l.length).collect();
        let mut b = rho_refine_n(&rule, n).unwrap().lengths();
        a.sort_by(|x, y| pv.cmp_len(x, y));
        b.sort_by(|x, y| pv.cmp_len(x, y));
        prop_assert_eq!(a, b);
        if n >= 1 {
            let thr = step_threshold(pv, n, NODE_BUDGET).unwrap();
            prop_assert_eq!(m_of_threshold(pv, &thr).unwrap() as usize, rho_refine_n(&rule, n).unwrap().k());
        }
    }

    #[test]
    fn a_of_v_monotone(p in exact_probs(), v in 0.0f64..400.0, dv in 0.0f64..50.0) {
        let pv = ProbabilityVector::from_rationals(p).unwrap();
        let a = a_of_v(&pv, v).unwrap();
        prop_assert!(a <= a_of_v(&pv, v + dv).unwrap());
        prop_assert_eq!(a == 0, v < 1.0);
    }

    #[test]
    fn length_extremes_bound_each_other(p in exact_probs(), n in 1usize..12) {
        let rule = RefinementRule::from_rationals(p).unwrap();
        let a1 = rho_refine_n(&rule, 1).unwrap().min_length();
        let part = rho_refine_n(&rule, n).unwrap();
        let (big, small) = (part.max_length(), part.min_length());
        prop_assert!(a1 * big <= small * (1.0 + 1e-12));
        prop_assert!(big < 1.0 / (a1 * n as f64));
    }

    #[test]
    fn exponents_are_addresses(p in exact_probs(), n in 1usize..8) {
        let rule = RefinementRule::from_rationals(p).unwrap();
        let pv = rule.probabilities();
        let part = rho_refine_n(&rule, n).unwrap();
        let lengths = part.lengths();
        for (i, len) in lengths.iter().enumerate() {
            prop_assert_eq!(part.exponents(i).len(), rule.m());
            prop_assert_eq!(&pv.length_of(part.exponents(i)), len);
        }
    }

    #[test]
    fn q1_is_periodic(lambda in 0.1f64..3.0, x in 0.0f64..10.0) {
        let a = q1(lambda, x);
        let b = q1(lambda, x + lambda);
        prop_assert!((a - b).abs() <= 1e-14 * a.max(1.0), "{} vs {}", a, b);
        prop_assert!(a > 0.0 && a <= lambda / (1.0 - (-lambda).exp()) + 1e-12);
    }

    #[test]
    fn spectral_roots_are_roots(n in prop::collection::vec(1u32..5, 2..5)) {
        let pv = ProbabilityVector::solve_single_base(n).unwrap();
        let sd = spectral_analysis(&pv).unwrap();
        let dom = Complex64::new((-sd.lambda).exp(), 0.0);
        prop_assert!(characteristic_residual(&sd.n, dom) < 1e-12);
        let total: f64 = sd.roots.iter().map(|(z, _)| characteristic_residual(&sd.n, *z)).sum();
        prop_assert!(total < 1e-10);
    }

    #[test]
    fn weyl_grid_identity(n in 1usize..80, h in 1i64..200) {
        prop_assume!(h % n as i64 != 0);
        let grid = PointSet::exact(1, (0..n as u64).map(|j| r(j, n as u64)).collect()).unwrap();
        prop_assert!(weyl_sum(&grid, &[h]).unwrap() < 1e-12);
    }

    #[test]
    fn hammersley_ranges(n in 1usize..120) {
        let ps = hammersley(n, &[Base::new(2).unwrap(), Base::new(3).unwrap()]).unwrap();
        for i in 0..n {
            let x = ps.point_f64(i);
            prop_assert!(x[0] > 0.0 && x[0] <= 1.0);
            prop_assert!(x[1..].iter().all(|c| (0.0..1.0).contains(c)));
        }
    }

    #[test]
    fn reordering_preserves_blocks(seed in any::<u64>(), sizes in prop::collection::vec(1u64..12, 1..5)) {
        let blocks: Vec<Breakpoints> = sizes.iter().map(|&k| Breakpoints::Exact((1..=k).map(|j| r(j, k)).collect())).collect();
        let ps = sequential_random_reordering(&blocks, seed).unwrap();
        let again = sequential_random_reordering(&blocks, seed).unwrap();
        prop_assert_eq!(&ps, &again);
        let mut at = 0;
        for (b, &k) in blocks.iter().zip(&sizes) {
            let mut got: Vec<BigRational> = (at..at + k as usize).map(|i| ps.point_exact(i).unwrap()[0].clone()).collect();
            got.sort();
            prop_assert_eq!(got, b.to_exact().unwrap());
            at += k as usize;
        }
        prop_assert_eq!(at, ps.len());
    }

    #[test]
    fn fractal_address_reproduces_point(n in 1usize..200) {
        let (sys, x0) = IFSSystem::preset("sierpinski-right").unwrap();
        let fp = vdc_fractal_points(&sys, &x0, n).unwrap();
        let i = n - 1;
        let x = apply_address(&sys, &fp.addresses[i], &x0).unwrap();
        prop_assert_eq!(x, Point::Exact(fp.points.point_exact(i).unwrap().to_vec()));
        prop_assert_eq!(&fp.addresses[i], &AddressWord::of_index(i as u64, 3));
    }

    #[test]
    fn khodak_counts_nondecreasing(p in exact_probs(), n in 1usize..10) {
        let pv = ProbabilityVector::from_rationals(p).unwrap();
        let a = m_of_threshold(&pv, &step_threshold(&pv, n, NODE_BUDGET).unwrap()).unwrap();
        let b = m_of_threshold(&pv, &step_threshold(&pv, n + 1, NODE_BUDGET).unwrap()).unwrap();
        prop_assert!(b > a);
    }
}

#[test]
fn trivial_partition_has_one_interval() {
    let rule = RefinementRule::from_rationals(vec![r(1, 2), r(1, 2)]).unwrap();
    assert_eq!(RefinedPartition::trivial(&rule).k(), 1);
}

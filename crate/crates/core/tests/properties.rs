use std::collections::BTreeMap;
use std::sync::Arc;

use pmix_core::bounds::depoisson_coefficient;
use pmix_core::chaos::{distinct_sum, sample_counts, CellChaos, CellGrid, CellUStatistic};
use pmix_core::distances::{h1_surrogate, tv_distance, wasserstein1, EmpiricalLaw, Pmf};
use pmix_core::geomgraph::{adjacent, count_induced, GraphPattern};
use pmix_core::kernel::{contract, symmetrize, DiscreteMeasure, SymKernel, Tensor};
use pmix_core::rng::replicate_rng;
use pmix_core::space::Configuration;
use pmix_core::stein::{discrete_taylor, portmanteau_constant, ChenSteinSolution};
use proptest::prelude::*;
use rand::Rng;

fn space(weights: Vec<f64>) -> Arc<DiscreteMeasure> {
    Arc::new(DiscreteMeasure::new(weights).unwrap())
}

/// Weights and a value vector long enough for any order up to 3.
fn cells_and_values() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=4).prop_flat_map(|m| {
        (
            prop::collection::vec(0.2f64..2.0, m),
            prop::collection::vec(-2.0f64..2.0, m * m * m),
            prop::collection::vec(-2.0f64..2.0, m * m * m),
        )
    })
}

fn kernel(sp: &Arc<DiscreteMeasure>, order: usize, vals: &[f64]) -> SymKernel {
    let n = sp.cells().pow(order as u32);
    symmetrize(&Tensor::new(sp.clone(), order, vals[..n].to_vec()).unwrap())
}

fn pmf(masses: &[f64]) -> Pmf {
    let total: f64 = masses.iter().sum();
    let map: BTreeMap<Vec<u64>, f64> = masses.iter().enumerate().map(|(i, p)| (vec![i as u64], p / total)).collect();
    Pmf::new(1, map).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetrize_is_idempotent((w, v, _) in cells_and_values(), order in 1usize..=3) {
        let sp = space(w);
        let f = kernel(&sp, order, &v);
        let again = symmetrize(f.tensor());
        for (a, b) in f.values().iter().zip(again.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_product_norm_is_multiplicative((w, v, u) in cells_and_values(), p in 1usize..=2, q in 1usize..=2) {
        let sp = space(w);
        let (f, g) = (kernel(&sp, p, &v), kernel(&sp, q, &u));
        let fg = contract(&f, &g, 0, 0).unwrap();
        let want = f.norm(2) * g.norm(2);
        prop_assert!((fg.norm(2) - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn contraction_is_linear_in_the_first_argument(
        (w, v, u) in cells_and_values(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        r in 0usize..=2,
        l_off in 0usize..=2,
    ) {
        let l = l_off.min(r);
        let sp = space(w);
        let f = kernel(&sp, 2, &v);
        let h = kernel(&sp, 2, &u);
        let g = kernel(&sp, 2, &v[sp.cells()..]);
        let mix = SymKernel::new(f.tensor().combine(a, h.tensor(), b).unwrap()).unwrap();
        let lhs = contract(&mix, &g, r, l).unwrap();
        let rhs = contract(&f, &g, r, l).unwrap().combine(a, &contract(&h, &g, r, l).unwrap(), b).unwrap();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn ustat_equals_its_chaos_expansion((w, v, _) in cells_and_values(), order in 1usize..=3, seed in any::<u64>()) {
        let grid = CellGrid::from_weights(w).unwrap();
        let h = kernel(grid.space(), order, &v);
        let u = CellUStatistic::new(grid.clone(), h.clone()).unwrap();
        let chaos = CellChaos::new(grid.clone(), u.decomposition().unwrap()).unwrap();
        for r in 0..5 {
            let counts = sample_counts(grid.space(), &mut replicate_rng(seed, r));
            let direct = distinct_sum(&h, &counts);
            prop_assert!((direct - chaos.eval_counts(&counts)).abs() < 1e-6 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn tv_is_a_metric(
        p in prop::collection::vec(0.0f64..1.0, 6),
        q in prop::collection::vec(0.0f64..1.0, 6),
        r in prop::collection::vec(0.0f64..1.0, 6),
    ) {
        prop_assume!(p.iter().sum::<f64>() > 0.1 && q.iter().sum::<f64>() > 0.1 && r.iter().sum::<f64>() > 0.1);
        let (p, q, r) = (pmf(&p), pmf(&q), pmf(&r));
        let pq = tv_distance(&p, &q).unwrap();
        prop_assert_eq!(pq, tv_distance(&q, &p).unwrap());
        prop_assert!(pq <= tv_distance(&p, &r).unwrap() + tv_distance(&r, &q).unwrap() + 1e-12);
        prop_assert!(tv_distance(&p, &p).unwrap() == 0.0);
    }

    #[test]
    fn wasserstein_of_a_shift_is_the_shift(xs in prop::collection::vec(-10.0f64..10.0, 1..40), c in -5i32..5) {
        // Integer shifts keep every sum exact in binary floating point
        // when the samples are themselves on a dyadic grid.
        let xs: Vec<f64> = xs.iter().map(|x| (x * 8.0).round() / 8.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x + c as f64).collect();
        prop_assert_eq!(wasserstein1(&xs, &ys).unwrap(), (c as f64).abs());
    }

    #[test]
    fn larger_dictionary_never_lowers_h1(seed in any::<u64>(), size in 2usize..8) {
        let mut rng = replicate_rng(seed, 0);
        let (mut p, mut q) = (EmpiricalLaw::new(1, 1), EmpiricalLaw::new(1, 1));
        for _ in 0..50 {
            let a: u64 = rng.random_range(0..4);
            let b: u64 = rng.random_range(0..4);
            p.push(&[a], &[rng.random_range(-2.0..2.0)]).unwrap();
            q.push(&[b], &[rng.random_range(-1.0..3.0)]).unwrap();
        }
        let small = h1_surrogate(&p, &q, size).unwrap();
        let large = h1_surrogate(&p, &q, 2 * size).unwrap();
        prop_assert!(large >= small);
    }

    #[test]
    fn connected_triples_split_into_triangles_and_paths(
        pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 0..40),
        t in 0.05f64..0.5,
    ) {
        let config = Configuration::from_points(2, &pts).unwrap();
        let tri = count_induced(&config, t, &GraphPattern::triangle()).unwrap();
        let path = count_induced(&config, t, &GraphPattern::path(3)).unwrap();
        let n = pts.len();
        let mut connected = 0u64;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let e = [adjacent(&pts[i], &pts[j], t), adjacent(&pts[i], &pts[k], t), adjacent(&pts[j], &pts[k], t)];
                    connected += (e.iter().filter(|x| **x).count() >= 2) as u64;
                }
            }
        }
        prop_assert_eq!(tri + path, connected);
    }

    #[test]
    fn chen_stein_residual_vanishes(lambda in 0.05f64..20.0, seed in any::<u64>()) {
        let psi = move |x: u64| {
            let h = pmix_core::rng::mix64(seed ^ pmix_core::rng::mix64(x));
            (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let sol = ChenSteinSolution::new(lambda, psi, 101).unwrap();
        for x in 0..=100 {
            prop_assert!(sol.residual(x).abs() < 1e-9);
        }
    }

    #[test]
    fn taylor_remainder_is_bounded(
        c in prop::collection::vec(-2.0f64..2.0, 6),
        a in prop::collection::vec(0u64..6, 2),
        x in prop::collection::vec(0u64..6, 2),
    ) {
        let f = |p: &[u64]| {
            let (u, v) = (p[0] as f64, p[1] as f64);
            c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * u * v + c[5] * v * v
        };
        let r = discrete_taylor(f, &a, &x).unwrap();
        prop_assert!(r.remainder.abs() <= r.bound + 1e-9);
    }

    #[test]
    fn constant_is_nonincreasing_in_each_lambda(
        ls in prop::collection::vec(0.05f64..10.0, 1..4),
        bump in 0.0f64..5.0,
        which in 0usize..3,
        m in 0usize..3,
    ) {
        let i = which % ls.len();
        let mut more = ls.clone();
        more[i] += bump;
        let c = (m == 1).then_some(1.5);
        let d = ls.len();
        let before = portmanteau_constant(d, m, &ls, c).unwrap();
        let after = portmanteau_constant(d, m, &more, c).unwrap();
        prop_assert!(after <= before + 1e-15);
    }

    #[test]
    fn depoisson_coefficient_in_unit_interval_and_monotone(n in 1u64..5_000, l in 0u64..4) {
        prop_assume!(l <= n);
        let b = depoisson_coefficient(n, l).unwrap();
        prop_assert!(b > 0.0 && b <= 1.0);
        prop_assert!(depoisson_coefficient(n + 1, l).unwrap() >= b - 1e-15);
    }
}

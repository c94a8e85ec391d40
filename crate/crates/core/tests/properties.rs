use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use evohom::dynamics::{build_coupling_matrix, integrate_rk4, TimeGrid};
use evohom::filtration::{eh_filtration, FiltrationParams, WeightedFlagFiltration};
use evohom::metrics::{bottleneck, distance, distance_to_empty, wasserstein, PNorm};
use evohom::oracle;
use evohom::persistence::{barcodes, Bar, Barcode};
use evohom::protein::{ols_fit, pearson, with_intercept};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected components of the subcomplex with value <= t, by flood fill.
fn components_at(f: &WeightedFlagFiltration, t: f64) -> usize {
    let m = f.len();
    let alive: Vec<bool> = (0..m).map(|v| f.vertex(v) <= t).collect();
    let mut seen = vec![false; m];
    let mut count = 0;
    for s in 0..m {
        if !alive[s] || seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for w in 0..m {
                if w != v && alive[w] && !seen[w] && f.edge(v, w) <= t {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

fn alive_at(b: &Barcode, t: f64) -> usize {
    b.bars.iter().filter(|bar| bar.birth <= t && t < bar.death).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn persistence_matches_dense_reduction(seed in any::<u64>(), m in 0usize..=7) {
        let f = oracle::random_flag_filtration(&mut rng(seed), m, 2);
        let fast = barcodes(&f, 2, u64::MAX).unwrap();
        let slow = oracle::dense_barcodes(&f, 2);
        for k in 0..=2 {
            prop_assert_eq!(oracle::multiset(&fast[k]), oracle::multiset(&slow[k]), "dimension {}", k);
        }
    }

    #[test]
    fn h0_counts_components(seed in any::<u64>(), m in 1usize..=8) {
        let f = oracle::random_flag_filtration(&mut rng(seed), m, 1);
        let bc = barcodes(&f, 1, u64::MAX).unwrap();
        let mut times: Vec<f64> = (0..m).map(|v| f.vertex(v)).collect();
        for j in 0..m {
            for k in 0..j {
                times.push(f.edge(j, k));
            }
        }
        for t in times.into_iter().filter(|t| *t < f.cap()) {
            prop_assert_eq!(alive_at(&bc[0], t), components_at(&f, t), "t = {}", t);
        }
    }

    #[test]
    fn barcodes_are_relabeling_invariant(seed in any::<u64>(), m in 1usize..=7) {
        let mut r = rng(seed);
        let f = oracle::random_flag_filtration(&mut r, m, 2);
        let mut perm: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            perm.swap(i, rand::Rng::gen_range(&mut r, 0..=i));
        }
        let a = barcodes(&f, 2, u64::MAX).unwrap();
        let b = barcodes(&f.permuted(&perm), 2, u64::MAX).unwrap();
        for k in 0..=2 {
            prop_assert_eq!(oracle::multiset(&a[k]), oracle::multiset(&b[k]));
        }
    }

    #[test]
    fn shifting_values_shifts_bars(seed in any::<u64>(), m in 1usize..=6, c in 0.0f64..4.0) {
        // Dyadic shifts keep every sum exact.
        let c = (c * 8.0).round() / 8.0;
        let f = oracle::random_flag_filtration(&mut rng(seed), m, 2);
        let a = barcodes(&f, 2, u64::MAX).unwrap();
        let b = barcodes(&f.shifted(c), 2, u64::MAX).unwrap();
        for k in 0..=2 {
            let moved: Vec<(f64, f64)> = oracle::multiset(&a[k]).iter().map(|(x, y)| (x + c, y + c)).collect();
            let got = oracle::multiset(&b[k]);
            prop_assert_eq!(moved.len(), got.len());
            for (p, q) in moved.iter().zip(&got) {
                prop_assert!((p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matching_distances_match_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = oracle::random_bars(&mut r, 4);
        let b = oracle::random_bars(&mut r, 4);
        for p in [PNorm::Finite(1.0), PNorm::Finite(2.0), PNorm::Finite(3.5), PNorm::Infinity] {
            let fast = distance(&a, &b, p).unwrap();
            let slow = oracle::brute_force_distance(&a, &b, p);
            prop_assert!((fast - slow).abs() <= 1e-9, "{:?}: {} vs {}", p, fast, slow);
        }
    }

    #[test]
    fn distances_are_metrics(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = oracle::random_bars(&mut r, 5);
        let b = oracle::random_bars(&mut r, 5);
        let c = oracle::random_bars(&mut r, 5);
        for p in [PNorm::Finite(1.0), PNorm::Finite(2.0), PNorm::Infinity] {
            let d = |x: &[Bar], y: &[Bar]| distance(x, y, p).unwrap();
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert!(d(&a, &b) >= 0.0);
            prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-12);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
            prop_assert!((d(&a, &[]) - distance_to_empty(&a, p).unwrap()).abs() <= 1e-12);
        }
        prop_assert!(bottleneck(&a, &b).unwrap() <= wasserstein(&a, &b, 2.0).unwrap() + 1e-12);
        prop_assert!(wasserstein(&a, &b, 2.0).unwrap() <= wasserstein(&a, &b, 1.0).unwrap() + 1e-12);
    }

    #[test]
    fn eh_filtration_is_monotone_and_equivariant(seed in any::<u64>(), n in 1usize..=7, eps_p in 0.001f64..0.3) {
        let mut r = rng(seed);
        let (set, points) = oracle::random_trajectory_set(&mut r, n, 200);
        let params = FiltrationParams { eps_p, eps_sync: 0.1, eps_d: 6.0 };
        let perturbed = rand::Rng::gen_range(&mut r, 0..n);
        let eh = eh_filtration(&set, &oracle::distances(&points), &params, perturbed, false, 2).unwrap();
        prop_assert!(eh.affected.contains(&perturbed));
        let f = &eh.filtration;
        for j in 0..f.len() {
            prop_assert!(f.vertex(j) <= eh.sync.time);
            for k in 0..f.len() {
                if j != k {
                    prop_assert!(f.vertex(j) <= f.edge(j, k) && f.edge(j, k) <= eh.sync.time);
                }
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(rand::Rng::gen_range(&mut r, 0..n));
        let (set2, points2) = oracle::permute_trajectory_set(&set, &points, &perm);
        let eh2 = eh_filtration(&set2, &oracle::distances(&points2), &params, perm[perturbed], false, 2).unwrap();
        prop_assert!(oracle::same_up_to_relabeling(&eh, &eh2, &perm));
    }

    #[test]
    fn barcode_json_round_trip(seed in any::<u64>(), essential in any::<bool>()) {
        let mut bars = oracle::random_bars(&mut rng(seed), 6);
        if essential && !bars.is_empty() {
            bars[0] = Bar::essential(bars[0].birth, 1.0_f64.max(bars[0].birth));
        }
        let b = Barcode { dim: 1, bars, essential_cap: Some(1.0) };
        let text = serde_json::to_string(&b).unwrap();
        let back: Barcode = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, b);
    }

    #[test]
    fn coupling_rows_sum_to_zero(seed in any::<u64>(), n in 1usize..=9) {
        let mut r = rng(seed);
        let (_, points) = oracle::random_trajectory_set(&mut r, n, 1);
        let a = build_coupling_matrix(&points, 8.0, 2.0).unwrap();
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| a.get(i, j)).sum();
            prop_assert!(row_sum.abs() <= 1e-12);
            for j in 0..n {
                prop_assert_eq!(a.get(i, j), a.get(j, i));
                if i != j {
                    prop_assert!(a.get(i, j) > 0.0 || points[i] != points[j]);
                }
            }
        }
    }

    #[test]
    fn regression_dominates_each_feature_and_ignores_rescaling(seed in any::<u64>(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let mut r = rng(seed);
        let rows = 12;
        let design: Vec<Vec<f64>> = (0..rows).map(|_| (0..3).map(|_| rand::Rng::gen_range(&mut r, -1.0..1.0)).collect()).collect();
        let y: Vec<f64> = design.iter().map(|x| x[0] - 0.5 * x[1] + rand::Rng::gen_range(&mut r, -0.3..0.3)).collect();
        let fit = ols_fit(&with_intercept(&design), &y).unwrap();
        for c in 0..3 {
            let col: Vec<f64> = design.iter().map(|x| x[c]).collect();
            prop_assert!(fit.pearson + 1e-9 >= pearson(&col, &y).unwrap().abs());
        }
        let rescaled: Vec<Vec<f64>> = design.iter().map(|x| vec![x[0] * scale + shift, x[1], x[2]]).collect();
        let fit2 = ols_fit(&with_intercept(&rescaled), &y).unwrap();
        prop_assert!((fit.pearson - fit2.pearson).abs() <= 1e-9);
    }
}

#[test]
fn rk4_is_fourth_order_on_linear_decay() {
    let err = |h: f64| {
        let t = integrate_rk4(|_, u: &[f64], out: &mut [f64]| out[0] = -u[0], &[1.0], 0.0, 1.0, h).unwrap();
        (t.last_state()[0] - (-1f64).exp()).abs()
    };
    let ratio = err(0.1) / err(0.05);
    assert!((ratio.log2() - 4.0).abs() < 0.15, "{ratio}");
}

#[test]
fn time_grid_covers_the_interval() {
    let g = TimeGrid::covering(0.0, 1.0, 0.3).unwrap();
    assert_eq!(g.time(g.len - 1), 1.0);
    assert!(g.step(g.len - 2) <= 0.3);
}

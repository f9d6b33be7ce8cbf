//! Invariants checked on random kernels.

mod common;

use common::*;
use proptest::prelude::*;
use ustatlab_core::bounds::{
    decoupling_comparison, moment_bound_from, tail_bound_from, variance_bound, BoundMode, NormSummary,
};
use ustatlab_core::norms::{bruteforce_norm_oracle, norm_kj, norm_kju};
use ustatlab_core::simulate::{draw_sample, exact_variance, ustat_sum, Draws, IndexRegion, SumAccumulator};
use ustatlab_core::{
    enumerate_partition_specs, CalibrationConstants, CoordSet, Kernel, Partition, PartitionSpec, SolverOptions,
    SumKind,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Spec seen by `h.permute_args(perm)`.
fn permute_spec(s: &PartitionSpec, perm: &[usize]) -> PartitionSpec {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    let map = |c: CoordSet| CoordSet::from_labels(c.labels().map(|l| inv[l - 1] + 1));
    let blocks = s.j.blocks().iter().map(|&b| map(b)).collect();
    PartitionSpec::new(map(s.k), Partition::from_blocks(blocks).unwrap())
}

fn reorder<T: Clone>(cols: &[Vec<T>], shift: usize) -> Vec<Vec<T>> {
    cols.iter()
        .map(|c| {
            let mut c = c.clone();
            c.rotate_left(shift);
            c.reverse();
            c
        })
        .collect()
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn projection_is_idempotent_and_canonical(seed in any::<u64>(), d in 1usize..=3, m in 2usize..=4, q in 1usize..=2) {
        let h = random_kernel(&mut rng(seed), d, m, q);
        let pi = h.hoeffding_project();
        prop_assert!(pi.is_canonical(1e-10).canonical);
        prop_assert!(max_diff(pi.values(), pi.hoeffding_project().values()) <= 1e-12);
    }

    #[test]
    fn projection_is_linear(seed in any::<u64>(), d in 1usize..=3, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut r = rng(seed);
        let h = random_kernel(&mut r, d, 3, 1);
        let g = Kernel::new(d, 1, random_kernel(&mut r, d, 3, 1).values().to_vec(), h.law().clone()).unwrap();
        let lhs = h.linear_combination(a, &g, b).unwrap().hoeffding_project();
        let rhs = h.hoeffding_project().linear_combination(a, &g.hoeffding_project(), b).unwrap();
        prop_assert!(max_diff(lhs.values(), rhs.values()) <= 1e-12);
    }

    #[test]
    fn spec_descriptor_round_trips(d in 1usize..=4) {
        for s in enumerate_partition_specs(d) {
            prop_assert_eq!(PartitionSpec::parse(&s.descriptor()), Some(s));
        }
    }

    #[test]
    fn kernel_json_round_trips(seed in any::<u64>(), d in 1usize..=3, q in 1usize..=3) {
        let h = random_kernel(&mut rng(seed), d, 3, q);
        prop_assert_eq!(Kernel::from_json(&h.to_json()).unwrap(), h);
    }

    #[test]
    fn full_is_off_plus_diagonal(seed in any::<u64>(), d in 1usize..=3, n in 1usize..=7, kind_ix in 0usize..4) {
        let kind = SumKind::ALL[kind_ix];
        let h = random_kernel(&mut rng(seed), d, 3, 1);
        let draws = draw_sample(&h, kind, n, seed, 0);
        let cols = kind.columns(d);
        let mut acc = SumAccumulator::new(kind, d, 3);
        for i in 0..n {
            let xs: Vec<usize> = (0..cols).map(|c| draws.columns[c][i]).collect();
            let eps: Vec<i8> = match &draws.signs {
                Some(s) => (0..cols).map(|c| s[c][i]).collect(),
                None => vec![1; cols],
            };
            acc.push(&xs, &eps);
        }
        let full = acc.multiplicities(IndexRegion::Full);
        let off = acc.multiplicities(IndexRegion::OffDiagonal);
        let diag = acc.multiplicities(IndexRegion::Diagonal);
        for ((f, o), g) in full.iter().zip(&off).zip(&diag) {
            prop_assert_eq!(*f, o + g);
        }
        let total: i128 = full.iter().sum();
        if !kind.is_randomized() {
            prop_assert_eq!(total, (n as i128).pow(d as u32));
        }
    }

    #[test]
    fn symmetric_sum_ignores_sample_order(seed in any::<u64>(), d in 1usize..=3, n in 2usize..=8, shift in 1usize..8) {
        let h = random_symmetric_kernel(&mut rng(seed), d, 3, 1);
        for kind in [SumKind::Undecoupled, SumKind::RandomizedUndecoupled] {
            let draws = draw_sample(&h, kind, n, seed, 1);
            let moved = Draws {
                columns: reorder(&draws.columns, shift % n),
                signs: draws.signs.as_ref().map(|s| reorder(s, shift % n)),
            };
            let a = ustat_sum(&h, kind, &draws).unwrap();
            let b = ustat_sum(&h, kind, &moved).unwrap();
            prop_assert!(max_diff(&a, &b) <= 1e-9 * (1.0 + a[0].abs()));
        }
    }

    #[test]
    fn decoupling_and_variance_hold(seed in any::<u64>(), m in 2usize..=3) {
        let g = random_kernel(&mut rng(seed), 2, m, 1);
        let (lhs, rhs) = decoupling_comparison(&g, 2, 2.0).unwrap();
        prop_assert!(lhs <= rhs);
        let v = exact_variance(&g, 2, SumKind::Decoupled).unwrap();
        prop_assert!(v <= variance_bound(&g, 2).unwrap() * (1.0 + 1e-12) + 1e-12);
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn norms_sit_between_oracle_and_l2(seed in any::<u64>(), d in 1usize..=3, m in 2usize..=3, q in 1usize..=2) {
        let h = random_kernel(&mut rng(seed), d, m, q);
        let l2 = h.second_moment().sqrt();
        for s in enumerate_partition_specs(d) {
            let v = norm_kj(&h, &s).unwrap().value;
            let lower = bruteforce_norm_oracle(&h, &s, None, 64, seed).unwrap();
            prop_assert!(v <= l2 * (1.0 + 1e-9), "{} above l2: {v} > {l2}", s.descriptor());
            prop_assert!(v >= lower - 1e-9 * (1.0 + lower), "{} below oracle: {v} < {lower}", s.descriptor());
        }
    }

    #[test]
    fn norms_are_homogeneous(seed in any::<u64>(), d in 1usize..=3, alpha in -5.0f64..5.0) {
        let h = random_kernel(&mut rng(seed), d, 3, 1);
        let scaled = h.scaled(alpha);
        for s in enumerate_partition_specs(d) {
            let a = norm_kj(&h, &s).unwrap().value;
            let b = norm_kj(&scaled, &s).unwrap().value;
            prop_assert!((b - alpha.abs() * a).abs() <= 1e-8 * (1.0 + b), "{}: {b} vs {}", s.descriptor(), alpha.abs() * a);
        }
    }

    #[test]
    fn truncated_norms_grow_with_u(seed in any::<u64>(), d in 1usize..=2, m in 2usize..=3) {
        let h = random_kernel(&mut rng(seed), d, m, 1);
        for s in enumerate_partition_specs(d) {
            let full = norm_kj(&h, &s).unwrap().value;
            let mut prev = 0.0;
            for u in [0.5, 1.0, 2.0, 4.0, 16.0] {
                let v = norm_kju(&h, &s, u).unwrap().value;
                prop_assert!(v >= prev - 1e-8 * (1.0 + prev), "{} u={u}: {v} < {prev}", s.descriptor());
                prop_assert!(v <= full * (1.0 + 1e-8) + 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn norms_follow_axis_permutations(seed in any::<u64>(), d in 2usize..=3, which in 0usize..6) {
        let h = random_kernel(&mut rng(seed), d, 3, 1);
        let perms = permutations(d);
        let perm = &perms[which % perms.len()];
        let g = h.permute_args(perm);
        for s in enumerate_partition_specs(d) {
            let a = norm_kj(&h, &s).unwrap().value;
            let b = norm_kj(&g, &permute_spec(&s, perm)).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a), "{}: {a} vs {b}", s.descriptor());
        }
    }

    #[test]
    fn norms_ignore_alphabet_relabeling(seed in any::<u64>(), d in 1usize..=2) {
        let h = random_kernel(&mut rng(seed), d, 3, 1);
        let g = h.relabel_alphabet(&[2, 0, 1]);
        for s in enumerate_partition_specs(d) {
            let a = norm_kj(&h, &s).unwrap().value;
            let b = norm_kj(&g, &s).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a));
        }
    }

    #[test]
    fn tail_bounds_decrease_and_moment_bounds_increase(seed in any::<u64>(), d in 1usize..=2) {
        let h = random_kernel(&mut rng(seed), d, 3, 1).hoeffding_project();
        let summary = NormSummary::new(&h, &SolverOptions::default()).unwrap();
        let consts = CalibrationConstants::default();
        let mut prev = f64::INFINITY;
        for t in [0.0, 0.1, 0.5, 1.0, 4.0, 16.0, 64.0] {
            let b = tail_bound_from(&summary, 8, t, &consts).unwrap().bound;
            prop_assert!(b <= prev);
            prev = b;
        }
        let mut prev = 0.0;
        for n in [1, 2, 4, 16, 64] {
            let b = moment_bound_from(&h, &summary, n, 3.0, &consts, BoundMode::Deterministic).unwrap().bound_value;
            prop_assert!(b >= prev);
            prev = b;
        }
    }
}

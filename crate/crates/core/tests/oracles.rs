//! Library results against independent computations on small instances.

mod common;

use common::*;
use ustatlab_core::bounds::{decoupling_comparison, variance_bound};
use ustatlab_core::indexing::iterate_indices;
use ustatlab_core::norms::{array_norm, bruteforce_norm_oracle, chaos_star_norm, norm_kj, norm_kju};
use ustatlab_core::simulate::{draw_sample, exact_moment, exact_variance, ustat_sum, Draws};
use ustatlab_core::{
    enumerate_partition_specs, enumerate_partitions, CoordSet, DiscreteDistribution, Kernel, Partition, PartitionSpec,
    SumKind,
};

#[test]
fn partition_counts_follow_bell_triangle() {
    let bell = bell_triangle(6);
    assert_eq!(bell, vec![1, 1, 2, 5, 15, 52, 203]);
    for d in 0..=6 {
        assert_eq!(enumerate_partitions(CoordSet::full(d)).len(), bell[d], "d = {d}");
    }
    for d in 1..=5 {
        let want: usize = (0..=d).map(|j| binom(d, j) * bell[d - j]).sum();
        assert_eq!(enumerate_partition_specs(d).len(), want, "d = {d}");
    }
}

/// `π_d h(x) = Σ_I (−1)^{d−|I|} E h(x_I, X_{I^c})` by direct summation.
fn projection_by_inclusion_exclusion(h: &Kernel) -> Vec<f64> {
    let (d, m, q) = (h.order(), h.alphabet_size(), h.dim());
    let p = h.law().probs();
    let cells = m.pow(d as u32);
    let mut out = vec![0.0; cells * q];
    let decode = |mut c: usize| {
        let mut x = vec![0usize; d];
        for k in (0..d).rev() {
            x[k] = c % m;
            c /= m;
        }
        x
    };
    let encode = |x: &[usize]| x.iter().fold(0, |acc, &a| acc * m + a);
    for c in 0..cells {
        let x = decode(c);
        for mask in 0u32..(1 << d) {
            // Coordinates in `mask` are kept at x, the rest are integrated.
            let sign = if (d as u32 - mask.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
            for y in 0..cells {
                let yv = decode(y);
                let mut z = x.clone();
                let mut w = 1.0;
                for k in 0..d {
                    if mask >> k & 1 == 0 {
                        z[k] = yv[k];
                        w *= p[yv[k]];
                    } else if yv[k] != 0 {
                        w = 0.0;
                    }
                }
                if w == 0.0 {
                    continue;
                }
                let zc = encode(&z);
                for j in 0..q {
                    out[c * q + j] += sign * w * h.cell(zc)[j];
                }
            }
        }
    }
    out
}

#[test]
fn projection_matches_inclusion_exclusion() {
    let mut r = rng(1);
    for i in 0..30 {
        let h = random_kernel(&mut r, 1 + i % 3, 2 + i % 3, 1 + i % 2);
        let want = projection_by_inclusion_exclusion(&h);
        let got = h.hoeffding_project();
        for (a, b) in got.values().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn bilinear_norm_matches_power_iteration_svd() {
    let mut r = rng(2);
    for i in 0..20 {
        let h = random_kernel(&mut r, 2, 2 + i % 4, 1);
        let got = norm_kj(&h, &bilinear_spec()).unwrap().value;
        let want = power_iteration_svd(&h);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
}

#[test]
fn product_kernel_factorizes() {
    let mut r = rng(3);
    for _ in 0..5 {
        let law = random_law(&mut r, 3);
        let f = random_kernel(&mut r, 1, 3, 1);
        let f = Kernel::new(1, 1, f.values().to_vec(), law.clone()).unwrap().hoeffding_project();
        let ef2 = f.second_moment();
        let h = Kernel::from_fn(2, 1, law, |x| vec![f.cell(x[0])[0] * f.cell(x[1])[0]]).unwrap();
        for s in enumerate_partition_specs(2) {
            let v = norm_kj(&h, &s).unwrap().value;
            assert!((v - ef2).abs() < 1e-8, "{}: {v} vs {ef2}", s.descriptor());
        }
    }
}

#[test]
fn truncated_example_against_bruteforce() {
    let law = DiscreteDistribution::new(vec![0.75, 0.25]).unwrap();
    let h = Kernel::new(1, 1, vec![-1.0, 3.0], law).unwrap();
    let s = spec(&[], &[&[1]]);
    for (u, want) in [(1.0, 1.5), (2.0, 3f64.sqrt())] {
        let oracle = bruteforce_norm_oracle(&h, &s, Some(u), 2000, 7).unwrap();
        let got = norm_kju(&h, &s, u).unwrap().value;
        assert!((oracle - want).abs() < 1e-6, "oracle {oracle}");
        assert!((got - want).abs() < 1e-6, "solver {got}");
    }
}

#[test]
fn chaos_and_array_norms_by_hand() {
    let mut r = rng(4);
    let k = random_kernel(&mut r, 1, 9, 1);
    let a = k.values().to_vec();
    let l2 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let v = chaos_star_norm(&a, 9, 1, 1, &PartitionSpec::full_k(1), 3.0).unwrap().value;
    assert!((v - l2).abs() < 1e-12);
    // Array operator norm of a matrix is its top singular value.
    let mat = random_kernel(&mut r, 2, 4, 1);
    let flat = Kernel::new(2, 1, mat.values().to_vec(), DiscreteDistribution::uniform(4)).unwrap();
    let part = Partition::from_blocks(vec![CoordSet::singleton(1), CoordSet::singleton(2)]).unwrap();
    let v = array_norm(mat.values(), 4, 2, &part).unwrap().value;
    // Whitening with uniform weights 1/4 scales the singular value by 1/4.
    assert!((v - 4.0 * power_iteration_svd(&flat)).abs() < 1e-8);
}

/// Sum over the index grid by direct loops.
fn naive_sum(h: &Kernel, kind: SumKind, draws: &Draws) -> Vec<f64> {
    let d = h.order();
    let n = draws.columns[0].len();
    let mut out = vec![0.0; h.dim()];
    for idx in iterate_indices(n, d, !kind.is_decoupled()) {
        let mut x = vec![0; d];
        let mut sign = 1.0;
        for k in 0..d {
            let col = if kind.is_decoupled() { k } else { 0 };
            x[k] = draws.columns[col][idx.0[k] - 1];
            if let Some(s) = &draws.signs {
                sign *= s[col][idx.0[k] - 1] as f64;
            }
        }
        for (o, v) in out.iter_mut().zip(h.at(&x)) {
            *o += sign * v;
        }
    }
    out
}

#[test]
fn count_sums_match_direct_loops() {
    let mut r = rng(5);
    for kind in SumKind::ALL {
        for d in 1..=3 {
            let h = random_kernel(&mut r, d, 3, 2);
            for n in [1, 2, 3, 6] {
                let draws = draw_sample(&h, kind, n, 11, d as u64);
                let got = ustat_sum(&h, kind, &draws).unwrap();
                let want = naive_sum(&h, kind, &draws);
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-9, "{kind} d={d} n={n}");
                }
            }
        }
    }
}

/// `E|S|^p` by enumerating samples and summing with direct loops.
fn brute_moment(h: &Kernel, n: usize, p: f64, kind: SumKind) -> f64 {
    let cols = kind.columns(h.order());
    let m = h.alphabet_size();
    let slots = n * cols;
    let sign_slots = if kind.is_randomized() { slots } else { 0 };
    let probs = h.law().probs();
    let mut total = 0.0;
    for code in 0..m.pow(slots as u32) {
        let mut c = code;
        let sym: Vec<usize> = (0..slots)
            .map(|_| {
                let a = c % m;
                c /= m;
                a
            })
            .collect();
        let w: f64 = sym.iter().map(|&a| probs[a]).product();
        for mask in 0..(1usize << sign_slots) {
            let columns = (0..cols).map(|k| sym[k * n..(k + 1) * n].to_vec()).collect();
            let signs = kind.is_randomized().then(|| {
                (0..cols)
                    .map(|k| (0..n).map(|i| if mask >> (k * n + i) & 1 == 1 { -1 } else { 1 }).collect())
                    .collect()
            });
            let s = naive_sum(h, kind, &Draws { columns, signs });
            let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            total += w / (1 << sign_slots) as f64 * norm.powf(p);
        }
    }
    total
}

#[test]
fn exact_moments_match_brute_force() {
    let mut r = rng(6);
    for kind in SumKind::ALL {
        let h = random_kernel(&mut r, 2, 2, 1);
        for p in [1.0, 2.0, 3.0] {
            let got = exact_moment(&h, 2, p, kind).unwrap();
            let want = brute_moment(&h, 2, p, kind);
            assert!((got - want).abs() < 1e-10 * want.max(1.0), "{kind} p={p}: {got} vs {want}");
        }
    }
}

#[test]
fn second_moment_identity_for_canonical_kernels() {
    let mut r = rng(7);
    for (d, m, n) in [(1, 3, 4), (2, 2, 2), (2, 3, 2), (2, 2, 3), (3, 2, 2)] {
        let h = random_kernel(&mut r, d, m, 2).hoeffding_project();
        let got = exact_moment(&h, n, 2.0, SumKind::Decoupled).unwrap();
        let want = (n as f64).powi(d as i32) * h.second_moment();
        assert!((got - want).abs() < 1e-12 * want.max(1.0), "d={d} m={m} n={n}");
    }
}

#[test]
fn variance_and_decoupling_on_enumerable_instances() {
    let mut r = rng(8);
    for _ in 0..10 {
        let g = random_kernel(&mut r, 2, 2, 1);
        for n in [2, 3] {
            let v = exact_variance(&g, n, SumKind::Decoupled).unwrap();
            assert!(v <= variance_bound(&g, n).unwrap() * (1.0 + 1e-12));
        }
        let (lhs, rhs) = decoupling_comparison(&g, 2, 2.0).unwrap();
        assert!(lhs <= rhs);
    }
    // d = 1: exact variance is n Var(g).
    let g = random_kernel(&mut r, 1, 3, 1);
    let mean = direct_mean(&g)[0];
    let var = g.second_moment() - mean * mean;
    let v = exact_variance(&g, 4, SumKind::Decoupled).unwrap();
    assert!((v - 4.0 * var).abs() < 1e-12);
}

#[test]
fn kernel_file_round_trip_is_bit_exact() {
    let mut r = rng(9);
    for _ in 0..10 {
        let h = random_kernel(&mut r, 2, 3, 2);
        let back = Kernel::from_json(&h.to_json()).unwrap();
        let again = Kernel::from_json(&back.to_json()).unwrap();
        assert_eq!(h.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), back.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(back, again);
    }
}

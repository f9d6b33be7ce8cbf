#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ustatlab_core::{CoordSet, DiscreteDistribution, Kernel, Partition, PartitionSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Law with every probability bounded away from zero.
pub fn random_law(rng: &mut ChaCha8Rng, m: usize) -> DiscreteDistribution {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    DiscreteDistribution::new(raw.iter().map(|x| x / total).collect()).unwrap()
}

pub fn random_kernel(rng: &mut ChaCha8Rng, d: usize, m: usize, q: usize) -> Kernel {
    let law = random_law(rng, m);
    let values = (0..m.pow(d as u32) * q).map(|_| rng.random_range(-1.0..1.0)).collect();
    Kernel::new(d, q, values, law).unwrap()
}

/// Symmetrization of a random kernel.
pub fn random_symmetric_kernel(rng: &mut ChaCha8Rng, d: usize, m: usize, q: usize) -> Kernel {
    let h = random_kernel(rng, d, m, q);
    let perms = permutations(d);
    let mut acc = Kernel::zeros(d, q, h.law().clone());
    for p in &perms {
        acc = acc.linear_combination(1.0, &h.permute_args(p), 1.0 / perms.len() as f64).unwrap();
    }
    acc
}

pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, d - 1);
            out.push(q);
        }
    }
    out
}

pub fn spec(k: &[usize], j: &[&[usize]]) -> PartitionSpec {
    let blocks = j.iter().map(|b| CoordSet::from_labels(b.iter().copied())).collect();
    PartitionSpec::new(CoordSet::from_labels(k.iter().copied()), Partition::from_blocks(blocks).unwrap())
}

/// `(∅, {{1},{2}})`.
pub fn bilinear_spec() -> PartitionSpec {
    spec(&[], &[&[1], &[2]])
}

/// Top singular value of `sqrt(p_x) h(x, y) sqrt(p_y)` by power iteration on
/// `B^T B`.
pub fn power_iteration_svd(h: &Kernel) -> f64 {
    let m = h.alphabet_size();
    let p = h.law().probs();
    let b: Vec<f64> = (0..m * m).map(|c| p[c / m].sqrt() * h.cell(c)[0] * p[c % m].sqrt()).collect();
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut sigma = 0.0;
    for _ in 0..5000 {
        let u: Vec<f64> = (0..m).map(|i| (0..m).map(|j| b[i * m + j] * v[j]).sum()).collect();
        let w: Vec<f64> = (0..m).map(|j| (0..m).map(|i| b[i * m + j] * u[i]).sum()).collect();
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nw == 0.0 {
            return 0.0;
        }
        sigma = nw.sqrt();
        v = w.iter().map(|x| x / nw).collect();
    }
    sigma
}

/// Bell numbers `B_0..=B_n` from the Bell triangle.
pub fn bell_triangle(n: usize) -> Vec<usize> {
    let mut out = vec![1];
    let mut row = vec![1usize];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            next.push(next.last().unwrap() + x);
        }
        out.push(next[0]);
        row = next;
    }
    out
}

pub fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `E h` computed by a direct loop over cells.
pub fn direct_mean(h: &Kernel) -> Vec<f64> {
    let mut out = vec![0.0; h.dim()];
    for c in 0..h.num_cells() {
        for (o, v) in out.iter_mut().zip(h.cell(c)) {
            *o += h.cell_prob(c) * v;
        }
    }
    out
}

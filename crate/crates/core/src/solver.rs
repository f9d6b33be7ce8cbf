//! Alternating maximization of a multilinear form over products of capped,
//! weighted balls.
//!
//! A [`Problem`] is a dense tensor `T` plus a list of factors. Each factor
//! owns a disjoint set of tensor axes and carries one variable vector indexed
//! by those axes. The objective is
//!
//! ```text
//! Σ_e T[e] Π_k f_k[loc_k(e)]
//! ```
//!
//! Entries of a factor are grouped (a group is a "cell" whose entries form a
//! vector, e.g. the `R^q` value of a Hilbert-valued test function). The
//! feasible set of a factor is
//!
//! ```text
//! Σ_g w_g |f_g|² ≤ B,   |f_g| ≤ u   (cap optional)
//! ```
//!
//! Maximizing a linear functional over that set has a closed form, computed
//! exactly in [`maximize_linear`] by water-filling over the group breakpoints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One block of variables.
#[derive(Clone, Debug)]
pub(crate) struct Factor {
    axes: Vec<usize>,
    /// Local index of every tensor entry.
    loc: Vec<u32>,
    len: usize,
    group_of: Vec<u32>,
    weights: Vec<f64>,
    budget: f64,
    cap: Option<f64>,
}

impl Factor {
    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn n_groups(&self) -> usize {
        self.weights.len()
    }
}

/// Description of a factor used to build a [`Problem`].
#[derive(Clone, Debug)]
pub(crate) struct FactorSpec {
    /// Tensor axes owned by the factor; local indices are row-major over
    /// them in this order.
    pub axes: Vec<usize>,
    /// Subset of `axes` that identifies a group.
    pub group_axes: Vec<usize>,
    /// Weight per group, row-major over `group_axes`.
    pub weights: Vec<f64>,
    pub budget: f64,
    pub cap: Option<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct Problem {
    dims: Vec<usize>,
    strides: Vec<usize>,
    tensor: Vec<f64>,
    factors: Vec<Factor>,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Random restarts in addition to the spectral warm start.
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Relative improvement below which a run is declared converged.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { restarts: 8, max_sweeps: 500, tol: 1e-10, seed: 0x5eed_1234 }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub value: f64,
    pub factors: Vec<Vec<f64>>,
    pub converged: bool,
    pub gap: f64,
    pub runs: usize,
}

impl Problem {
    pub(crate) fn new(dims: &[usize], tensor: Vec<f64>, specs: &[FactorSpec]) -> Problem {
        let total: usize = dims.iter().product();
        assert_eq!(tensor.len(), total, "tensor does not match dims");
        let mut owned = vec![false; dims.len()];
        for s in specs {
            for &a in &s.axes {
                assert!(!owned[a], "axis {a} owned twice");
                owned[a] = true;
            }
        }
        assert!(owned.iter().all(|&o| o), "every axis must belong to a factor");

        let strides = strides_of(dims);
        let factors = specs
            .iter()
            .map(|s| {
                let len: usize = s.axes.iter().map(|&a| dims[a]).product();
                let n_groups: usize = s.group_axes.iter().map(|&a| dims[a]).product();
                assert_eq!(s.weights.len(), n_groups, "weights do not match groups");
                let mut loc = Vec::with_capacity(total);
                for e in 0..total {
                    let l = s.axes.iter().fold(0usize, |acc, &a| acc * dims[a] + (e / strides[a]) % dims[a]);
                    loc.push(l as u32);
                }
                // Group of each local index.
                let local_dims: Vec<usize> = s.axes.iter().map(|&a| dims[a]).collect();
                let local_strides = strides_of(&local_dims);
                let mut group_of = Vec::with_capacity(len);
                for l in 0..len {
                    let g = s.group_axes.iter().fold(0usize, |acc, &ga| {
                        let pos = s.axes.iter().position(|&a| a == ga).expect("group axis owned by factor");
                        acc * dims[ga] + (l / local_strides[pos]) % local_dims[pos]
                    });
                    group_of.push(g as u32);
                }
                Factor { axes: s.axes.clone(), loc, len, group_of, weights: s.weights.clone(), budget: s.budget, cap: s.cap }
            })
            .collect();
        Problem { dims: dims.to_vec(), strides, tensor, factors }
    }

    pub(crate) fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub(crate) fn objective(&self, vars: &[Vec<f64>]) -> f64 {
        self.tensor
            .iter()
            .enumerate()
            .filter(|(_, t)| **t != 0.0)
            .map(|(e, &t)| t * self.factors.iter().zip(vars).map(|(f, v)| v[f.loc[e] as usize]).product::<f64>())
            .sum()
    }

    /// Gradient of the objective with respect to factor `k`.
    fn contract(&self, k: usize, vars: &[Vec<f64>]) -> Vec<f64> {
        let fk = &self.factors[k];
        let mut c = vec![0.0; fk.len];
        for (e, &t) in self.tensor.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let mut prod = t;
            for (l, (f, v)) in self.factors.iter().zip(vars).enumerate() {
                if l != k {
                    prod *= v[f.loc[e] as usize];
                }
            }
            c[fk.loc[e] as usize] += prod;
        }
        c
    }

    /// Scales an arbitrary vector into the feasible set of factor `k`.
    pub(crate) fn make_feasible(&self, k: usize, v: &mut [f64]) {
        let f = &self.factors[k];
        let mut gnorm2 = vec![0.0; f.n_groups()];
        for (l, x) in v.iter_mut().enumerate() {
            let g = f.group_of[l] as usize;
            if f.weights[g] == 0.0 {
                *x = 0.0;
            }
            gnorm2[g] += *x * *x;
        }
        if let Some(u) = f.cap {
            for (l, x) in v.iter_mut().enumerate() {
                let gn = gnorm2[f.group_of[l] as usize].sqrt();
                if gn > u {
                    *x *= u / gn;
                }
            }
            gnorm2.iter_mut().for_each(|n2| *n2 = n2.min(u * u));
        }
        let mass: f64 = gnorm2.iter().zip(&f.weights).map(|(n2, w)| n2 * w).sum();
        if mass > f.budget {
            let s = (f.budget / mass).sqrt();
            v.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// Clips to the cap, then rescales onto the boundary of the feasible set
    /// (as far as the caps allow).
    pub(crate) fn scale_to_boundary(&self, k: usize, v: &mut [f64]) {
        self.make_feasible(k, v);
        let f = &self.factors[k];
        let mut gnorm2 = vec![0.0; f.n_groups()];
        for (l, x) in v.iter().enumerate() {
            gnorm2[f.group_of[l] as usize] += x * x;
        }
        let mass: f64 = gnorm2.iter().zip(&f.weights).map(|(n2, w)| n2 * w).sum();
        if mass == 0.0 {
            return;
        }
        let mut s = (f.budget / mass).sqrt();
        if let Some(u) = f.cap {
            for n2 in gnorm2.iter().filter(|n2| **n2 > 0.0) {
                s = s.min(u / n2.sqrt());
            }
        }
        v.iter_mut().for_each(|x| *x *= s);
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..self.factors.len())
            .map(|k| {
                let mut v: Vec<f64> = (0..self.factors[k].len).map(|_| rng.random_range(-1.0..1.0)).collect();
                self.make_feasible(k, &mut v);
                v
            })
            .collect()
    }

    /// Top left singular vector of each factor's unfolding (rows whitened by
    /// the group weights), mapped back and scaled into the feasible set.
    fn spectral_start(&self, seed: u64) -> Vec<Vec<f64>> {
        let total = self.tensor.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        (0..self.factors.len())
            .map(|k| {
                let f = &self.factors[k];
                let row_scale: Vec<f64> = (0..f.len)
                    .map(|l| {
                        let w = f.weights[f.group_of[l] as usize];
                        if w > 0.0 {
                            1.0 / w.sqrt()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                // Column index of entry e: e with this factor's coordinates removed,
                // realized as (e - offset) using a dense scratch of size `total`.
                let offset = self.local_offsets(k);
                let mut v: Vec<f64> = (0..f.len).map(|_| rng.random_range(0.5..1.5)).collect();
                let mut col = vec![0.0; total];
                for _ in 0..200 {
                    col.iter_mut().for_each(|x| *x = 0.0);
                    for (e, &t) in self.tensor.iter().enumerate() {
                        if t != 0.0 {
                            let l = f.loc[e] as usize;
                            col[e - offset[e]] += t * row_scale[l] * v[l];
                        }
                    }
                    let mut next = vec![0.0; f.len];
                    for (e, &t) in self.tensor.iter().enumerate() {
                        if t != 0.0 {
                            let l = f.loc[e] as usize;
                            next[l] += t * row_scale[l] * col[e - offset[e]];
                        }
                    }
                    let n = next.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n == 0.0 {
                        break;
                    }
                    next.iter_mut().for_each(|x| *x /= n);
                    v = next;
                }
                let mut out: Vec<f64> = v.iter().zip(&row_scale).map(|(a, s)| a * s).collect();
                self.make_feasible(k, &mut out);
                out
            })
            .collect()
    }

    /// For every tensor entry, the part of its flat index contributed by the
    /// axes of factor `k`; `e - offset[e]` identifies the unfolding column.
    fn local_offsets(&self, k: usize) -> Vec<usize> {
        let axes = &self.factors[k].axes;
        (0..self.tensor.len())
            .map(|e| axes.iter().map(|&a| (e / self.strides[a]) % self.dims[a] * self.strides[a]).sum())
            .collect()
    }

    fn run(&self, mut vars: Vec<Vec<f64>>, opts: &SolverOptions) -> Solution {
        let mut value = self.objective(&vars);
        let mut converged = false;
        let mut gap = f64::INFINITY;
        let mut sweeps = 0;
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            let mut sweep_value = value;
            for k in 0..self.factors.len() {
                let c = self.contract(k, &vars);
                if let Some((f, v)) = maximize_linear(&self.factors[k], &c) {
                    vars[k] = f;
                    sweep_value = v;
                }
            }
            let improvement = sweep_value - value;
            value = sweep_value;
            gap = improvement.abs();
            if improvement <= opts.tol * value.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        Solution { value, factors: vars, converged, gap, runs: 1 }
    }

    /// Multi-start alternating maximization. Candidate order: supplied warm
    /// starts, the spectral start, then `opts.restarts` random starts. The
    /// best value wins; ties go to the earliest candidate.
    pub(crate) fn solve(&self, opts: &SolverOptions, warm: &[Vec<Vec<f64>>]) -> Solution {
        let mut starts: Vec<Vec<Vec<f64>>> = warm.to_vec();
        for s in starts.iter_mut() {
            for (k, v) in s.iter_mut().enumerate() {
                self.make_feasible(k, v);
            }
        }
        if self.factors.len() > 1 {
            starts.push(self.spectral_start(opts.seed));
            for r in 0..opts.restarts {
                let mut rng = ChaCha8Rng::seed_from_u64(crate::rng::mix(opts.seed, r as u64 + 1, 0x11, 0));
                starts.push(self.random_start(&mut rng));
            }
        } else {
            // A single factor is solved exactly by one linear maximization.
            starts.push(vec![vec![0.0; self.factors[0].len]]);
        }
        let runs = starts.len();
        let results: Vec<Solution> = starts.into_par_iter().map(|s| self.run(s, opts)).collect();
        let mut best = results
            .into_iter()
            .reduce(|best, cand| if cand.value > best.value { cand } else { best })
            .expect("at least one start");
        best.runs = runs;
        self.normalize_signs(&mut best.factors);
        best
    }

    /// Makes the first significant entry of every factor after the first
    /// positive, compensating on the first factor.
    fn normalize_signs(&self, vars: &mut [Vec<f64>]) {
        let mut flip_first = false;
        for v in vars.iter_mut().skip(1) {
            if let Some(x) = v.iter().find(|x| x.abs() > 1e-300) {
                if *x < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                    flip_first = !flip_first;
                }
            }
        }
        if flip_first {
            if let Some(v) = vars.first_mut() {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
}

/// Maximizes `⟨c, f⟩` over the feasible set of `factor`. Returns `None` when
/// `c` vanishes on every positive-weight group (any feasible `f` is optimal).
pub(crate) fn maximize_linear(factor: &Factor, c: &[f64]) -> Option<(Vec<f64>, f64)> {
    let ng = factor.n_groups();
    let mut cg2 = vec![0.0; ng];
    for (l, &x) in c.iter().enumerate() {
        cg2[factor.group_of[l] as usize] += x * x;
    }
    let active: Vec<usize> = (0..ng).filter(|&g| factor.weights[g] > 0.0 && cg2[g] > 0.0).collect();
    if active.is_empty() {
        return None;
    }
    let s: f64 = active.iter().map(|&g| cg2[g] / factor.weights[g]).sum();
    let t = (factor.budget / s).sqrt();

    // Radius |f_g| per group.
    let mut radius = vec![0.0; ng];
    let uncapped_ok = match factor.cap {
        None => true,
        Some(u) => active.iter().all(|&g| t * cg2[g].sqrt() / factor.weights[g] <= u),
    };
    if uncapped_ok {
        for &g in &active {
            radius[g] = t * cg2[g].sqrt() / factor.weights[g];
        }
    } else {
        let u = factor.cap.expect("capped branch");
        water_fill(factor, &cg2, &active, u, &mut radius);
    }

    let mut f = vec![0.0; c.len()];
    let mut value = 0.0;
    for (l, &x) in c.iter().enumerate() {
        let g = factor.group_of[l] as usize;
        if radius[g] > 0.0 {
            let y = radius[g] * x / cg2[g].sqrt();
            f[l] = y;
            value += x * y;
        }
    }
    Some((f, value))
}

/// Solves `Σ_g w_g min(u, t a_g)² = B` for `t` with `a_g = |c_g| / w_g`,
/// exactly, by scanning the sorted breakpoints `u / a_g`.
fn water_fill(factor: &Factor, cg2: &[f64], active: &[usize], u: f64, radius: &mut [f64]) {
    let w = &factor.weights;
    let a = |g: usize| cg2[g].sqrt() / w[g];
    let mut order: Vec<usize> = active.to_vec();
    // Largest a_g saturates first.
    order.sort_by(|&x, &y| a(y).partial_cmp(&a(x)).unwrap().then(x.cmp(&y)));
    let total_cap: f64 = order.iter().map(|&g| w[g] * u * u).sum();
    if total_cap <= factor.budget {
        for &g in &order {
            radius[g] = u;
        }
        return;
    }
    let mut capped_mass = 0.0;
    let mut rest: f64 = order.iter().map(|&g| w[g] * a(g) * a(g)).sum();
    for (j, &g) in order.iter().enumerate() {
        // Groups order[..j] sit at the cap; solve for t on the rest.
        let t = ((factor.budget - capped_mass).max(0.0) / rest).sqrt();
        if t * a(g) <= u {
            for &h in &order[..j] {
                radius[h] = u;
            }
            for &h in &order[j..] {
                radius[h] = t * a(h);
            }
            return;
        }
        capped_mass += w[g] * u * u;
        rest -= w[g] * a(g) * a(g);
    }
    for &g in &order {
        radius[g] = u;
    }
}

fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

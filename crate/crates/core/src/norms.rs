//! Partition-indexed norms.
//!
//! For a kernel `h` and a pair `(K, J)` the norm `‖h‖_{K,J}` is the supremum
//! of `E ⟨h(X), g(X_K)⟩ Π_j f_j(X_{J_j})` over test functions with unit second
//! moments; the truncated variant `‖h‖_{K,J,u}` additionally caps every test
//! function by `u` in sup norm. On a finite alphabet both are finite
//! dimensional multilinear maximizations, solved by alternating maximization
//! (see [`crate::solver`]) with a spectral warm start plus random restarts.
//!
//! Array-level variants share the same engine: [`array_norm`] for explicit
//! real arrays, [`replicated_array_norm`] for the constant array `h_i = h`, and
//! [`chaos_star_norm`] for the starred norms with per-slice constraints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::indexing::{CoordSet, Partition, PartitionSpec};
use crate::kernel::{decode_into, encode, Kernel};
use crate::solver::{FactorSpec, Problem, Solution, SolverOptions};
use crate::NormError;

/// Largest total feasible-space dimension accepted by the brute-force oracle.
pub const ORACLE_DIM_LIMIT: usize = 64;

/// Test functions attaining (a lower estimate of) a partition norm.
///
/// `g` holds `g(x_K) ∈ R^q` row-major over `Σ^K` then the `R^q` coordinate
/// when `K ≠ ∅`; otherwise `phi` holds the vector `φ ∈ R^q`. `f[j]` holds
/// `f_j(x_{J_j})` row-major over `Σ^{J_j}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunctionBundle {
    pub g: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormResult {
    pub value: f64,
    pub certificate: TestFunctionBundle,
    pub restarts_used: usize,
    pub converged: bool,
    pub gap_estimate: f64,
}

/// Value of an array-level norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArrayNormResult {
    pub value: f64,
    pub converged: bool,
    pub gap_estimate: f64,
}

impl From<&Solution> for ArrayNormResult {
    fn from(s: &Solution) -> Self {
        ArrayNormResult { value: s.value.max(0.0), converged: s.converged, gap_estimate: s.gap }
    }
}

fn check_spec(spec: &PartitionSpec, d: usize) -> Result<(), NormError> {
    if spec.is_valid_for(d) {
        Ok(())
    } else {
        Err(NormError::InvalidSpec { spec: spec.to_string(), d })
    }
}

/// Product weights `Π_k p(x_k)` over `Σ^s`, row-major.
fn block_weights(probs: &[f64], s: usize) -> Vec<f64> {
    let m = probs.len();
    let mut x = vec![0usize; s];
    (0..m.pow(s as u32))
        .map(|c| {
            decode_into(c, m, &mut x);
            x.iter().map(|&a| probs[a]).product()
        })
        .collect()
}

/// The law-weighted problem for `(h, spec)`: tensor `P(x) h(x)` with axes
/// `x_1..x_d` then the `R^q` axis; factor 0 is `g` (or `φ`), then the blocks.
fn kernel_problem(h: &Kernel, spec: &PartitionSpec, cap: Option<f64>) -> Problem {
    let d = h.order();
    let m = h.alphabet_size();
    let q = h.dim();
    let probs = h.law().probs();
    let mut tensor = Vec::with_capacity(h.values().len());
    for cell in 0..h.num_cells() {
        let p = h.cell_prob(cell);
        tensor.extend(h.cell(cell).iter().map(|v| p * v));
    }
    let mut dims = vec![m; d];
    dims.push(q);
    let mut specs = Vec::with_capacity(spec.deg() + 1);
    if spec.k.is_empty() {
        specs.push(FactorSpec { axes: vec![d], group_axes: vec![], weights: vec![1.0], budget: 1.0, cap: None });
    } else {
        let mut axes = spec.k.axes();
        let group_axes = axes.clone();
        axes.push(d);
        specs.push(FactorSpec {
            axes,
            group_axes,
            weights: block_weights(probs, spec.k.len()),
            budget: 1.0,
            cap,
        });
    }
    for b in spec.j.blocks() {
        specs.push(FactorSpec {
            axes: b.axes(),
            group_axes: b.axes(),
            weights: block_weights(probs, b.len()),
            budget: 1.0,
            cap,
        });
    }
    Problem::new(&dims, tensor, &specs)
}

fn bundle_from_vars(spec: &PartitionSpec, vars: Vec<Vec<f64>>) -> TestFunctionBundle {
    let mut it = vars.into_iter();
    let first = it.next().expect("factor for g");
    let (g, phi) = if spec.k.is_empty() { (None, Some(first)) } else { (Some(first), None) };
    TestFunctionBundle { g, phi, f: it.collect() }
}

fn vars_from_bundle(b: &TestFunctionBundle) -> Vec<Vec<f64>> {
    let mut out = vec![b.g.clone().or_else(|| b.phi.clone()).unwrap_or_default()];
    out.extend(b.f.iter().cloned());
    out
}

/// `E ⟨h(X), g(X_K)⟩ Π_j f_j(X_{J_j})`, by direct summation over `Σ^d`.
pub fn evaluate_objective(h: &Kernel, spec: &PartitionSpec, bundle: &TestFunctionBundle) -> f64 {
    let d = h.order();
    let m = h.alphabet_size();
    let q = h.dim();
    let k_axes = spec.k.axes();
    let j_axes: Vec<Vec<usize>> = spec.j.blocks().iter().map(|b| b.axes()).collect();
    let mut x = vec![0usize; d];
    let mut total = 0.0;
    for cell in 0..h.num_cells() {
        let p = h.cell_prob(cell);
        if p == 0.0 {
            continue;
        }
        decode_into(cell, m, &mut x);
        let hv = h.cell(cell);
        let inner: f64 = match (&bundle.g, &bundle.phi) {
            (Some(g), _) => {
                let gi = k_axes.iter().fold(0usize, |acc, &a| acc * m + x[a]);
                hv.iter().zip(&g[gi * q..(gi + 1) * q]).map(|(a, b)| a * b).sum()
            }
            (None, Some(phi)) => hv.iter().zip(phi).map(|(a, b)| a * b).sum(),
            (None, None) => 0.0,
        };
        let prod: f64 = j_axes
            .iter()
            .zip(&bundle.f)
            .map(|(axes, f)| f[axes.iter().fold(0usize, |acc, &a| acc * m + x[a])])
            .product();
        total += p * inner * prod;
    }
    total
}

/// Checks the second-moment constraints (and caps, when `u` is given) of a
/// bundle within `tol`.
pub fn bundle_is_feasible(
    h: &Kernel,
    spec: &PartitionSpec,
    bundle: &TestFunctionBundle,
    u: Option<f64>,
    tol: f64,
) -> bool {
    let probs = h.law().probs();
    let q = h.dim();
    let cap_ok = |n: f64| u.is_none_or(|u| n <= u + tol);
    if let Some(g) = &bundle.g {
        let w = block_weights(probs, spec.k.len());
        let mut mass = 0.0;
        for (c, chunk) in g.chunks(q).enumerate() {
            let n2: f64 = chunk.iter().map(|v| v * v).sum();
            mass += w[c] * n2;
            if w[c] > 0.0 && !cap_ok(n2.sqrt()) {
                return false;
            }
        }
        if mass > 1.0 + tol {
            return false;
        }
    }
    if let Some(phi) = &bundle.phi {
        if phi.iter().map(|v| v * v).sum::<f64>() > 1.0 + tol {
            return false;
        }
    }
    for (b, f) in spec.j.blocks().iter().zip(&bundle.f) {
        let w = block_weights(probs, b.len());
        let mass: f64 = f.iter().zip(&w).map(|(v, w)| w * v * v).sum();
        if mass > 1.0 + tol || f.iter().zip(&w).any(|(v, w)| *w > 0.0 && !cap_ok(v.abs())) {
            return false;
        }
    }
    true
}

/// `‖h‖_{K,J}` with default solver options.
pub fn norm_kj(h: &Kernel, spec: &PartitionSpec) -> Result<NormResult, NormError> {
    norm_kj_with(h, spec, &SolverOptions::default())
}

pub fn norm_kj_with(h: &Kernel, spec: &PartitionSpec, opts: &SolverOptions) -> Result<NormResult, NormError> {
    check_spec(spec, h.order())?;
    if spec.k == CoordSet::full(h.order()) {
        return Ok(full_k_norm(h));
    }
    let problem = kernel_problem(h, spec, None);
    Ok(finish(spec, problem.solve(opts, &[])))
}

/// `({1..d}, ∅)`: the L² norm, with certificate `g = h / sqrt(E|h|²)`.
fn full_k_norm(h: &Kernel) -> NormResult {
    let value = h.second_moment().sqrt();
    let g = (0..h.num_cells())
        .flat_map(|c| {
            let live = value > 0.0 && h.cell_prob(c) > 0.0;
            h.cell(c).iter().map(move |v| if live { v / value } else { 0.0 })
        })
        .collect();
    NormResult {
        value,
        certificate: TestFunctionBundle { g: Some(g), phi: None, f: Vec::new() },
        restarts_used: 1,
        converged: true,
        gap_estimate: 0.0,
    }
}

fn finish(spec: &PartitionSpec, sol: Solution) -> NormResult {
    NormResult {
        value: sol.value.max(0.0),
        restarts_used: sol.runs,
        converged: sol.converged,
        gap_estimate: sol.gap,
        certificate: bundle_from_vars(spec, sol.factors),
    }
}

/// `‖h‖_{K,J,u}` with default solver options.
pub fn norm_kju(h: &Kernel, spec: &PartitionSpec, u: f64) -> Result<NormResult, NormError> {
    norm_kju_with(h, spec, u, &SolverOptions::default(), None)
}

/// `‖h‖_{K,J,u}`; `warm` (typically the certificate at a smaller `u`, which
/// stays feasible) is tried before the default starts.
///
/// For `K = ∅` the vector `φ` is constrained by `|φ| ≤ 1` only.
pub fn norm_kju_with(
    h: &Kernel,
    spec: &PartitionSpec,
    u: f64,
    opts: &SolverOptions,
    warm: Option<&TestFunctionBundle>,
) -> Result<NormResult, NormError> {
    check_spec(spec, h.order())?;
    if !(u > 0.0) {
        return Err(NormError::InvalidArgument(format!("truncation level u = {u} must be positive")));
    }
    let problem = kernel_problem(h, spec, Some(u));
    let warm: Vec<Vec<Vec<f64>>> = warm.map(vars_from_bundle).into_iter().collect();
    Ok(finish(spec, problem.solve(opts, &warm)))
}

/// Smallest `u` at which no cap of `(K, J)` can bind: every test function
/// with unit second moment already satisfies `|f(x)| ≤ P(x)^{-1/2}`.
pub fn saturation_u(h: &Kernel, spec: &PartitionSpec) -> f64 {
    let pmin = h.law().min_positive();
    spec.j
        .blocks()
        .iter()
        .map(|b| b.len())
        .chain((!spec.k.is_empty()).then(|| spec.k.len()))
        .map(|s| pmin.powi(s as i32).powf(-0.5))
        .fold(1.0, f64::max)
}

/// Certified lower bound for `‖h‖_{K,J}` (or `‖h‖_{K,J,u}`) from random
/// feasible bundles, per-cell indicator bundles and, for small scalar blocks,
/// all sign patterns. Objectives are evaluated by [`evaluate_objective`].
pub fn bruteforce_norm_oracle(
    h: &Kernel,
    spec: &PartitionSpec,
    u: Option<f64>,
    samples: usize,
    seed: u64,
) -> Result<f64, NormError> {
    check_spec(spec, h.order())?;
    let problem = kernel_problem(h, spec, u);
    let dim: usize = problem.factors().iter().map(|f| f.len()).sum();
    if dim > ORACLE_DIM_LIMIT {
        return Err(NormError::Guard { dim, limit: ORACLE_DIM_LIMIT });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = problem.factors().len();

    let mut candidates: Vec<Vec<Vec<f64>>> = Vec::with_capacity(nf);
    for k in 0..nf {
        let f = &problem.factors()[k];
        let mut list = Vec::new();
        for l in 0..f.len() {
            let mut v = vec![0.0; f.len()];
            v[l] = 1.0;
            problem.scale_to_boundary(k, &mut v);
            list.push(v);
        }
        if f.len() == f.n_groups() && f.len() <= 10 {
            for mask in 0u32..(1 << f.len()) {
                let mut v: Vec<f64> = (0..f.len()).map(|l| if mask >> l & 1 == 1 { -1.0 } else { 1.0 }).collect();
                problem.scale_to_boundary(k, &mut v);
                list.push(v);
            }
        }
        for _ in 0..16 {
            let mut v: Vec<f64> = (0..f.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            problem.scale_to_boundary(k, &mut v);
            list.push(v);
        }
        candidates.push(list);
    }

    let eval = |vars: Vec<Vec<f64>>| evaluate_objective(h, spec, &bundle_from_vars(spec, vars)).abs();
    let mut best = 0.0f64;
    let combos: u128 = candidates.iter().map(|c| c.len() as u128).product();
    if combos <= 50_000 {
        let mut idx = vec![0usize; nf];
        loop {
            best = best.max(eval(idx.iter().enumerate().map(|(k, &i)| candidates[k][i].clone()).collect()));
            let mut k = 0;
            while k < nf {
                idx[k] += 1;
                if idx[k] < candidates[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == nf {
                break;
            }
        }
    } else {
        for _ in 0..samples {
            let vars = (0..nf).map(|k| candidates[k][rng.random_range(0..candidates[k].len())].clone()).collect();
            best = best.max(eval(vars));
        }
    }
    for _ in 0..samples {
        let vars = (0..nf)
            .map(|k| {
                let mut v: Vec<f64> =
                    (0..problem.factors()[k].len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                problem.scale_to_boundary(k, &mut v);
                v
            })
            .collect();
        best = best.max(eval(vars));
    }
    Ok(best)
}

/// `‖(a_i)‖_J` for a real array over `{1..n}^d`, row-major with the first
/// index most significant.
pub fn array_norm(a: &[f64], n: usize, d: usize, j: &Partition) -> Result<ArrayNormResult, NormError> {
    array_norm_with(a, n, d, j, &SolverOptions::default())
}

pub fn array_norm_with(
    a: &[f64],
    n: usize,
    d: usize,
    j: &Partition,
    opts: &SolverOptions,
) -> Result<ArrayNormResult, NormError> {
    if !j.is_partition_of(CoordSet::full(d)) {
        return Err(NormError::InvalidSpec { spec: j.to_string(), d });
    }
    if a.len() != n.pow(d as u32) {
        return Err(NormError::InvalidArgument(format!("array length {} is not n^d = {}", a.len(), n.pow(d as u32))));
    }
    let specs: Vec<FactorSpec> = j
        .blocks()
        .iter()
        .map(|b| FactorSpec {
            axes: b.axes(),
            group_axes: b.axes(),
            weights: vec![1.0; n.pow(b.len() as u32)],
            budget: 1.0,
            cap: None,
        })
        .collect();
    let problem = Problem::new(&vec![n; d], a.to_vec(), &specs);
    Ok((&problem.solve(opts, &[])).into())
}

/// The array norm `‖(h_i)_{|i| ≤ n}‖_{K,J}` of the constant array `h_i = h`,
/// where every index position carries its own test function.
pub fn replicated_array_norm(h: &Kernel, spec: &PartitionSpec, n: usize) -> Result<ArrayNormResult, NormError> {
    replicated_array_norm_with(h, spec, n, &SolverOptions::default())
}

pub fn replicated_array_norm_with(
    h: &Kernel,
    spec: &PartitionSpec,
    n: usize,
    opts: &SolverOptions,
) -> Result<ArrayNormResult, NormError> {
    let d = h.order();
    check_spec(spec, d)?;
    if n == 0 {
        return Err(NormError::InvalidArgument("n must be at least 1".into()));
    }
    let m = h.alphabet_size();
    let q = h.dim();
    let probs = h.law().probs();
    // Axes: i_1..i_d (0..d), x_1..x_d (d..2d), H (2d).
    let mut dims = vec![n; d];
    dims.extend(vec![m; d]);
    dims.push(q);
    let reps = n.pow(d as u32);
    let mut base = Vec::with_capacity(h.values().len());
    for cell in 0..h.num_cells() {
        let p = h.cell_prob(cell);
        base.extend(h.cell(cell).iter().map(|v| p * v));
    }
    let mut tensor = Vec::with_capacity(reps * base.len());
    for _ in 0..reps {
        tensor.extend_from_slice(&base);
    }
    let block = |b: CoordSet, with_h: bool, cap: Option<f64>| {
        let idx_axes = b.axes();
        let x_axes: Vec<usize> = idx_axes.iter().map(|a| a + d).collect();
        let mut axes: Vec<usize> = idx_axes.iter().chain(&x_axes).copied().collect();
        let group_axes = axes.clone();
        if with_h {
            axes.push(2 * d);
        }
        let xw = block_weights(probs, b.len());
        let weights: Vec<f64> = (0..n.pow(b.len() as u32)).flat_map(|_| xw.iter().copied()).collect();
        FactorSpec { axes, group_axes, weights, budget: 1.0, cap }
    };
    let mut specs = Vec::new();
    if spec.k.is_empty() {
        specs.push(FactorSpec { axes: vec![2 * d], group_axes: vec![], weights: vec![1.0], budget: 1.0, cap: None });
    } else {
        specs.push(block(spec.k, true, None));
    }
    for &b in spec.j.blocks() {
        specs.push(block(b, false, None));
    }
    let problem = Problem::new(&dims, tensor, &specs);
    Ok((&problem.solve(opts, &[])).into())
}

/// `‖(a_i)‖*_{K,J,p}` for an array of `R^q` vectors over `{1..n}^d`
/// (row-major, vector coordinate fastest).
///
/// The `K` block carries `Σ |α⁰_{i_K}|² ≤ 1`; each block `J_k` carries
/// `Σ (α^k)² ≤ p` together with `Σ_{i_{J_k \ max}} (α^k)² ≤ 1` for every value
/// of the largest coordinate of `J_k`.
pub fn chaos_star_norm(
    a: &[f64],
    n: usize,
    d: usize,
    q: usize,
    spec: &PartitionSpec,
    p: f64,
) -> Result<ArrayNormResult, NormError> {
    chaos_star_norm_with(a, n, d, q, spec, p, &SolverOptions::default())
}

pub fn chaos_star_norm_with(
    a: &[f64],
    n: usize,
    d: usize,
    q: usize,
    spec: &PartitionSpec,
    p: f64,
    opts: &SolverOptions,
) -> Result<ArrayNormResult, NormError> {
    check_spec(spec, d)?;
    if !(p >= 1.0) {
        return Err(NormError::InvalidArgument(format!("p = {p} must be at least 1")));
    }
    if a.len() != n.pow(d as u32) * q {
        return Err(NormError::InvalidArgument(format!("array length {} is not n^d*q", a.len())));
    }
    let mut dims = vec![n; d];
    dims.push(q);
    let mut specs = Vec::new();
    let mut k_axes = spec.k.axes();
    k_axes.push(d);
    specs.push(FactorSpec { axes: k_axes, group_axes: vec![], weights: vec![1.0], budget: 1.0, cap: None });
    for b in spec.j.blocks() {
        let top = b.max_label().expect("nonempty block") - 1;
        specs.push(FactorSpec {
            axes: b.axes(),
            group_axes: vec![top],
            weights: vec![1.0; n],
            budget: p,
            cap: Some(1.0),
        });
    }
    let problem = Problem::new(&dims, a.to_vec(), &specs);
    Ok((&problem.solve(opts, &[])).into())
}

/// `‖h‖_{K,J}` for every `(K, J)` of the kernel's order, in enumeration order.
pub fn all_norms(h: &Kernel, opts: &SolverOptions) -> Vec<(PartitionSpec, NormResult)> {
    crate::indexing::enumerate_partition_specs(h.order())
        .into_iter()
        .map(|s| {
            let r = norm_kj_with(h, &s, opts).expect("enumerated specs are valid");
            (s, r)
        })
        .collect()
}

/// Flat cell index of `x_B` for a block `B`.
pub fn block_index(x: &[usize], block: CoordSet, m: usize) -> usize {
    let sub: Vec<usize> = block.axes().into_iter().map(|a| x[a]).collect();
    encode(&sub, m)
}

//! Kernels `h: Σ^d → R^q` on a finite alphabet with a sampling law.
//!
//! Values are stored densely, row-major over `(x_1, .., x_d)` with the
//! `R^q` coordinate fastest.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::indexing::{CoordSet, MAX_ORDER};
use crate::KernelError;

/// Tolerance on `Σ p = 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Default tolerance for canonicality checks.
pub const DEFAULT_CANONICAL_TOL: f64 = 1e-10;

/// A probability vector on `{0..m-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, KernelError> {
        if probs.is_empty() {
            return Err(KernelError::InvalidLaw("alphabet is empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(KernelError::InvalidLaw(format!("probability {p} is negative or not finite")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > PROB_SUM_TOL {
            return Err(KernelError::InvalidLaw(format!("probabilities sum to {s}, not 1")));
        }
        Ok(DiscreteDistribution { probs })
    }

    pub fn uniform(m: usize) -> Self {
        DiscreteDistribution { probs: vec![1.0 / m as f64; m] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Smallest strictly positive probability.
    pub fn min_positive(&self) -> f64 {
        self.probs.iter().copied().filter(|&p| p > 0.0).fold(f64::INFINITY, f64::min)
    }
}

/// `LL x = log log (x ∨ e^e)`; always at least 1.
pub fn ll(x: f64) -> f64 {
    let ee = std::f64::consts::E.exp();
    x.max(ee).ln().ln()
}

/// Stand-ins for the order-dependent constants `L_d`, `c_d`, `η_d`.
///
/// Missing entries fall back to `L_d = 1`, `c_d = 1/2`, `η_d = 1/2`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstants {
    pub l: BTreeMap<usize, f64>,
    pub c: BTreeMap<usize, f64>,
    pub eta: BTreeMap<usize, f64>,
}

impl CalibrationConstants {
    pub fn with_l(d: usize, l_d: f64) -> Self {
        let mut out = CalibrationConstants::default();
        out.l.insert(d, l_d);
        out
    }

    pub fn l_d(&self, d: usize) -> f64 {
        self.l.get(&d).copied().unwrap_or(1.0)
    }

    pub fn c_d(&self, d: usize) -> f64 {
        self.c.get(&d).copied().unwrap_or(0.5)
    }

    pub fn eta_d(&self, d: usize) -> f64 {
        self.eta.get(&d).copied().unwrap_or(0.5)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        for (name, map) in [("L_d", &self.l), ("c_d", &self.c), ("eta_d", &self.eta)] {
            for (d, v) in map {
                if !(v.is_finite() && *v > 0.0) {
                    return Err(KernelError::InvalidConstants(format!("{name}[{d}] = {v} must be positive")));
                }
            }
        }
        if let Some((d, v)) = self.eta.iter().find(|(_, v)| **v >= 1.0) {
            return Err(KernelError::InvalidConstants(format!("eta_d[{d}] = {v} must be < 1")));
        }
        Ok(())
    }

    /// Compact `key=value` rendering for report headers.
    pub fn describe(&self) -> String {
        let fmt = |name: &str, map: &BTreeMap<usize, f64>| {
            map.iter().map(|(d, v)| format!("{name}{d}={v}")).collect::<Vec<_>>()
        };
        let mut parts = fmt("L", &self.l);
        parts.extend(fmt("c", &self.c));
        parts.extend(fmt("eta", &self.eta));
        if parts.is_empty() {
            "defaults(L=1,c=0.5,eta=0.5)".to_string()
        } else {
            parts.join(",")
        }
    }
}

/// A kernel `h: Σ^d → R^q` together with the law of each argument.
///
/// Order-0 kernels (a single vector) arise as full partial expectations.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    d: usize,
    m: usize,
    q: usize,
    values: Vec<f64>,
    law: DiscreteDistribution,
    symmetric: bool,
}

impl Kernel {
    pub fn new(d: usize, q: usize, values: Vec<f64>, law: DiscreteDistribution) -> Result<Self, KernelError> {
        if d == 0 || d > MAX_ORDER {
            return Err(KernelError::Shape(format!("order d = {d} must be in 1..={MAX_ORDER}")));
        }
        Self::with_order(d, q, values, law)
    }

    fn with_order(d: usize, q: usize, values: Vec<f64>, law: DiscreteDistribution) -> Result<Self, KernelError> {
        if q == 0 {
            return Err(KernelError::Shape("value dimension q must be at least 1".into()));
        }
        let m = law.len();
        let cells = m
            .checked_pow(d as u32)
            .ok_or_else(|| KernelError::Shape(format!("m^d = {m}^{d} overflows")))?;
        if values.len() != cells * q {
            return Err(KernelError::Shape(format!(
                "values has length {}, expected m^d*q = {}",
                values.len(),
                cells * q
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(KernelError::NonFinite(pos));
        }
        Ok(Kernel { d, m, q, values, law, symmetric: false })
    }

    /// Builds a kernel by evaluating `f` on every cell.
    pub fn from_fn<F>(d: usize, q: usize, law: DiscreteDistribution, mut f: F) -> Result<Self, KernelError>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        let m = law.len();
        let cells = m.pow(d as u32);
        let mut values = Vec::with_capacity(cells * q);
        let mut x = vec![0usize; d];
        for cell in 0..cells {
            decode_into(cell, m, &mut x);
            let v = f(&x);
            if v.len() != q {
                return Err(KernelError::Shape(format!("closure returned {} values, expected {q}", v.len())));
            }
            values.extend(v);
        }
        Self::new(d, q, values, law)
    }

    pub fn zeros(d: usize, q: usize, law: DiscreteDistribution) -> Self {
        let cells = law.len().pow(d as u32);
        Kernel { d, m: law.len(), q, values: vec![0.0; cells * q], law, symmetric: false }
    }

    /// Marks the kernel symmetric after verifying `h(x_σ) = h(x)` within 1e-12.
    pub fn with_symmetric_flag(mut self, symmetric: bool) -> Result<Self, KernelError> {
        if symmetric && !self.is_symmetric(1e-12) {
            return Err(KernelError::NotSymmetric);
        }
        self.symmetric = symmetric;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.d
    }

    pub fn alphabet_size(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn law(&self) -> &DiscreteDistribution {
        &self.law
    }

    pub fn symmetric_flag(&self) -> bool {
        self.symmetric
    }

    pub fn num_cells(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    /// `h(x)` for a flat cell index.
    pub fn cell(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.q..(cell + 1) * self.q]
    }

    pub fn at(&self, x: &[usize]) -> &[f64] {
        self.cell(encode(x, self.m))
    }

    /// Product-law probability of a cell.
    pub fn cell_prob(&self, cell: usize) -> f64 {
        let p = self.law.probs();
        let mut c = cell;
        let mut out = 1.0;
        for _ in 0..self.d {
            out *= p[c % self.m];
            c /= self.m;
        }
        out
    }

    pub fn cell_probs(&self) -> Vec<f64> {
        (0..self.num_cells()).map(|c| self.cell_prob(c)).collect()
    }

    /// Pointwise `|h(x)|`.
    pub fn cell_norms(&self) -> Vec<f64> {
        self.values.chunks(self.q).map(norm).collect()
    }

    /// `E|h(X)|²`.
    pub fn second_moment(&self) -> f64 {
        self.values
            .chunks(self.q)
            .enumerate()
            .map(|(c, v)| self.cell_prob(c) * v.iter().map(|x| x * x).sum::<f64>())
            .sum()
    }

    /// `max |h(x)|` over cells of positive probability.
    pub fn sup_norm(&self) -> f64 {
        self.cell_norms()
            .into_iter()
            .enumerate()
            .filter(|(c, _)| self.cell_prob(*c) > 0.0)
            .map(|(_, v)| v)
            .fold(0.0, f64::max)
    }

    /// Smallest positive cell probability of the product law on `Σ^d`.
    pub fn min_cell_prob(&self) -> f64 {
        self.law.min_positive().powi(self.d as i32)
    }

    pub fn scaled(&self, alpha: f64) -> Kernel {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha * self + beta * other`; shapes and laws must agree.
    pub fn linear_combination(&self, alpha: f64, other: &Kernel, beta: f64) -> Result<Kernel, KernelError> {
        if self.d != other.d || self.q != other.q || self.law != other.law {
            return Err(KernelError::Shape("kernels differ in order, dimension or law".into()));
        }
        let mut out = self.clone();
        out.symmetric = self.symmetric && other.symmetric;
        for (o, b) in out.values.iter_mut().zip(&other.values) {
            *o = alpha * *o + beta * b;
        }
        Ok(out)
    }

    /// Reorders arguments: the result `g` satisfies `g(y) = h(x)` with
    /// `y_k = x_{perm[k]}` (zero-based).
    pub fn permute_args(&self, perm: &[usize]) -> Kernel {
        assert_eq!(perm.len(), self.d);
        let mut out = self.clone();
        let mut x = vec![0usize; self.d];
        let mut y = vec![0usize; self.d];
        for cell in 0..self.num_cells() {
            decode_into(cell, self.m, &mut x);
            for k in 0..self.d {
                y[k] = x[perm[k]];
            }
            let dst = encode(&y, self.m);
            out.values[dst * self.q..(dst + 1) * self.q].copy_from_slice(self.cell(cell));
        }
        out
    }

    /// Relabels the alphabet: symbol `a` becomes `relabel[a]`; the law moves along.
    pub fn relabel_alphabet(&self, relabel: &[usize]) -> Kernel {
        assert_eq!(relabel.len(), self.m);
        let mut probs = vec![0.0; self.m];
        for (a, &b) in relabel.iter().enumerate() {
            probs[b] = self.law.probs()[a];
        }
        let mut out = self.clone();
        out.law = DiscreteDistribution { probs };
        let mut x = vec![0usize; self.d];
        for cell in 0..self.num_cells() {
            decode_into(cell, self.m, &mut x);
            x.iter_mut().for_each(|a| *a = relabel[*a]);
            let dst = encode(&x, self.m);
            out.values[dst * self.q..(dst + 1) * self.q].copy_from_slice(self.cell(cell));
        }
        out
    }

    /// Whether `h(x_σ) = h(x)` for all transpositions of adjacent arguments.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.d.saturating_sub(1)).all(|k| {
            let mut perm: Vec<usize> = (0..self.d).collect();
            perm.swap(k, k + 1);
            let other = self.permute_args(&perm);
            self.values.iter().zip(&other.values).all(|(a, b)| (a - b).abs() <= tol)
        })
    }

    /// `E_I h`: integrates out the coordinates in `I`. The result is a kernel
    /// in the remaining coordinates, in increasing label order; for `I = {1..d}`
    /// it has order 0 and holds the single vector `E h`.
    pub fn partial_expectation(&self, i: CoordSet) -> Kernel {
        assert!(i.is_subset(CoordSet::full(self.d)), "{i} is not a subset of {{1..{}}}", self.d);
        let mut values = self.values.clone();
        let mut order = self.d;
        // Contract highest axes first so lower axis positions stay put.
        for axis in i.axes().into_iter().rev() {
            values = contract_axis(&values, order, self.m, self.q, axis, self.law.probs());
            order -= 1;
        }
        Kernel { d: order, m: self.m, q: self.q, values, law: self.law.clone(), symmetric: false }
    }

    /// `π_d h = Σ_{I ⊆ I_d} (-1)^{d-|I|} (E_{I^c} h)(x_I)`.
    pub fn hoeffding_project(&self) -> Kernel {
        let full = CoordSet::full(self.d);
        let mut out = vec![0.0; self.values.len()];
        let mut x = vec![0usize; self.d];
        for keep in full.subsets() {
            let reduced = self.partial_expectation(keep.complement(self.d));
            let sign = if (self.d - keep.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
            let axes = keep.axes();
            for cell in 0..self.num_cells() {
                decode_into(cell, self.m, &mut x);
                let r = axes.iter().fold(0usize, |acc, &a| acc * self.m + x[a]);
                let src = &reduced.values[r * self.q..(r + 1) * self.q];
                for (o, s) in out[cell * self.q..(cell + 1) * self.q].iter_mut().zip(src) {
                    *o += sign * s;
                }
            }
        }
        Kernel { d: self.d, m: self.m, q: self.q, values: out, law: self.law.clone(), symmetric: self.symmetric }
    }

    /// Checks `E_j h = 0` for every `j`; reports the largest `|E_j h|` over
    /// outer arguments of positive probability.
    pub fn is_canonical(&self, tol: f64) -> CanonicalityReport {
        let mut worst = 0.0f64;
        for j in 1..=self.d {
            let reduced = self.partial_expectation(CoordSet::singleton(j));
            for (c, v) in reduced.values.chunks(self.q).enumerate() {
                if reduced.cell_prob(c) > 0.0 {
                    worst = worst.max(norm(v));
                }
            }
        }
        CanonicalityReport { canonical: worst <= tol, max_violation: worst }
    }

    /// `max_{x_{I^c}} sqrt(E_I |h(x_{I^c}, X_I)|²)` over outer arguments of
    /// positive probability. For `I = {1..d}` this is `sqrt(E|h|²)`.
    pub fn conditional_sup_norm(&self, i: CoordSet) -> f64 {
        let sq = self.squared_norm_kernel();
        let reduced = sq.partial_expectation(i);
        reduced
            .values
            .iter()
            .enumerate()
            .filter(|(c, _)| reduced.cell_prob(*c) > 0.0)
            .map(|(_, v)| v.max(0.0).sqrt())
            .fold(0.0, f64::max)
    }

    /// `|h|²` as a scalar kernel.
    pub fn squared_norm_kernel(&self) -> Kernel {
        let values = self.values.chunks(self.q).map(|v| v.iter().map(|x| x * x).sum()).collect();
        Kernel { d: self.d, m: self.m, q: 1, values, law: self.law.clone(), symmetric: self.symmetric }
    }

    /// `E |h|² / (LL |h|)^d`.
    pub fn ll_weighted_second_moment(&self) -> f64 {
        let d = self.d as i32;
        self.values
            .chunks(self.q)
            .enumerate()
            .map(|(c, v)| {
                let n2: f64 = v.iter().map(|x| x * x).sum();
                self.cell_prob(c) * n2 / ll(n2.sqrt()).powi(d)
            })
            .sum()
    }

    /// `E (|h|² ∧ u)`.
    pub fn truncated_second_moment(&self, u: f64) -> f64 {
        assert!(u > 0.0, "truncation level must be positive");
        self.values
            .chunks(self.q)
            .enumerate()
            .map(|(c, v)| self.cell_prob(c) * v.iter().map(|x| x * x).sum::<f64>().min(u))
            .sum()
    }

    pub fn to_spec_file(&self) -> KernelFile {
        KernelFile {
            format: 1,
            d: self.d,
            m: self.m,
            q: self.q,
            probs: self.law.probs().to_vec(),
            values: self.values.clone(),
            symmetric: self.symmetric.then_some(true),
        }
    }

    pub fn from_spec_file(file: KernelFile) -> Result<Kernel, KernelError> {
        if file.format != 1 {
            return Err(KernelError::Field { field: "format", reason: format!("unsupported version {}", file.format) });
        }
        if file.probs.len() != file.m {
            return Err(KernelError::Field {
                field: "probs",
                reason: format!("length {} does not match m = {}", file.probs.len(), file.m),
            });
        }
        let law = DiscreteDistribution::new(file.probs)
            .map_err(|e| KernelError::Field { field: "probs", reason: e.to_string() })?;
        let k = Kernel::new(file.d, file.q, file.values, law).map_err(|e| match e {
            KernelError::Shape(reason) => KernelError::Field { field: "values", reason },
            KernelError::NonFinite(pos) => {
                KernelError::Field { field: "values", reason: format!("entry {pos} is not finite") }
            }
            other => other,
        })?;
        k.with_symmetric_flag(file.symmetric.unwrap_or(false))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec_file()).expect("kernel file serializes")
    }

    pub fn from_json(text: &str) -> Result<Kernel, KernelError> {
        let file: KernelFile = serde_json::from_str(text).map_err(|e| KernelError::Parse(e.to_string()))?;
        Kernel::from_spec_file(file)
    }
}

/// Result of [`Kernel::is_canonical`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CanonicalityReport {
    pub canonical: bool,
    pub max_violation: f64,
}

/// On-disk kernel description, schema version 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub format: u32,
    pub d: usize,
    pub m: usize,
    pub q: usize,
    pub probs: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<bool>,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Flat cell index of `x` (first coordinate most significant).
pub fn encode(x: &[usize], m: usize) -> usize {
    x.iter().fold(0usize, |acc, &a| acc * m + a)
}

/// Inverse of [`encode`] into a preallocated buffer.
pub fn decode_into(mut cell: usize, m: usize, x: &mut [usize]) {
    for slot in x.iter_mut().rev() {
        *slot = cell % m;
        cell /= m;
    }
}

fn contract_axis(values: &[f64], d: usize, m: usize, q: usize, axis: usize, w: &[f64]) -> Vec<f64> {
    let post = m.pow((d - axis - 1) as u32) * q;
    let pre = m.pow(axis as u32);
    let mut out = vec![0.0; pre * post];
    for a in 0..pre {
        for (x, &wx) in w.iter().enumerate() {
            if wx == 0.0 {
                continue;
            }
            let src = &values[(a * m + x) * post..(a * m + x + 1) * post];
            for (o, s) in out[a * post..(a + 1) * post].iter_mut().zip(src) {
                *o += wx * s;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bit_kernel() -> Kernel {
        Kernel::new(1, 1, vec![0.0, 1.0], DiscreteDistribution::uniform(2)).unwrap()
    }

    #[test]
    fn law_validation() {
        assert!(DiscreteDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDistribution::new(vec![]).is_err());
    }

    #[test]
    fn ll_values() {
        let ee = std::f64::consts::E.exp();
        assert_eq!(ll(0.0), 1.0);
        assert!((ll(ee) - 1.0).abs() < 1e-15);
        assert!((ll((2.0f64).exp().exp()) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn partial_expectation_of_fair_bit() {
        let h = bit_kernel();
        assert_eq!(h.partial_expectation(CoordSet::EMPTY), h);
        let e = h.partial_expectation(CoordSet::full(1));
        assert_eq!(e.order(), 0);
        assert_eq!(e.values(), &[0.5]);
    }

    #[test]
    fn projection_of_bit_subtracts_mean() {
        let p = bit_kernel().hoeffding_project();
        assert_eq!(p.values(), &[-0.5, 0.5]);
    }

    #[test]
    fn constant_projects_to_zero() {
        for d in 1..=3 {
            let law = DiscreteDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
            let h = Kernel::from_fn(d, 2, law, |_| vec![1.5, -2.0]).unwrap();
            let p = h.hoeffding_project();
            assert!(p.values().iter().all(|v| v.abs() < 1e-14), "d = {d}");
        }
    }

    #[test]
    fn canonical_examples() {
        let one = Kernel::new(1, 1, vec![1.0, 1.0], DiscreteDistribution::uniform(2)).unwrap();
        let r = one.is_canonical(DEFAULT_CANONICAL_TOL);
        assert!(!r.canonical);
        assert!((r.max_violation - 1.0).abs() < 1e-15);

        // f(x) g(y) with centered factors under a non-uniform law.
        let law = DiscreteDistribution::new(vec![0.25, 0.75]).unwrap();
        let f = [3.0, -1.0];
        let g = [-0.75 * 4.0, 0.25 * 4.0];
        let h = Kernel::from_fn(2, 1, law, |x| vec![f[x[0]] * g[x[1]]]).unwrap();
        assert!(h.is_canonical(1e-12).canonical);
    }

    #[test]
    fn canonical_second_argument_is_zero_kernel() {
        let law = DiscreteDistribution::uniform(2);
        let h = Kernel::from_fn(2, 1, law, |x| vec![if x[0] == x[1] { 1.0 } else { -1.0 }]).unwrap();
        let e = h.partial_expectation(CoordSet::singleton(1));
        assert_eq!(e.order(), 1);
        assert!(e.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn truncated_moment_examples() {
        let h = Kernel::new(1, 1, vec![1.0, 3.0], DiscreteDistribution::uniform(2)).unwrap();
        assert!((h.truncated_second_moment(4.0) - 2.5).abs() < 1e-15);
        assert!((h.truncated_second_moment(9.0) - h.second_moment()).abs() < 1e-15);
        assert!((h.truncated_second_moment(1e-9) - 1e-9).abs() < 1e-20);
    }

    #[test]
    fn ll_weighted_single_cell() {
        let big = (2.0f64).exp().exp();
        let h = Kernel::new(1, 1, vec![0.0, big], DiscreteDistribution::uniform(2)).unwrap();
        let want = 0.5 * big * big / 2.0;
        assert!((h.ll_weighted_second_moment() - want).abs() <= 1e-12 * want);
        let small = Kernel::new(1, 1, vec![1.0, -2.0], DiscreteDistribution::uniform(2)).unwrap();
        assert_eq!(small.ll_weighted_second_moment(), small.second_moment());
    }

    #[test]
    fn conditional_sup_norm_examples() {
        let law = DiscreteDistribution::uniform(2);
        let h = Kernel::from_fn(2, 1, law.clone(), |x| vec![if (x[0] + x[1]) % 2 == 0 { 1.0 } else { -1.0 }])
            .unwrap();
        assert!((h.conditional_sup_norm(CoordSet::singleton(2)) - 1.0).abs() < 1e-15);
        let c = Kernel::from_fn(2, 2, law.clone(), |_| vec![3.0, 4.0]).unwrap();
        for i in CoordSet::full(2).subsets() {
            assert!((c.conditional_sup_norm(i) - 5.0).abs() < 1e-14);
        }
        let g = Kernel::from_fn(2, 1, law, |x| vec![(x[0] * 2 + x[1]) as f64]).unwrap();
        assert_eq!(g.conditional_sup_norm(CoordSet::EMPTY), 3.0);
    }

    #[test]
    fn zero_probability_cells_are_ignored_in_sup_norms() {
        let law = DiscreteDistribution::new(vec![1.0, 0.0]).unwrap();
        let h = Kernel::new(1, 1, vec![1.0, 100.0], law).unwrap();
        assert_eq!(h.sup_norm(), 1.0);
        assert_eq!(h.conditional_sup_norm(CoordSet::EMPTY), 1.0);
    }

    #[test]
    fn spec_file_errors_name_fields() {
        let mut f = bit_kernel().to_spec_file();
        f.probs = vec![0.5];
        match Kernel::from_spec_file(f) {
            Err(KernelError::Field { field, .. }) => assert_eq!(field, "probs"),
            other => panic!("unexpected {other:?}"),
        }
        let mut f = bit_kernel().to_spec_file();
        f.values.push(1.0);
        match Kernel::from_spec_file(f) {
            Err(KernelError::Field { field, .. }) => assert_eq!(field, "values"),
            other => panic!("unexpected {other:?}"),
        }
        let mut f = bit_kernel().to_spec_file();
        f.format = 2;
        assert!(Kernel::from_spec_file(f).is_err());
    }

    #[test]
    fn symmetric_flag_is_verified() {
        let law = DiscreteDistribution::uniform(2);
        let asym = Kernel::from_fn(2, 1, law.clone(), |x| vec![x[0] as f64]).unwrap();
        assert!(matches!(asym.with_symmetric_flag(true), Err(KernelError::NotSymmetric)));
        let sym = Kernel::from_fn(2, 1, law, |x| vec![(x[0] + x[1]) as f64]).unwrap();
        assert!(sym.with_symmetric_flag(true).unwrap().symmetric_flag());
    }
}

//! Moment, tail, variance, Paley–Zygmund and decoupling evaluators, with
//! Monte Carlo / enumeration verification and a power-of-two fit for `L_d`.
//!
//! All sums here are decoupled full-grid sums `Σ_{|i| ≤ n} h(X_i^dec)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::indexing::{enumerate_partition_specs, CoordSet, PartitionSpec};
use crate::kernel::{decode_into, CalibrationConstants, Kernel, DEFAULT_CANONICAL_TOL};
use crate::norms::norm_kj_with;
use crate::rng::{stream, StreamRole};
use crate::simulate::{
    enumeration_count, exact_moment, exact_tail, sample_norms, wilson_interval, Estimate,
    SampleConfig, Sampler, SumKind, ENUMERATION_LIMIT, Z95,
};
use crate::solver::SolverOptions;
use crate::BoundError;

/// How the `E max` terms of the moment bound are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundMode {
    /// `T_I ≤ conditional_sup_norm(h, I)^p`.
    Deterministic,
    /// `T_I` estimated from `reps` draws of the outer coordinates.
    Stochastic { reps: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum TermKey {
    Spec(PartitionSpec),
    Outer(CoordSet),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundTerm {
    pub key: TermKey,
    /// `p^{p deg J / 2} n^{dp/2}` or `p^{p(d + #I^c)/2} n^{#I p/2}`.
    pub coefficient: f64,
    /// `‖h‖_{K,J}^p` or `T_I`.
    pub base: f64,
    pub value: f64,
}

impl BoundTerm {
    pub fn label(&self) -> String {
        match &self.key {
            TermKey::Spec(s) => s.descriptor(),
            TermKey::Outer(i) => format!("I={i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    /// `L_d^p Σ terms`.
    pub bound_value: f64,
    pub terms: Vec<BoundTerm>,
    pub constants_used: CalibrationConstants,
    pub l_d: f64,
    pub mode: BoundMode,
    pub n: usize,
    pub p: f64,
    /// False if some partition norm did not converge.
    pub converged: bool,
}

impl BoundReport {
    /// Recomputes the bound from the breakdown.
    pub fn aggregate(&self) -> f64 {
        self.l_d.powf(self.p) * self.terms.iter().map(|t| t.value).sum::<f64>()
    }
}

/// Everything the bounds need from a kernel: partition norms, conditional
/// sup norms and `E|h|²`.
#[derive(Clone, Debug)]
pub struct NormSummary {
    pub d: usize,
    pub second_moment: f64,
    pub spec_norms: Vec<(PartitionSpec, f64)>,
    pub conditional: Vec<(CoordSet, f64)>,
    pub converged: bool,
}

impl NormSummary {
    pub fn new(h: &Kernel, opts: &SolverOptions) -> Result<Self, BoundError> {
        let d = h.order();
        let specs = enumerate_partition_specs(d);
        let results: Vec<_> = specs.par_iter().map(|s| norm_kj_with(h, s, opts)).collect::<Result<_, _>>()?;
        let converged = results.iter().all(|r| r.converged);
        let spec_norms = specs.into_iter().zip(results).map(|(s, r)| (s, r.value)).collect();
        let full = CoordSet::full(d);
        let conditional = full.subsets().filter(|&i| i != full).map(|i| (i, h.conditional_sup_norm(i))).collect();
        Ok(NormSummary { d, second_moment: h.second_moment(), spec_norms, conditional, converged })
    }
}

fn check_l(consts: &CalibrationConstants, d: usize) -> Result<f64, BoundError> {
    consts.validate()?;
    Ok(consts.l_d(d))
}

/// Bound on `E|Σ_{|i| ≤ n} h(X_i^dec)|^p`.
pub fn moment_bound(
    h: &Kernel,
    n: usize,
    p: f64,
    consts: &CalibrationConstants,
    mode: BoundMode,
) -> Result<BoundReport, BoundError> {
    let summary = NormSummary::new(h, &SolverOptions::default())?;
    moment_bound_from(h, &summary, n, p, consts, mode)
}

pub fn moment_bound_from(
    h: &Kernel,
    summary: &NormSummary,
    n: usize,
    p: f64,
    consts: &CalibrationConstants,
    mode: BoundMode,
) -> Result<BoundReport, BoundError> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(BoundError::InvalidArgument(format!("moment order p = {p} must be at least 2")));
    }
    if n == 0 {
        return Err(BoundError::InvalidArgument("n must be positive".into()));
    }
    let d = summary.d;
    let l_d = check_l(consts, d)?;
    let nf = n as f64;
    let df = d as f64;
    let mut terms = Vec::new();
    for (spec, norm) in &summary.spec_norms {
        let coefficient = p.powf(p * spec.deg() as f64 / 2.0) * nf.powf(df * p / 2.0);
        let base = norm.powf(p);
        terms.push(BoundTerm { key: TermKey::Spec(spec.clone()), coefficient, base, value: coefficient * base });
    }
    for &(i, csn) in &summary.conditional {
        let outer = (d - i.len()) as f64;
        let coefficient = p.powf(p * (df + outer) / 2.0) * nf.powf(i.len() as f64 * p / 2.0);
        let base = match mode {
            BoundMode::Deterministic => csn.powf(p),
            BoundMode::Stochastic { reps, seed } => outer_max_expectation(h, i, n, p, reps, seed)?,
        };
        terms.push(BoundTerm { key: TermKey::Outer(i), coefficient, base, value: coefficient * base });
    }
    let mut report = BoundReport {
        bound_value: 0.0,
        terms,
        constants_used: consts.clone(),
        l_d,
        mode,
        n,
        p,
        converged: summary.converged,
    };
    report.bound_value = report.aggregate();
    Ok(report)
}

/// Monte Carlo estimate of `E max_{i_{I^c}} (E_I|h|²)(X_{i_{I^c}})^{p/2}`,
/// the maximum running over the `n^{#I^c}` decoupled outer draws.
pub fn outer_max_expectation(h: &Kernel, i: CoordSet, n: usize, p: f64, reps: usize, seed: u64) -> Result<f64, BoundError> {
    if reps == 0 {
        return Err(BoundError::InvalidArgument("reps must be positive".into()));
    }
    let reduced = h.squared_norm_kernel().partial_expectation(i);
    let r = reduced.order();
    let m = h.alphabet_size();
    let sampler = Sampler::new(h.law());
    let maxima: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let hit: Vec<Vec<bool>> = (0..r)
                .map(|k| {
                    let mut rng = stream(seed, StreamRole::Outer, rep, i.bits() as u64, k as u64);
                    let mut seen = vec![false; m];
                    for _ in 0..n {
                        seen[sampler.sample(&mut rng)] = true;
                    }
                    seen
                })
                .collect();
            let mut x = vec![0usize; r];
            let mut best = 0.0f64;
            for c in 0..reduced.num_cells() {
                decode_into(c, m, &mut x);
                if x.iter().enumerate().all(|(k, &a)| hit[k][a]) {
                    best = best.max(reduced.cell(c)[0].max(0.0).powf(p / 2.0));
                }
            }
            best
        })
        .collect();
    Ok(maxima.iter().sum::<f64>() / reps as f64)
}

/// A tail bound `P(|S| ≥ threshold) ≤ bound`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailBound {
    pub t: f64,
    pub threshold: f64,
    pub bound: f64,
    pub m1: f64,
    pub m2: f64,
    pub l_d: f64,
}

/// `(t / denom)^exponent`, with a zero denominator contributing `+∞` for
/// `t > 0`. At `t = 0` every ratio is 0.
fn tail_ratio(t: f64, denom: f64, exponent: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY
    } else {
        (t / denom).powf(exponent)
    }
}

/// Tail bound for the decoupled sum of a canonical kernel.
pub fn tail_bound_canonical(h: &Kernel, n: usize, t: f64, consts: &CalibrationConstants) -> Result<TailBound, BoundError> {
    let summary = NormSummary::new(h, &SolverOptions::default())?;
    tail_bound_from(&summary, n, t, consts)
}

/// Tail bound for `Σ π_d h(X_i^dec)`. The norms are those of `h` itself, so
/// the numbers coincide with [`tail_bound_canonical`] evaluated on `h`; only
/// the statistic it controls differs.
pub fn tail_bound_projected(h: &Kernel, n: usize, t: f64, consts: &CalibrationConstants) -> Result<TailBound, BoundError> {
    tail_bound_canonical(h, n, t, consts)
}

pub fn tail_bound_from(summary: &NormSummary, n: usize, t: f64, consts: &CalibrationConstants) -> Result<TailBound, BoundError> {
    if !(t >= 0.0) {
        return Err(BoundError::InvalidArgument(format!("threshold t = {t} must be nonnegative")));
    }
    if n == 0 {
        return Err(BoundError::InvalidArgument("n must be positive".into()));
    }
    let d = summary.d;
    let l_d = check_l(consts, d)?;
    let nf = n as f64;
    let full = CoordSet::full(d);
    let mut m1 = f64::INFINITY;
    for (spec, norm) in &summary.spec_norms {
        if spec.k == full {
            continue;
        }
        let deg = spec.deg();
        assert!(deg > 0, "K ≠ I_d forces a nonempty partition");
        m1 = m1.min(tail_ratio(t, nf.powf(d as f64 / 2.0) * norm, 2.0 / deg as f64));
    }
    let mut m2 = f64::INFINITY;
    for &(i, csn) in &summary.conditional {
        let exponent = 2.0 / (2 * d - i.len()) as f64;
        m2 = m2.min(tail_ratio(t, nf.powf(i.len() as f64 / 2.0) * csn, exponent));
    }
    let threshold = l_d * (nf.powf(d as f64 / 2.0) * summary.second_moment.sqrt() + t);
    let bound = (l_d * (-m1.min(m2) / l_d).exp()).min(1.0);
    Ok(TailBound { t, threshold, bound, m1, m2, l_d })
}

/// `(2^d − 1) n^{2d−1} E g²`, a bound on `Var(Σ_{|i| ≤ n} g(X_i^dec))`.
pub fn variance_bound(g: &Kernel, n: usize) -> Result<f64, BoundError> {
    if g.dim() != 1 {
        return Err(BoundError::InvalidArgument("variance bound needs a scalar kernel (q = 1)".into()));
    }
    let d = g.order() as i32;
    Ok(((1u64 << d) - 1) as f64 * (n as f64).powi(2 * d - 1) * g.second_moment())
}

/// Why a Paley–Zygmund hypothesis check failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PzRejection {
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PzOutcome {
    Bound(f64),
    Rejected(PzRejection),
}

const PZ_SLACK: f64 = 1e-12;

/// Lower bound on `P(Σ_{|i| ≤ N} h(X_i^dec) ≥ λ t a)` for nonnegative scalar
/// `h`, after checking `N^d E h ≥ t a` and `‖E_I h‖_∞ ≤ N^{−#I} a` for every
/// `I ⊊ I_d`.
pub fn pz_lower(h: &Kernel, big_n: usize, a: f64, t: f64, lambda: f64) -> Result<PzOutcome, BoundError> {
    if h.dim() != 1 {
        return Err(BoundError::InvalidArgument("Paley–Zygmund bound needs q = 1".into()));
    }
    if !(a > 0.0 && t > 0.0) || !(lambda > 0.0 && lambda < 1.0) || big_n == 0 {
        return Err(BoundError::InvalidArgument(format!(
            "need a > 0, t > 0, 0 < lambda < 1, N ≥ 1 (got a = {a}, t = {t}, lambda = {lambda}, N = {big_n})"
        )));
    }
    if (0..h.num_cells()).any(|c| h.cell_prob(c) > 0.0 && h.cell(c)[0] < 0.0) {
        return Err(BoundError::InvalidArgument("kernel must be nonnegative".into()));
    }
    let d = h.order();
    let nf = big_n as f64;
    let mean = h.partial_expectation(CoordSet::full(d)).values()[0];
    let lhs = nf.powi(d as i32) * mean;
    if lhs < t * a * (1.0 - PZ_SLACK) {
        return Ok(PzOutcome::Rejected(PzRejection { inequality: "N^d E h >= t a".into(), lhs, rhs: t * a }));
    }
    let full = CoordSet::full(d);
    for i in full.subsets().filter(|&i| i != full) {
        let reduced = h.partial_expectation(i);
        let sup = (0..reduced.num_cells())
            .filter(|&c| reduced.cell_prob(c) > 0.0)
            .map(|c| reduced.cell(c)[0].abs())
            .fold(0.0, f64::max);
        let rhs = nf.powi(-(i.len() as i32)) * a;
        if sup > rhs * (1.0 + PZ_SLACK) {
            return Ok(PzOutcome::Rejected(PzRejection {
                inequality: format!("||E_I h||_inf <= N^(-#I) a for I = {i}"),
                lhs: sup,
                rhs,
            }));
        }
    }
    let dd = ((1u64 << d) - 1) as f64;
    Ok(PzOutcome::Bound((1.0 - lambda).powi(2) * t / (t + dd)))
}

/// Exact `P(Σ_{|i| ≤ N} h(X_i^dec) ≥ level)` for nonnegative scalar `h`.
pub fn pz_exact_probability(h: &Kernel, big_n: usize, level: f64) -> Result<f64, BoundError> {
    Ok(exact_tail(h, big_n, level, SumKind::Decoupled)?)
}

/// `(‖Σ π_d h(X_i^dec)‖_p, 2^d ‖Σ ε_i^dec h(X_i^dec)‖_p)`, both by enumeration.
pub fn decoupling_comparison(h: &Kernel, n: usize, p: f64) -> Result<(f64, f64), BoundError> {
    if !(p >= 1.0) {
        return Err(BoundError::InvalidArgument(format!("p = {p} must be at least 1")));
    }
    let projected = h.hoeffding_project();
    let lhs = exact_moment(&projected, n, p, SumKind::Decoupled)?.powf(1.0 / p);
    let rhs = (1u64 << h.order()) as f64 * exact_moment(h, n, p, SumKind::RandomizedDecoupled)?.powf(1.0 / p);
    Ok((lhs, rhs))
}

/// Smallest `L = 2^k`, `k ≤ max_exp`, for which `passes(L)` holds.
pub fn fit_power_of_two(max_exp: u32, passes: impl Fn(f64) -> bool) -> Option<f64> {
    (0..=max_exp).map(|k| (1u64 << k) as f64).find(|&l| passes(l))
}

/// One observed moment or tail probability together with the bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub what: String,
    pub n: usize,
    /// `p` for moments, `t` for tails.
    pub argument: f64,
    pub bound: f64,
    pub estimate: Estimate,
    /// `bound ≥ estimate.lower`.
    pub holds: bool,
}

/// A kernel prepared for calibration: its norms and sampled `|S|` for the
/// decoupled sum of `h` (moment and canonical tail) and of `π_d h`
/// (projected tail). Re-evaluating at another `L_d` needs no new draws.
///
/// The moment and canonical-tail comparisons are only made when `h` is
/// canonical; a general kernel is checked against the projected tail alone.
#[derive(Clone, Debug)]
pub struct CalibrationInstance {
    pub summary: NormSummary,
    pub kernel: Kernel,
    pub canonical: bool,
    pub n: usize,
    pub reps: usize,
    samples: Vec<f64>,
    projected_samples: Vec<f64>,
    exact_moments: Option<Vec<(f64, f64)>>,
    pub moment_orders: Vec<f64>,
    pub t_grid: Vec<f64>,
}

impl CalibrationInstance {
    /// Moments are computed exactly when the enumeration fits the guard and
    /// by Monte Carlo otherwise.
    pub fn new(
        h: &Kernel,
        n: usize,
        reps: usize,
        seed: u64,
        moment_orders: Vec<f64>,
        t_grid: Vec<f64>,
    ) -> Result<Self, BoundError> {
        let summary = NormSummary::new(h, &SolverOptions::default())?;
        let canonical = h.is_canonical(DEFAULT_CANONICAL_TOL).canonical;
        let cfg = SampleConfig { n, reps, seed, kind: SumKind::Decoupled };
        let samples = sample_norms(h, &cfg)?;
        let projected_samples = sample_norms(&h.hoeffding_project(), &cfg)?;
        let exact_moments = if canonical && enumeration_count(h, n, SumKind::Decoupled) <= ENUMERATION_LIMIT / 16 {
            Some(
                moment_orders
                    .iter()
                    .map(|&p| exact_moment(h, n, p, SumKind::Decoupled).map(|m| (p, m)))
                    .collect::<Result<_, _>>()?,
            )
        } else {
            None
        };
        Ok(CalibrationInstance {
            summary,
            kernel: h.clone(),
            canonical,
            n,
            reps,
            samples,
            projected_samples,
            exact_moments,
            moment_orders,
            t_grid,
        })
    }

    fn moment_estimate(&self, p: f64) -> Estimate {
        if let Some(exact) = &self.exact_moments {
            let m = exact.iter().find(|(q, _)| *q == p).expect("order listed").1;
            return Estimate { name: "moment_exact".into(), value: m, half_width: 0.0, lower: m, upper: m };
        }
        let vals: Vec<f64> = self.samples.iter().map(|s| s.powf(p)).collect();
        let k = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
        let hw = Z95 * (var / k).sqrt();
        Estimate { name: "moment_mc".into(), value: mean, half_width: hw, lower: mean - hw, upper: mean + hw }
    }

    fn tail_estimate(samples: &[f64], threshold: f64) -> Estimate {
        let hits = samples.iter().filter(|&&s| s >= threshold).count();
        let (lower, upper) = wilson_interval(hits, samples.len());
        let value = hits as f64 / samples.len() as f64;
        Estimate {
            name: "tail_mc".into(),
            value,
            half_width: (value - lower).max(upper - value),
            lower,
            upper,
        }
    }

    /// Every moment and tail comparison at the given constants.
    pub fn verify(&self, consts: &CalibrationConstants) -> Result<Vec<Verification>, BoundError> {
        let mut out = Vec::new();
        let orders: &[f64] = if self.canonical { &self.moment_orders } else { &[] };
        for &p in orders {
            let report = moment_bound_from(&self.kernel, &self.summary, self.n, p, consts, BoundMode::Deterministic)?;
            let estimate = self.moment_estimate(p);
            out.push(Verification {
                what: "moment".into(),
                n: self.n,
                argument: p,
                bound: report.bound_value,
                holds: report.bound_value >= estimate.lower,
                estimate,
            });
        }
        for &t in &self.t_grid {
            let tb = tail_bound_from(&self.summary, self.n, t, consts)?;
            let checks: &[(&str, &Vec<f64>)] = if self.canonical {
                &[("tail_canonical", &self.samples), ("tail_projected", &self.projected_samples)]
            } else {
                &[("tail_projected", &self.projected_samples)]
            };
            for &(what, samples) in checks {
                let estimate = Self::tail_estimate(samples, tb.threshold);
                out.push(Verification {
                    what: what.into(),
                    n: self.n,
                    argument: t,
                    bound: tb.bound,
                    holds: tb.bound >= estimate.lower,
                    estimate,
                });
            }
        }
        Ok(out)
    }

    /// Calibration is stricter than validation: the bound must clear the
    /// upper end of each confidence interval.
    fn passes_strict(&self, consts: &CalibrationConstants) -> bool {
        self.verify(consts).map(|v| v.iter().all(|c| c.bound >= c.estimate.upper)).unwrap_or(false)
    }
}

/// Smallest power-of-two `L_d` (up to `2^max_exp`) under which every
/// calibration instance of order `d` passes; other constants are kept.
pub fn fit_constants(
    base: &CalibrationConstants,
    d: usize,
    instances: &[CalibrationInstance],
    max_exp: u32,
) -> Option<CalibrationConstants> {
    let with = |l: f64| {
        let mut c = base.clone();
        c.l.insert(d, l);
        c
    };
    fit_power_of_two(max_exp, |l| {
        let consts = with(l);
        instances.par_iter().filter(|i| i.summary.d == d).all(|i| i.passes_strict(&consts))
    })
    .map(with)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::DiscreteDistribution;
    use crate::simulate::exact_variance;

    fn coin() -> Kernel {
        Kernel::new(1, 1, vec![-1.0, 1.0], DiscreteDistribution::uniform(2)).unwrap()
    }

    #[test]
    fn zero_kernel_bounds_vanish() {
        let z = Kernel::zeros(2, 1, DiscreteDistribution::uniform(3));
        let r = moment_bound(&z, 4, 2.0, &CalibrationConstants::default(), BoundMode::Deterministic).unwrap();
        assert_eq!(r.bound_value, 0.0);
        assert_eq!(variance_bound(&z, 5).unwrap(), 0.0);
        let t = tail_bound_canonical(&z, 4, 1.0, &CalibrationConstants::default()).unwrap();
        assert_eq!(t.bound, 0.0);
        assert!(t.m1.is_infinite() && t.m2.is_infinite());
    }

    #[test]
    fn report_reaggregates() {
        let r = moment_bound(&coin(), 3, 3.0, &CalibrationConstants::with_l(1, 2.0), BoundMode::Deterministic).unwrap();
        assert!((r.aggregate() - r.bound_value).abs() <= 1e-12 * r.bound_value);
        assert!(r.terms.iter().all(|t| t.value >= 0.0));
        // Two specs for d = 1 and one outer set.
        assert_eq!(r.terms.len(), 3);
    }

    #[test]
    fn tail_at_zero_is_vacuous() {
        let t = tail_bound_canonical(&coin(), 4, 0.0, &CalibrationConstants::default()).unwrap();
        assert_eq!(t.bound, 1.0);
        assert_eq!(t.threshold, 2.0);
    }

    #[test]
    fn d1_tail_exponents_by_hand() {
        let law = DiscreteDistribution::new(vec![0.75, 0.25]).unwrap();
        let h = Kernel::new(1, 1, vec![-1.0, 3.0], law).unwrap();
        let (n, t) = (4usize, 5.0);
        let tb = tail_bound_canonical(&h, n, t, &CalibrationConstants::default()).unwrap();
        // M1: (t / (sqrt(n) ‖h‖_{∅,{1}}))², ‖h‖_{∅,{1}} = sqrt(E h²) = sqrt(3).
        let m1 = (t / (2.0 * 3f64.sqrt())).powi(2);
        // M2: I = ∅ only, exponent 2 / (1 + 1) = 1.
        let m2 = t / 3.0;
        assert!((tb.m1 - m1).abs() < 1e-9);
        assert!((tb.m2 - m2).abs() < 1e-12);
        assert!((tb.bound - (-m1.min(m2)).exp()).abs() < 1e-9);
    }

    #[test]
    fn variance_bound_d1_and_d2() {
        let law = DiscreteDistribution::new(vec![0.3, 0.7]).unwrap();
        let g = Kernel::new(1, 1, vec![2.0, -1.0], law.clone()).unwrap();
        let v = exact_variance(&g, 3, SumKind::Decoupled).unwrap();
        assert!(v <= variance_bound(&g, 3).unwrap() + 1e-12);
        let g2 = Kernel::new(2, 1, vec![1.0, 0.5, -2.0, 3.0], law).unwrap();
        for n in [2, 3] {
            let v = exact_variance(&g2, n, SumKind::Decoupled).unwrap();
            assert!(v <= variance_bound(&g2, n).unwrap() + 1e-9);
        }
    }

    #[test]
    fn pz_constant_kernel() {
        let (big_n, a) = (3usize, 2.0);
        let c = Kernel::from_fn(2, 1, DiscreteDistribution::uniform(2), |_| vec![a / 9.0]).unwrap();
        match pz_lower(&c, big_n, a, 1.0, 0.5).unwrap() {
            PzOutcome::Bound(b) => assert!((b - 0.25 / 4.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert_eq!(pz_exact_probability(&c, big_n, 0.5 * a).unwrap(), 1.0);
    }

    #[test]
    fn pz_rejects_with_named_inequality() {
        let c = Kernel::from_fn(1, 1, DiscreteDistribution::uniform(2), |_| vec![1.0]).unwrap();
        match pz_lower(&c, 2, 1.0, 5.0, 0.5).unwrap() {
            PzOutcome::Rejected(r) => assert!(r.inequality.contains("N^d E h")),
            other => panic!("{other:?}"),
        }
        assert!(pz_lower(&c, 2, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn decoupling_constant_kernel() {
        let c = Kernel::from_fn(2, 1, DiscreteDistribution::uniform(2), |_| vec![1.0]).unwrap();
        let (lhs, rhs) = decoupling_comparison(&c, 2, 2.0).unwrap();
        assert!(lhs.abs() < 1e-12 && rhs > 0.0);
    }

    #[test]
    fn fit_finds_smallest_power() {
        assert_eq!(fit_power_of_two(10, |l| l >= 5.0), Some(8.0));
        assert_eq!(fit_power_of_two(2, |l| l >= 5.0), None);
    }

    #[test]
    fn stochastic_terms_below_deterministic() {
        let law = DiscreteDistribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let h = Kernel::from_fn(2, 1, law, |x| vec![(x[0] as f64 - 1.0) * (x[1] as f64 + 0.5)]).unwrap();
        let c = CalibrationConstants::default();
        let det = moment_bound(&h, 3, 2.0, &c, BoundMode::Deterministic).unwrap();
        let sto = moment_bound(&h, 3, 2.0, &c, BoundMode::Stochastic { reps: 200, seed: 3 }).unwrap();
        for (a, b) in det.terms.iter().zip(&sto.terms) {
            assert!(b.value <= a.value + 1e-12, "{}", a.label());
        }
    }
}

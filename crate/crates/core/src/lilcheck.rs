//! Growth curves of truncated norms, LIL certificates and truncation trends.
//!
//! On a finite alphabet every truncated norm saturates, so the certificate
//! reports the grid maximum `D*` of `‖h‖_{K,J,u} / (LL u)^{(d − deg J)/2}`
//! rather than a limit.

use rayon::prelude::*;
use serde::Serialize;

use crate::indexing::{enumerate_partition_specs, PartitionSpec};
use crate::kernel::{ll, CalibrationConstants, Kernel, DEFAULT_CANONICAL_TOL};
use crate::norms::{norm_kj_with, norm_kju_with, saturation_u};
use crate::simulate::{lil_ratio_sequence, LilReport, SumKind};
use crate::solver::SolverOptions;
use crate::{CertificateError, NormError};

/// Tolerance of the symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Points in the default `u` grid.
pub const DEFAULT_GRID_POINTS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub u: f64,
    pub value: f64,
    pub normalized: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthCurve {
    pub spec: PartitionSpec,
    pub points: Vec<GrowthPoint>,
    pub saturation_u: f64,
}

impl GrowthCurve {
    pub fn max_normalized(&self) -> f64 {
        self.points.iter().map(|p| p.normalized).fold(0.0, f64::max)
    }

    pub fn max_value(&self) -> f64 {
        self.points.iter().map(|p| p.value).fold(0.0, f64::max)
    }

    pub fn converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }
}

/// Log-spaced grid from 1 to `4 p_min^{-1/2}`, `p_min` the smallest positive
/// cell probability of `Σ^d`.
pub fn default_u_grid(h: &Kernel) -> Vec<f64> {
    log_grid(1.0, 4.0 / h.min_cell_prob().sqrt(), DEFAULT_GRID_POINTS)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

fn check_grid(u_grid: &[f64]) -> Result<(), NormError> {
    if u_grid.is_empty() {
        return Err(NormError::InvalidArgument("u grid is empty".into()));
    }
    if u_grid.iter().any(|u| !(u.is_finite() && *u > 0.0)) || u_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NormError::InvalidArgument("u grid must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// `‖h‖_{K,J,u}` along the grid. Each point is warm-started from the
/// certificate of the previous one (feasible for every larger `u`); beyond
/// saturation the untruncated maximizer is used instead.
pub fn growth_curve(h: &Kernel, spec: &PartitionSpec, u_grid: &[f64]) -> Result<GrowthCurve, NormError> {
    growth_curve_with(h, spec, u_grid, &SolverOptions::default())
}

pub fn growth_curve_with(
    h: &Kernel,
    spec: &PartitionSpec,
    u_grid: &[f64],
    opts: &SolverOptions,
) -> Result<GrowthCurve, NormError> {
    check_grid(u_grid)?;
    let sat = saturation_u(h, spec);
    let untruncated = norm_kj_with(h, spec, opts)?;
    let exponent = (h.order() - spec.deg()) as f64 / 2.0;
    let mut points = Vec::with_capacity(u_grid.len());
    let mut prev = None;
    for &u in u_grid {
        let warm = if u >= sat { Some(&untruncated.certificate) } else { prev.as_ref() };
        let r = norm_kju_with(h, spec, u, opts, warm)?;
        let last = points.last().map_or(0.0, |p: &GrowthPoint| p.value);
        // The previous certificate stays feasible, so the value cannot drop.
        let value = r.value.max(last);
        points.push(GrowthPoint { u, value, normalized: value / ll(u).powf(exponent), converged: r.converged });
        prev = Some(r.certificate);
    }
    Ok(GrowthCurve { spec: spec.clone(), points, saturation_u: sat })
}

/// Simulation settings for the envelope `C*` of a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EnvelopeOptions {
    pub kind: SumKind,
    pub n_max: u32,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LilCertificate {
    pub canonical: bool,
    pub canonical_violation: f64,
    pub symmetric: bool,
    /// Asymmetric kernels are certified for the decoupled statistic only.
    pub decoupled_only: bool,
    /// `E|h|² / (LL|h|)^d`; always finite on a finite alphabet.
    pub integrability_value: f64,
    pub integrability_finite: bool,
    pub curves: Vec<GrowthCurve>,
    /// Grid maximum of the normalized values over all specs.
    pub d_star: f64,
    pub d_star_spec: PartitionSpec,
    pub l_d: f64,
    pub ld_times_d_star: f64,
    /// Largest simulated ratio `|S_n| / (n LL n)^{d/2}`, when requested.
    pub c_star: Option<f64>,
    pub simulation: Option<LilReport>,
    pub converged: bool,
    /// Complete degeneracy, finite integrability and a finite growth maximum.
    pub lil_holds: bool,
}

pub fn lil_certificate(
    h: &Kernel,
    u_grid: &[f64],
    consts: &CalibrationConstants,
    envelope: Option<EnvelopeOptions>,
) -> Result<LilCertificate, CertificateError> {
    lil_certificate_with(h, u_grid, consts, envelope, DEFAULT_CANONICAL_TOL, &SolverOptions::default())
}

pub fn lil_certificate_with(
    h: &Kernel,
    u_grid: &[f64],
    consts: &CalibrationConstants,
    envelope: Option<EnvelopeOptions>,
    canonical_tol: f64,
    opts: &SolverOptions,
) -> Result<LilCertificate, CertificateError> {
    consts.validate().map_err(|e| CertificateError::InvalidArgument(e.to_string()))?;
    let canon = h.is_canonical(canonical_tol);
    let symmetric = h.is_symmetric(SYMMETRY_TOL);
    let integrability_value = h.ll_weighted_second_moment();
    let curves: Vec<GrowthCurve> = enumerate_partition_specs(h.order())
        .par_iter()
        .map(|s| growth_curve_with(h, s, u_grid, opts))
        .collect::<Result<_, _>>()?;
    let (d_star, d_star_spec) = curves
        .iter()
        .map(|c| (c.max_normalized(), &c.spec))
        .fold((f64::NEG_INFINITY, &curves[0].spec), |best, cur| if cur.0 > best.0 { cur } else { best });
    let d_star = d_star.max(0.0);
    let simulation = envelope.map(|e| lil_ratio_sequence(h, e.kind, e.n_max, e.reps, e.seed)).transpose()?;
    let l_d = consts.l_d(h.order());
    let integrability_finite = integrability_value.is_finite();
    Ok(LilCertificate {
        canonical: canon.canonical,
        canonical_violation: canon.max_violation,
        symmetric,
        decoupled_only: !symmetric,
        integrability_value,
        integrability_finite,
        converged: curves.iter().all(GrowthCurve::converged),
        d_star_spec: d_star_spec.clone(),
        curves,
        d_star,
        l_d,
        ld_times_d_star: l_d * d_star,
        c_star: simulation.as_ref().map(|s| s.envelope),
        simulation,
        lil_holds: canon.canonical && integrability_finite && d_star.is_finite(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    Growing,
    Stable,
    Shrinking,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationTrend {
    pub curves: Vec<GrowthCurve>,
    /// Per-kernel maxima of the normalized values.
    pub normalized_maxima: Vec<f64>,
    /// Per-kernel maxima of the raw norm values.
    pub raw_maxima: Vec<f64>,
    pub normalized_trend: Trend,
    pub raw_trend: Trend,
}

/// Relative spread below which a sequence of maxima counts as stable.
pub const STABLE_TOL: f64 = 1e-6;

pub fn classify(seq: &[f64]) -> Trend {
    let hi = seq.iter().copied().fold(0.0, f64::max);
    let lo = seq.iter().copied().fold(f64::INFINITY, f64::min);
    match (seq.first(), seq.last()) {
        (Some(first), Some(last)) if hi - lo > STABLE_TOL * hi => {
            if last >= first {
                Trend::Growing
            } else {
                Trend::Shrinking
            }
        }
        _ => Trend::Stable,
    }
}

/// Growth curves along a refinement sequence of kernels.
pub fn truncation_trend(seq: &[Kernel], spec: &PartitionSpec, u_grid: &[f64]) -> Result<TruncationTrend, NormError> {
    let first = seq.first().ok_or_else(|| NormError::InvalidArgument("empty kernel sequence".into()))?;
    for w in seq.windows(2) {
        if w[1].order() != first.order() || w[1].dim() != first.dim() {
            return Err(NormError::InvalidArgument("kernels must share d and q".into()));
        }
        if w[1].alphabet_size() < w[0].alphabet_size() {
            return Err(NormError::InvalidArgument("alphabets must be nondecreasing".into()));
        }
    }
    if seq.iter().any(|k| k.order() != first.order() || k.dim() != first.dim()) {
        return Err(NormError::InvalidArgument("kernels must share d and q".into()));
    }
    let curves: Vec<GrowthCurve> =
        seq.par_iter().map(|h| growth_curve(h, spec, u_grid)).collect::<Result<_, _>>()?;
    let normalized_maxima: Vec<f64> = curves.iter().map(GrowthCurve::max_normalized).collect();
    let raw_maxima: Vec<f64> = curves.iter().map(GrowthCurve::max_value).collect();
    Ok(TruncationTrend {
        normalized_trend: classify(&normalized_maxima),
        raw_trend: classify(&raw_maxima),
        curves,
        normalized_maxima,
        raw_maxima,
    })
}

//! Exact enumeration and seeded Monte Carlo for the four U-statistic sums.
//!
//! On a finite alphabet every sum is `Σ_x h(x) W(x)` for an integer
//! multiplicity table `W` over `Σ^d` built from symbol counts of the sample:
//!
//! - full grid `|i| ≤ n`: `W(x) = Π_k N_k(x_k)`;
//! - off-diagonal `I_n^d`: Möbius inversion over set partitions `π` of
//!   `{1..d}`, `W(x) = Σ_π μ(π) Π_{B∈π} N_B(x_B)` where `N_B` counts sample
//!   positions `i` hitting `x_k` in every column `k ∈ B` simultaneously;
//! - diagonal: full minus off-diagonal, exactly, in integer arithmetic.
//!
//! Signs enter the counts as signed tallies, so randomized sums use the same
//! tables. Counts update incrementally, which lets LIL paths extend a prefix.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::indexing::{enumerate_partitions, partition_moebius, CoordSet, Partition};
use crate::kernel::{decode_into, ll, DiscreteDistribution, Kernel};
use crate::rng::{stream, StreamRole};
use crate::SimError;

/// Largest number of configurations an exact enumeration may visit.
pub const ENUMERATION_LIMIT: u128 = 1 << 24;
/// Largest dyadic exponent accepted by [`lil_ratio_sequence`].
pub const MAX_DYADIC_EXPONENT: u32 = 20;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SumKind {
    Undecoupled,
    Decoupled,
    RandomizedUndecoupled,
    RandomizedDecoupled,
}

impl SumKind {
    pub const ALL: [SumKind; 4] =
        [SumKind::Undecoupled, SumKind::Decoupled, SumKind::RandomizedUndecoupled, SumKind::RandomizedDecoupled];

    pub fn is_decoupled(self) -> bool {
        matches!(self, SumKind::Decoupled | SumKind::RandomizedDecoupled)
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, SumKind::RandomizedUndecoupled | SumKind::RandomizedDecoupled)
    }

    /// Number of sample columns consumed for order `d`.
    pub fn columns(self, d: usize) -> usize {
        if self.is_decoupled() {
            d
        } else {
            1
        }
    }

    /// The index region the sum runs over: the full grid for decoupled sums,
    /// the off-diagonal set for undecoupled ones.
    pub fn region(self) -> IndexRegion {
        if self.is_decoupled() {
            IndexRegion::Full
        } else {
            IndexRegion::OffDiagonal
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SumKind::Undecoupled => "undecoupled",
            SumKind::Decoupled => "decoupled",
            SumKind::RandomizedUndecoupled => "randomized_undecoupled",
            SumKind::RandomizedDecoupled => "randomized_decoupled",
        }
    }
}

impl fmt::Display for SumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SumKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        SumKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SimError::InvalidArgument(format!("unknown sum kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IndexRegion {
    Full,
    OffDiagonal,
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SampleConfig {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub kind: SumKind,
}

impl SampleConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 || self.reps == 0 {
            return Err(SimError::InvalidArgument(format!("n = {} and reps = {} must be positive", self.n, self.reps)));
        }
        Ok(())
    }
}

/// A drawn sample: `columns[k][i]` is `X_{i+1}^{(k+1)}` (or `X_{i+1}` for the
/// single undecoupled column), `signs` likewise for Rademacher variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Draws {
    pub columns: Vec<Vec<usize>>,
    pub signs: Option<Vec<Vec<i8>>>,
}

impl Draws {
    pub fn n(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

/// One named estimate with its 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub estimates: Vec<Estimate>,
    pub reps_used: usize,
    pub seed: u64,
}

impl SimReport {
    pub fn get(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// Symbol counts of a growing sample.
#[derive(Clone, Debug)]
pub struct SumAccumulator {
    kind: SumKind,
    d: usize,
    m: usize,
    n: usize,
    /// Decoupled: signed joint counts per nonempty column subset (bitmask).
    joint: Vec<Vec<i64>>,
    /// Undecoupled: plain and signed counts per symbol.
    plain: Vec<i64>,
    signed: Vec<i64>,
    partitions: Vec<(Partition, i64)>,
}

impl SumAccumulator {
    pub fn new(kind: SumKind, d: usize, m: usize) -> Self {
        let joint = if kind.is_decoupled() {
            (0..1u32 << d).map(|b| vec![0; m.pow(b.count_ones())]).collect()
        } else {
            Vec::new()
        };
        let partitions =
            enumerate_partitions(CoordSet::full(d)).into_iter().map(|p| { let mu = partition_moebius(&p); (p, mu) }).collect();
        SumAccumulator { kind, d, m, n: 0, joint, plain: vec![0; m], signed: vec![0; m], partitions }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Appends sample position `n + 1`: one symbol (and sign) per column.
    pub fn push(&mut self, xs: &[usize], eps: &[i8]) {
        self.n += 1;
        if self.kind.is_decoupled() {
            for b in 1..self.joint.len() {
                let mut idx = 0usize;
                let mut sign = 1i64;
                for k in 0..self.d {
                    if b >> k & 1 == 1 {
                        idx = idx * self.m + xs[k];
                        if self.kind.is_randomized() {
                            sign *= eps[k] as i64;
                        }
                    }
                }
                self.joint[b][idx] += sign;
            }
        } else {
            self.plain[xs[0]] += 1;
            self.signed[xs[0]] += if self.kind.is_randomized() { eps[0] as i64 } else { 1 };
        }
    }

    fn block_count(&self, block: CoordSet, x: &[usize]) -> i128 {
        if self.kind.is_decoupled() {
            let idx = block.axes().into_iter().fold(0usize, |acc, a| acc * self.m + x[a]);
            self.joint[block.bits() as usize][idx] as i128
        } else {
            let mut labels = block.axes().into_iter();
            let a = x[labels.next().expect("nonempty block")];
            if labels.any(|k| x[k] != a) {
                return 0;
            }
            // ε_i^{|B|} is 1 for even |B|.
            if block.len().is_multiple_of(2) {
                self.plain[a] as i128
            } else {
                self.signed[a] as i128
            }
        }
    }

    /// Integer multiplicity of every cell of `Σ^d` in the requested region.
    pub fn multiplicities(&self, region: IndexRegion) -> Vec<i128> {
        let cells = self.m.pow(self.d as u32);
        let mut x = vec![0usize; self.d];
        let finest = self.partitions.last().expect("at least one partition");
        (0..cells)
            .map(|c| {
                decode_into(c, self.m, &mut x);
                let full = || finest.0.blocks().iter().map(|&b| self.block_count(b, &x)).product::<i128>();
                let off = || {
                    self.partitions
                        .iter()
                        .map(|(p, mu)| *mu as i128 * p.blocks().iter().map(|&b| self.block_count(b, &x)).product::<i128>())
                        .sum::<i128>()
                };
                match region {
                    IndexRegion::Full => full(),
                    IndexRegion::OffDiagonal => off(),
                    IndexRegion::Diagonal => full() - off(),
                }
            })
            .collect()
    }

    /// `Σ_x h(x) W(x)` for the requested region.
    pub fn sum(&self, h: &Kernel, region: IndexRegion) -> Vec<f64> {
        weighted_sum(h, &self.multiplicities(region))
    }
}

/// `Σ_x h(x) W(x)`.
pub fn weighted_sum(h: &Kernel, w: &[i128]) -> Vec<f64> {
    let q = h.dim();
    let mut out = vec![0.0; q];
    for (c, &wc) in w.iter().enumerate() {
        if wc != 0 {
            let wf = wc as f64;
            for (o, v) in out.iter_mut().zip(h.cell(c)) {
                *o += wf * v;
            }
        }
    }
    out
}

fn check_draws(h: &Kernel, kind: SumKind, draws: &Draws) -> Result<(), SimError> {
    let d = h.order();
    let cols = kind.columns(d);
    if draws.columns.len() != cols {
        return Err(SimError::Shape(format!("{kind} needs {cols} columns, got {}", draws.columns.len())));
    }
    let n = draws.n();
    if draws.columns.iter().any(|c| c.len() != n) {
        return Err(SimError::Shape("columns differ in length".into()));
    }
    if draws.columns.iter().flatten().any(|&x| x >= h.alphabet_size()) {
        return Err(SimError::Shape("symbol outside the alphabet".into()));
    }
    if kind.is_randomized() {
        let signs = draws.signs.as_ref().ok_or(SimError::MissingSigns)?;
        if signs.len() != cols || signs.iter().any(|s| s.len() != n) {
            return Err(SimError::Shape(format!("{kind} needs {cols} sign columns of length {n}")));
        }
        if signs.iter().flatten().any(|&s| s != 1 && s != -1) {
            return Err(SimError::Shape("signs must be ±1".into()));
        }
    }
    Ok(())
}

fn accumulate(h: &Kernel, kind: SumKind, draws: &Draws) -> SumAccumulator {
    let cols = kind.columns(h.order());
    let mut acc = SumAccumulator::new(kind, h.order(), h.alphabet_size());
    let mut xs = vec![0usize; cols];
    let mut eps = vec![1i8; cols];
    for i in 0..draws.n() {
        for k in 0..cols {
            xs[k] = draws.columns[k][i];
            if let Some(s) = &draws.signs {
                eps[k] = s[k][i];
            }
        }
        acc.push(&xs, &eps);
    }
    acc
}

/// The sum of the given kind: full grid for decoupled kinds, off-diagonal
/// set for undecoupled ones.
pub fn ustat_sum(h: &Kernel, kind: SumKind, draws: &Draws) -> Result<Vec<f64>, SimError> {
    region_sum(h, kind, draws, kind.region())
}

/// Sum of a kind over an explicit index region.
pub fn region_sum(h: &Kernel, kind: SumKind, draws: &Draws, region: IndexRegion) -> Result<Vec<f64>, SimError> {
    check_draws(h, kind, draws)?;
    Ok(accumulate(h, kind, draws).sum(h, region))
}

/// Sum over multi-indices with a repeated coordinate, from a decoupled sample.
pub fn diagonal_sum(h: &Kernel, kind: SumKind, draws: &Draws) -> Result<Vec<f64>, SimError> {
    if !kind.is_decoupled() {
        return Err(SimError::InvalidArgument("diagonal sums are defined for decoupled samples".into()));
    }
    region_sum(h, kind, draws, IndexRegion::Diagonal)
}

/// Inverse-CDF sampler for a discrete law.
#[derive(Clone, Debug)]
pub struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    pub fn new(law: &DiscreteDistribution) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = law.probs().iter().map(|p| { acc += p; acc }).collect();
        // Pin the top of the support to 1 so no draw falls off the end.
        if let Some(last) = law.probs().iter().rposition(|&p| p > 0.0) {
            cdf[last..].iter_mut().for_each(|c| *c = 1.0);
        }
        Sampler { cdf }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u)
    }
}

fn rademacher(rng: &mut ChaCha8Rng) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

/// Draws a sample for replicate `rep`; streams are keyed by `(rep, 0, column)`.
pub fn draw_sample(h: &Kernel, kind: SumKind, n: usize, seed: u64, rep: u64) -> Draws {
    let sampler = Sampler::new(h.law());
    let cols = kind.columns(h.order());
    let columns = (0..cols)
        .map(|k| {
            let mut rng = stream(seed, StreamRole::Sample, rep, 0, k as u64);
            (0..n).map(|_| sampler.sample(&mut rng)).collect()
        })
        .collect();
    let signs = kind.is_randomized().then(|| {
        (0..cols)
            .map(|k| {
                let mut rng = stream(seed, StreamRole::Sign, rep, 0, k as u64);
                (0..n).map(|_| rademacher(&mut rng)).collect()
            })
            .collect()
    });
    Draws { columns, signs }
}

/// Number of configurations an exact enumeration of `(n, kind)` visits.
pub fn enumeration_count(h: &Kernel, n: usize, kind: SumKind) -> u128 {
    let support = h.law().probs().iter().filter(|&&p| p > 0.0).count() as u128;
    let slots = (n * kind.columns(h.order())) as u32;
    let mut count = support.saturating_pow(slots);
    if kind.is_randomized() {
        count = count.saturating_mul(1u128.checked_shl(slots).unwrap_or(u128::MAX));
    }
    count
}

/// The exact law of the sum over `region`: a list of `(probability, value)`.
pub fn enumerate_outcomes(
    h: &Kernel,
    n: usize,
    kind: SumKind,
    region: IndexRegion,
) -> Result<Vec<(f64, Vec<f64>)>, SimError> {
    if n == 0 {
        return Err(SimError::InvalidArgument("n must be positive".into()));
    }
    let count = enumeration_count(h, n, kind);
    if count > ENUMERATION_LIMIT {
        return Err(SimError::Guard { what: "enumeration count", count, limit: ENUMERATION_LIMIT });
    }
    let probs = h.law().probs();
    let support: Vec<usize> = (0..probs.len()).filter(|&a| probs[a] > 0.0).collect();
    let cols = kind.columns(h.order());
    let slots = n * cols;
    let sign_slots = if kind.is_randomized() { slots } else { 0 };
    let sign_weight = 0.5f64.powi(sign_slots as i32);

    let mut out = Vec::with_capacity(count as usize);
    let mut sym = vec![0usize; slots];
    loop {
        let p: f64 = sym.iter().map(|&s| probs[support[s]]).product::<f64>() * sign_weight;
        for mask in 0u64..(1u64 << sign_slots) {
            let columns =
                (0..cols).map(|k| (0..n).map(|i| support[sym[k * n + i]]).collect()).collect();
            let signs = kind.is_randomized().then(|| {
                (0..cols)
                    .map(|k| (0..n).map(|i| if mask >> (k * n + i) & 1 == 1 { -1 } else { 1 }).collect())
                    .collect()
            });
            let draws = Draws { columns, signs };
            out.push((p, accumulate(h, kind, &draws).sum(h, region)));
        }
        // Odometer over symbol assignments.
        let mut pos = 0;
        while pos < slots {
            sym[pos] += 1;
            if sym[pos] < support.len() {
                break;
            }
            sym[pos] = 0;
            pos += 1;
        }
        if pos == slots {
            break;
        }
    }
    Ok(out)
}

fn vnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `E|S|^p` by full enumeration.
pub fn exact_moment(h: &Kernel, n: usize, p: f64, kind: SumKind) -> Result<f64, SimError> {
    if !(p > 0.0) {
        return Err(SimError::InvalidArgument(format!("moment order p = {p} must be positive")));
    }
    let outcomes = enumerate_outcomes(h, n, kind, kind.region())?;
    Ok(outcomes.iter().map(|(w, s)| w * vnorm(s).powf(p)).sum())
}

/// `P(|S| ≥ t)` by full enumeration.
pub fn exact_tail(h: &Kernel, n: usize, t: f64, kind: SumKind) -> Result<f64, SimError> {
    let outcomes = enumerate_outcomes(h, n, kind, kind.region())?;
    Ok(outcomes.iter().filter(|(_, s)| vnorm(s) >= t).map(|(w, _)| w).sum())
}

/// `Var(S)` of a scalar sum by full enumeration.
pub fn exact_variance(h: &Kernel, n: usize, kind: SumKind) -> Result<f64, SimError> {
    if h.dim() != 1 {
        return Err(SimError::InvalidArgument("variance needs a scalar kernel (q = 1)".into()));
    }
    let outcomes = enumerate_outcomes(h, n, kind, kind.region())?;
    let mean: f64 = outcomes.iter().map(|(w, s)| w * s[0]).sum();
    Ok(outcomes.iter().map(|(w, s)| w * (s[0] - mean).powi(2)).sum())
}

/// `|S|` for each replicate, drawn from counter-keyed streams.
pub fn sample_norms(h: &Kernel, config: &SampleConfig) -> Result<Vec<f64>, SimError> {
    config.validate()?;
    Ok((0..config.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let draws = draw_sample(h, config.kind, config.n, config.seed, rep);
            vnorm(&accumulate(h, config.kind, &draws).sum(h, config.kind.region()))
        })
        .collect())
}

/// Monte Carlo `E|S|^p` with a normal-approximation 95% half-width.
pub fn mc_moment(h: &Kernel, config: &SampleConfig, p: f64) -> Result<SimReport, SimError> {
    let norms = sample_norms(h, config)?;
    Ok(moment_report(&norms, p, config))
}

pub fn moment_report(norms: &[f64], p: f64, config: &SampleConfig) -> SimReport {
    let vals: Vec<f64> = norms.iter().map(|s| s.powf(p)).collect();
    let (mean, hw) = mean_half_width(&vals);
    SimReport {
        estimates: vec![Estimate { name: "moment".into(), value: mean, half_width: hw, lower: mean - hw, upper: mean + hw }],
        reps_used: norms.len(),
        seed: config.seed,
    }
}

fn mean_half_width(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// Monte Carlo `P(|S| ≥ t)` with a Wilson 95% interval.
pub fn mc_tail(h: &Kernel, config: &SampleConfig, t: f64) -> Result<SimReport, SimError> {
    if !(t >= 0.0) {
        return Err(SimError::InvalidArgument(format!("threshold t = {t} must be nonnegative")));
    }
    let norms = sample_norms(h, config)?;
    Ok(tail_report(&norms, t, config))
}

pub fn tail_report(norms: &[f64], t: f64, config: &SampleConfig) -> SimReport {
    let hits = norms.iter().filter(|&&s| s >= t).count();
    let (lower, upper) = wilson_interval(hits, norms.len());
    let value = hits as f64 / norms.len() as f64;
    SimReport {
        estimates: vec![Estimate {
            name: "tail".into(),
            value,
            half_width: (value - lower).max(upper - value),
            lower,
            upper,
        }],
        reps_used: norms.len(),
        seed: config.seed,
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(hits: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let phat = hits as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = Z95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lower = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let upper = if hits == trials { 1.0 } else { (center + half).min(1.0) };
    (lower, upper)
}

/// Per-level statistics of `|S_{2^k}| / (2^k LL 2^k)^{d/2}` across replicates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LilLevel {
    pub k: u32,
    pub n: u64,
    pub median: f64,
    pub max: f64,
    /// Same statistics for the diagonal part (decoupled kinds only).
    pub diag_median: Option<f64>,
    pub diag_max: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    Bounded,
    Divergent,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LilReport {
    pub kind: SumKind,
    pub levels: Vec<LilLevel>,
    /// `paths[rep][k]`.
    pub paths: Vec<Vec<f64>>,
    /// Least-squares slope of log median ratio against log n over the upper
    /// half of the levels.
    pub slope: f64,
    pub trend: Trend,
    /// Largest ratio over all levels and replicates.
    pub envelope: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Slope above which a ratio path counts as divergent.
pub const DIVERGENCE_SLOPE: f64 = 0.25;

/// Ratio paths `|S_{2^k}| / (2^k LL 2^k)^{d/2}` for `k = 0..=n_max`. Draws for
/// level `k` extend those of level `k - 1`; the new block of positions comes
/// from streams keyed by `(rep, k, column)`.
pub fn lil_ratio_sequence(
    h: &Kernel,
    kind: SumKind,
    n_max: u32,
    reps: usize,
    seed: u64,
) -> Result<LilReport, SimError> {
    if n_max > MAX_DYADIC_EXPONENT {
        return Err(SimError::Guard { what: "dyadic exponent", count: n_max as u128, limit: MAX_DYADIC_EXPONENT as u128 });
    }
    if reps == 0 {
        return Err(SimError::InvalidArgument("reps must be positive".into()));
    }
    let d = h.order();
    let cols = kind.columns(d);
    let sampler = Sampler::new(h.law());
    let half_d = d as f64 / 2.0;

    let per_rep: Vec<(Vec<f64>, Vec<f64>)> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut acc = SumAccumulator::new(kind, d, h.alphabet_size());
            let mut ratios = Vec::with_capacity(n_max as usize + 1);
            let mut diags = Vec::with_capacity(n_max as usize + 1);
            let mut xs = vec![0usize; cols];
            let mut eps = vec![1i8; cols];
            for k in 0..=n_max {
                let target = 1u64 << k;
                let new = (target - acc.n() as u64) as usize;
                let mut xr: Vec<ChaCha8Rng> =
                    (0..cols).map(|c| stream(seed, StreamRole::Sample, rep, k as u64, c as u64)).collect();
                let mut sr: Vec<ChaCha8Rng> =
                    (0..cols).map(|c| stream(seed, StreamRole::Sign, rep, k as u64, c as u64)).collect();
                for _ in 0..new {
                    for c in 0..cols {
                        xs[c] = sampler.sample(&mut xr[c]);
                        if kind.is_randomized() {
                            eps[c] = rademacher(&mut sr[c]);
                        }
                    }
                    acc.push(&xs, &eps);
                }
                let nf = target as f64;
                let scale = (nf * ll(nf)).powf(half_d);
                ratios.push(vnorm(&acc.sum(h, kind.region())) / scale);
                if kind.is_decoupled() {
                    diags.push(vnorm(&acc.sum(h, IndexRegion::Diagonal)) / scale);
                }
            }
            (ratios, diags)
        })
        .collect();

    let mut levels = Vec::with_capacity(n_max as usize + 1);
    for k in 0..=n_max as usize {
        let col: Vec<f64> = per_rep.iter().map(|(r, _)| r[k]).collect();
        let (diag_median, diag_max) = if kind.is_decoupled() {
            let dc: Vec<f64> = per_rep.iter().map(|(_, dg)| dg[k]).collect();
            (Some(median(&dc)), Some(dc.iter().copied().fold(0.0, f64::max)))
        } else {
            (None, None)
        };
        levels.push(LilLevel {
            k: k as u32,
            n: 1u64 << k,
            median: median(&col),
            max: col.iter().copied().fold(0.0, f64::max),
            diag_median,
            diag_max,
        });
    }
    let slope = trend_slope(&levels);
    let envelope = levels.iter().map(|l| l.max).fold(0.0, f64::max);
    Ok(LilReport {
        kind,
        trend: if slope > DIVERGENCE_SLOPE { Trend::Divergent } else { Trend::Bounded },
        slope,
        envelope,
        levels,
        paths: per_rep.into_iter().map(|(r, _)| r).collect(),
        reps,
        seed,
    })
}

fn trend_slope(levels: &[LilLevel]) -> f64 {
    let start = levels.len() / 2;
    let pts: Vec<(f64, f64)> = levels[start..]
        .iter()
        .map(|l| ((l.n as f64).ln(), l.median.max(1e-300).ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let np = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / np;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / np;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let n = s.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

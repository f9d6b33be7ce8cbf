use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ustatlab_core::bounds::{
    decoupling_comparison, moment_bound_from, pz_exact_probability, pz_lower, tail_bound_from, variance_bound,
    BoundMode, NormSummary, PzOutcome,
};
use ustatlab_core::lilcheck::{default_u_grid, lil_certificate_with, log_grid, EnvelopeOptions};
use ustatlab_core::norms::{norm_kj_with, norm_kju_with, replicated_array_norm_with};
use ustatlab_core::rng::mix;
use ustatlab_core::simulate::{
    enumeration_count, exact_moment, exact_tail, exact_variance, lil_ratio_sequence, moment_report, sample_norms,
    tail_report, LilReport, ENUMERATION_LIMIT,
};
use ustatlab_core::{
    enumerate_partition_specs, CalibrationConstants, Kernel, PartitionSpec, SampleConfig, SolverOptions, SumKind,
};

use crate::report::{Num, Report, Row};
use crate::{CliError, Global};

pub const MAX_ALPHABET: usize = 16;
pub const MAX_ORDER: usize = 4;
/// Sample size cap for Monte Carlo commands.
pub const MAX_SAMPLE: usize = 1 << 20;
pub const MAX_REPS: usize = 1 << 22;
/// Cap on the tensor size of a replicated array norm.
pub const MAX_REPLICATED_CELLS: usize = 1 << 22;

pub fn load_kernel(path: &Path) -> Result<Kernel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let h = Kernel::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if h.alphabet_size() > MAX_ALPHABET {
        return Err(CliError::Guard(format!("alphabet size m = {} exceeds the limit {MAX_ALPHABET}", h.alphabet_size())));
    }
    if h.order() > MAX_ORDER {
        return Err(CliError::Guard(format!("order d = {} exceeds the limit {MAX_ORDER}", h.order())));
    }
    Ok(h)
}

fn constants(g: &Global, d: usize) -> Result<CalibrationConstants, CliError> {
    let c = match g.l_d {
        Some(l) => CalibrationConstants::with_l(d, l),
        None => CalibrationConstants::default(),
    };
    c.validate()?;
    Ok(c)
}

pub fn solver_options(g: &Global) -> SolverOptions {
    SolverOptions { tol: g.tol, seed: mix(g.seed, 0x736f_6c76, 0, 0), ..SolverOptions::default() }
}

fn check_sampling(g: &Global, n: usize) -> Result<(), CliError> {
    if n == 0 || g.reps == 0 {
        return Err(CliError::Input("n and reps must be positive".into()));
    }
    if n > MAX_SAMPLE {
        return Err(CliError::Guard(format!("sample size n = {n} exceeds the limit {MAX_SAMPLE}")));
    }
    if g.reps > MAX_REPS {
        return Err(CliError::Guard(format!("reps = {} exceeds the limit {MAX_REPS}", g.reps)));
    }
    Ok(())
}

fn start(command: &'static str, g: &Global, kernel: &Path, h: &Kernel) -> Result<Report, CliError> {
    let mut r = Report::new(command);
    r.config("kernel", kernel.display());
    r.config("d", h.order());
    r.config("m", h.alphabet_size());
    r.config("q", h.dim());
    r.config("seed", g.seed);
    r.config("reps", g.reps);
    r.config("tol", g.tol);
    r.config("Ld", g.l_d.map_or("default".to_string(), |l| Num(l).to_string()));
    r.constants = constants(g, h.order())?.describe();
    Ok(r)
}

fn join<T: crate::report::Cell>(xs: &[T]) -> String {
    xs.iter().map(|x| x.cell()).collect::<Vec<_>>().join(";")
}

fn parse_spec(text: &str, d: usize) -> Result<PartitionSpec, CliError> {
    let spec = PartitionSpec::parse(text).ok_or_else(|| CliError::Input(format!("malformed spec `{text}`")))?;
    if !spec.is_valid_for(d) {
        return Err(CliError::Input(format!("spec `{text}` is not a pair (K, J) for order {d}")));
    }
    Ok(spec)
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    pub kernel: PathBuf,
    /// Write the projected kernel to this file.
    #[arg(long)]
    pub save: Option<PathBuf>,
}

pub fn project(g: &Global, a: &ProjectArgs) -> Result<Report, CliError> {
    let h = load_kernel(&a.kernel)?;
    let mut r = start("project", g, &a.kernel, &h)?;
    let pi = h.hoeffding_project();
    let before = h.is_canonical(g.tol);
    let after = pi.is_canonical(g.tol);
    r.summary("input_canonical", before.canonical);
    r.summary("input_max_violation", before.max_violation);
    r.summary("projected_canonical", after.canonical);
    r.summary("projected_max_violation", after.max_violation);
    r.summary("symmetric", h.is_symmetric(1e-12));
    r.summary("projected_second_moment", pi.second_moment());
    let m = h.alphabet_size();
    let mut x = vec![0usize; h.order()];
    for c in 0..h.num_cells() {
        ustatlab_core::kernel::decode_into(c, m, &mut x);
        let cell = join(&x);
        for (j, (v, w)) in h.cell(c).iter().zip(pi.cell(c)).enumerate() {
            r.push(Row::new("pi_h", *w).detail(format!("x={cell};j={j};h={}", Num(*v))));
        }
    }
    if let Some(path) = &a.save {
        std::fs::write(path, pi.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(r)
}

#[derive(Args, Debug)]
pub struct NormsArgs {
    pub kernel: PathBuf,
    /// One spec such as `K=1;J=2|3`; all specs when absent.
    #[arg(long)]
    pub spec: Option<String>,
    /// Truncation levels (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub u: Vec<f64>,
    /// Also evaluate the array norm of the constant array over `{1..n}^d`.
    #[arg(long)]
    pub replicate: Option<usize>,
}

pub fn norms(g: &Global, a: &NormsArgs) -> Result<Report, CliError> {
    let h = load_kernel(&a.kernel)?;
    let mut r = start("norms", g, &a.kernel, &h)?;
    r.config("spec", a.spec.as_deref().unwrap_or("all"));
    r.config("u", join(&a.u));
    r.config("replicate", a.replicate.map_or("none".to_string(), |n| n.to_string()));
    let d = h.order();
    let specs = match &a.spec {
        Some(s) => vec![parse_spec(s, d)?],
        None => enumerate_partition_specs(d),
    };
    if let Some(n) = a.replicate {
        let cells = (n * h.alphabet_size()).checked_pow(d as u32).and_then(|c| c.checked_mul(h.dim()));
        if cells.is_none_or(|c| c > MAX_REPLICATED_CELLS) {
            return Err(CliError::Guard(format!("replicated tensor exceeds {MAX_REPLICATED_CELLS} cells")));
        }
        if n == 0 {
            return Err(CliError::Input("--replicate must be positive".into()));
        }
    }
    let opts = solver_options(g);
    for spec in &specs {
        let desc = spec.descriptor();
        let res = norm_kj_with(&h, spec, &opts)?;
        let kj = res.value;
        if !res.converged {
            r.warn(format!("solver did not converge for {desc}"));
        }
        r.push(
            Row::new("norm", res.value)
                .spec(&desc)
                .flag(if res.converged { "converged" } else { "not_converged" })
                .detail(format!("restarts={};gap={}", res.restarts_used, Num(res.gap_estimate))),
        );
        // A certificate at level u stays feasible for every larger level.
        let mut warm: Option<(f64, _)> = None;
        for &u in &a.u {
            let start = warm.as_ref().filter(|(prev, _)| *prev <= u).map(|(_, c)| c);
            let res = norm_kju_with(&h, spec, u, &opts, start)?;
            if !res.converged {
                r.warn(format!("solver did not converge for {desc} at u={u}"));
            }
            r.push(
                Row::new("norm_u", res.value)
                    .spec(&desc)
                    .u(u)
                    .flag(if res.converged { "converged" } else { "not_converged" })
                    .detail(format!("restarts={};gap={}", res.restarts_used, Num(res.gap_estimate))),
            );
            warm = Some((u, res.certificate));
        }
        if let Some(n) = a.replicate {
            let res = replicated_array_norm_with(&h, spec, n, &opts)?;
            if !res.converged {
                r.warn(format!("solver did not converge for the replicated array, {desc}"));
            }
            r.push(
                Row::new("array_norm", res.value)
                    .spec(&desc)
                    .n(n)
                    .flag(if res.converged { "converged" } else { "not_converged" })
                    .detail(format!("kernel_norm_times_n_half_d={}", Num(kj * (n as f64).powf(d as f64 / 2.0)))),
            );
        }
    }
    r.summary("specs", specs.len());
    Ok(r)
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub kernel: PathBuf,
    #[arg(long, default_value = "decoupled")]
    pub kind: SumKind,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Moment orders (comma separated); `2` when neither `--p` nor `--t` is given.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Tail thresholds (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    /// Compute moments and tails by full enumeration.
    #[arg(long)]
    pub exact: bool,
    /// LIL ratio paths for n = 2^k, k = 0..=NMAX, instead of moments.
    #[arg(long)]
    pub lil_nmax: Option<u32>,
}

fn lil_rows(r: &mut Report, lil: &LilReport) {
    for l in &lil.levels {
        r.push(Row::new("ratio_median", l.median).n(l.n).detail(format!("k={}", l.k)));
        r.push(Row::new("ratio_max", l.max).n(l.n).detail(format!("k={}", l.k)));
        if let (Some(med), Some(max)) = (l.diag_median, l.diag_max) {
            r.push(Row::new("diag_ratio_median", med).n(l.n).detail(format!("k={}", l.k)));
            r.push(Row::new("diag_ratio_max", max).n(l.n).detail(format!("k={}", l.k)));
        }
    }
    r.summary("lil_kind", lil.kind);
    r.summary("lil_slope", lil.slope);
    r.summary("lil_trend", format!("{:?}", lil.trend));
    r.summary("lil_envelope", lil.envelope);
}

pub fn simulate(g: &Global, a: &SimulateArgs) -> Result<Report, CliError> {
    let h = load_kernel(&a.kernel)?;
    let mut r = start("simulate", g, &a.kernel, &h)?;
    r.config("kind", a.kind);
    if let Some(nmax) = a.lil_nmax {
        r.config("lil_nmax", nmax);
        check_sampling(g, 1)?;
        let lil = lil_ratio_sequence(&h, a.kind, nmax, g.reps, g.seed)?;
        lil_rows(&mut r, &lil);
        return Ok(r);
    }
    let ps = if a.p.is_empty() && a.t.is_empty() { vec![2.0] } else { a.p.clone() };
    r.config("n", a.n);
    r.config("p", join(&ps));
    r.config("t", join(&a.t));
    r.config("exact", a.exact);
    if a.exact {
        for &p in &ps {
            r.push(Row::new("moment_exact", exact_moment(&h, a.n, p, a.kind)?).n(a.n).p(p));
        }
        for &t in &a.t {
            r.push(Row::new("tail_exact", exact_tail(&h, a.n, t, a.kind)?).n(a.n).t(t));
        }
        return Ok(r);
    }
    check_sampling(g, a.n)?;
    if ps.iter().any(|p| !(*p > 0.0)) || a.t.iter().any(|t| !(*t >= 0.0)) {
        return Err(CliError::Input("moment orders must be positive and thresholds nonnegative".into()));
    }
    let cfg = SampleConfig { n: a.n, reps: g.reps, seed: g.seed, kind: a.kind };
    let norms = sample_norms(&h, &cfg)?;
    for &p in &ps {
        let e = &moment_report(&norms, p, &cfg).estimates[0];
        r.push(Row::new("moment_mc", e.value).n(a.n).p(p).ci(e.lower, e.upper));
    }
    for &t in &a.t {
        let e = &tail_report(&norms, t, &cfg).estimates[0];
        r.push(Row::new("tail_mc", e.value).n(a.n).t(t).ci(e.lower, e.upper));
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Deterministic,
    Stochastic,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    pub kernel: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Moment orders (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub p: Vec<f64>,
    /// Tail levels t (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Deterministic)]
    pub mode: ModeArg,
    /// Compare each bound with exact or Monte Carlo values.
    #[arg(long)]
    pub verify: bool,
    /// Variance bound (scalar kernels).
    #[arg(long)]
    pub variance: bool,
    /// Paley–Zygmund bound with parameters `a,t,lambda` and N = n.
    #[arg(long)]
    pub pz: Option<String>,
    /// Decoupling comparison at each p, by enumeration.
    #[arg(long)]
    pub decoupling: bool,
}

fn enumerable(h: &Kernel, n: usize, kind: SumKind) -> bool {
    enumeration_count(h, n, kind) <= ENUMERATION_LIMIT
}

fn holds(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "violated"
    }
}

pub fn bounds(g: &Global, a: &BoundsArgs) -> Result<Report, CliError> {
    let h = load_kernel(&a.kernel)?;
    let mut r = start("bounds", g, &a.kernel, &h)?;
    r.config("n", a.n);
    r.config("p", join(&a.p));
    r.config("t", join(&a.t));
    r.config("mode", format!("{:?}", a.mode).to_lowercase());
    r.config("verify", a.verify);
    r.config("variance", a.variance);
    r.config("pz", a.pz.as_deref().unwrap_or("none"));
    r.config("decoupling", a.decoupling);
    check_sampling(g, a.n)?;
    let consts = constants(g, h.order())?;
    let summary = NormSummary::new(&h, &solver_options(g))?;
    if !summary.converged {
        r.warn("a partition norm did not converge; bounds use the best value found");
    }
    let mode = match a.mode {
        ModeArg::Deterministic => BoundMode::Deterministic,
        ModeArg::Stochastic => BoundMode::Stochastic { reps: g.reps, seed: g.seed },
    };
    let cfg = SampleConfig { n: a.n, reps: g.reps, seed: g.seed, kind: SumKind::Decoupled };
    let need_mc = a.verify && (!a.t.is_empty() || !enumerable(&h, a.n, SumKind::Decoupled));
    let samples = if need_mc { Some(sample_norms(&h, &cfg)?) } else { None };
    let projected_samples =
        if a.verify && !a.t.is_empty() { Some(sample_norms(&h.hoeffding_project(), &cfg)?) } else { None };

    for &p in &a.p {
        let report = moment_bound_from(&h, &summary, a.n, p, &consts, mode)?;
        for term in &report.terms {
            r.push(
                Row::new("moment_term", term.value)
                    .spec(term.label())
                    .n(a.n)
                    .p(p)
                    .detail(format!("coefficient={};base={}", Num(term.coefficient), Num(term.base))),
            );
        }
        r.push(Row::new("moment_bound", report.bound_value).n(a.n).p(p).detail(format!("Ld={}", Num(report.l_d))));
        if a.verify {
            if enumerable(&h, a.n, SumKind::Decoupled) {
                let m = exact_moment(&h, a.n, p, SumKind::Decoupled)?;
                r.push(Row::new("moment_exact", m).n(a.n).p(p).flag(holds(report.bound_value >= m)));
            } else if let Some(s) = &samples {
                let e = &moment_report(s, p, &cfg).estimates[0];
                r.push(
                    Row::new("moment_mc", e.value)
                        .n(a.n)
                        .p(p)
                        .ci(e.lower, e.upper)
                        .flag(holds(report.bound_value >= e.lower)),
                );
            }
        }
    }
    if a.verify && !a.t.is_empty() && !h.is_canonical(g.tol).canonical {
        r.warn("kernel is not canonical; compare tail_mc_projected, not tail_mc");
    }
    for &t in &a.t {
        let tb = tail_bound_from(&summary, a.n, t, &consts)?;
        r.push(
            Row::new("tail_bound", tb.bound)
                .n(a.n)
                .t(t)
                .detail(format!("threshold={};m1={};m2={};Ld={}", Num(tb.threshold), Num(tb.m1), Num(tb.m2), Num(tb.l_d))),
        );
        for (name, s) in [("tail_mc", &samples), ("tail_mc_projected", &projected_samples)] {
            if let Some(s) = s {
                let e = &tail_report(s, tb.threshold, &cfg).estimates[0];
                r.push(
                    Row::new(name, e.value)
                        .n(a.n)
                        .t(t)
                        .ci(e.lower, e.upper)
                        .flag(holds(tb.bound >= e.lower))
                        .detail(format!("threshold={}", Num(tb.threshold))),
                );
            }
        }
    }
    if a.variance {
        let vb = variance_bound(&h, a.n)?;
        r.push(Row::new("variance_bound", vb).n(a.n));
        if enumerable(&h, a.n, SumKind::Decoupled) {
            let v = exact_variance(&h, a.n, SumKind::Decoupled)?;
            r.push(Row::new("variance_exact", v).n(a.n).flag(holds(v <= vb)));
        }
    }
    if let Some(text) = &a.pz {
        let parts: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Input(format!("--pz expects a,t,lambda, got `{text}`")))?;
        let [pa, pt, lambda] = parts[..] else {
            return Err(CliError::Input(format!("--pz expects a,t,lambda, got `{text}`")));
        };
        match pz_lower(&h, a.n, pa, pt, lambda)? {
            PzOutcome::Bound(b) => {
                r.push(Row::new("pz_lower", b).n(a.n).t(pt).detail(format!("a={};lambda={}", Num(pa), Num(lambda))));
                if enumerable(&h, a.n, SumKind::Decoupled) {
                    let prob = pz_exact_probability(&h, a.n, lambda * pt * pa)?;
                    r.push(Row::new("pz_exact", prob).n(a.n).t(pt).flag(holds(prob >= b)));
                }
            }
            PzOutcome::Rejected(rej) => {
                r.warn(format!("Paley–Zygmund hypothesis failed: {}", rej.inequality));
                r.push(
                    Row::new("pz_rejected", "")
                        .n(a.n)
                        .t(pt)
                        .flag("rejected")
                        .detail(format!("{};lhs={};rhs={}", rej.inequality, Num(rej.lhs), Num(rej.rhs))),
                );
            }
        }
    }
    if a.decoupling {
        for &p in &a.p {
            let (lhs, rhs) = decoupling_comparison(&h, a.n, p)?;
            r.push(Row::new("decoupling_lhs", lhs).n(a.n).p(p));
            r.push(Row::new("decoupling_rhs", rhs).n(a.n).p(p).flag(holds(lhs <= rhs)));
        }
    }
    Ok(r)
}

#[derive(Args, Debug)]
pub struct LilCheckArgs {
    pub kernel: PathBuf,
    /// `lo:hi:points`, log-spaced; defaults to 1 .. 4 p_min^{-1/2}, 24 points.
    #[arg(long)]
    pub u_grid: Option<String>,
    /// Also simulate ratio paths up to n = 2^NMAX for the envelope C*.
    #[arg(long)]
    pub nmax: Option<u32>,
    /// Sum for the envelope; undecoupled for symmetric kernels otherwise decoupled.
    #[arg(long)]
    pub kind: Option<SumKind>,
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Input(format!("--u-grid expects lo:hi:points, got `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, pts] = parts[..] else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let pts: usize = pts.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo) || pts == 0 || pts > 4096 {
        return Err(bad());
    }
    Ok(log_grid(lo, hi, pts))
}

pub fn lil_check(g: &Global, a: &LilCheckArgs) -> Result<Report, CliError> {
    let h = load_kernel(&a.kernel)?;
    let mut r = start("lil-check", g, &a.kernel, &h)?;
    let grid = match &a.u_grid {
        Some(t) => parse_grid(t)?,
        None => default_u_grid(&h),
    };
    r.config("u_grid", a.u_grid.as_deref().unwrap_or("default"));
    r.config("nmax", a.nmax.map_or("none".to_string(), |n| n.to_string()));
    let kind = a.kind.unwrap_or(if h.is_symmetric(1e-12) { SumKind::Undecoupled } else { SumKind::Decoupled });
    let envelope = a.nmax.map(|n_max| EnvelopeOptions { kind, n_max, reps: g.reps, seed: g.seed });
    if envelope.is_some() {
        r.config("kind", kind);
        check_sampling(g, 1)?;
    }
    let consts = constants(g, h.order())?;
    let cert = lil_certificate_with(&h, &grid, &consts, envelope, g.tol, &solver_options(g))?;
    r.summary("canonical", cert.canonical);
    r.summary("canonical_violation", cert.canonical_violation);
    r.summary("symmetric", cert.symmetric);
    r.summary("decoupled_only", cert.decoupled_only);
    r.summary("integrability_value", cert.integrability_value);
    r.summary("integrability_finite", cert.integrability_finite);
    r.summary("d_star", cert.d_star);
    r.summary("d_star_spec", cert.d_star_spec.descriptor());
    r.summary("Ld", cert.l_d);
    r.summary("Ld_times_d_star", cert.ld_times_d_star);
    r.summary("c_star", cert.c_star.map_or("none".to_string(), |c| Num(c).to_string()));
    r.summary("converged", cert.converged);
    r.summary("lil_holds", cert.lil_holds);
    if !cert.canonical {
        r.warn("kernel is not completely degenerate; the LIL fails for it");
    }
    if !cert.converged {
        r.warn("some growth-curve points did not converge");
    }
    for c in &cert.curves {
        let desc = c.spec.descriptor();
        for pt in &c.points {
            let flag = if pt.converged { "converged" } else { "not_converged" };
            r.push(Row::new("norm_u", pt.value).spec(&desc).u(pt.u).flag(flag));
            r.push(Row::new("normalized", pt.normalized).spec(&desc).u(pt.u).flag(flag));
        }
        r.push(Row::new("saturation_u", c.saturation_u).spec(&desc));
    }
    if let Some(sim) = &cert.simulation {
        lil_rows(&mut r, sim);
    }
    Ok(r)
}

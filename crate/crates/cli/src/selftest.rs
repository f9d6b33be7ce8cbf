//! Built-in oracle suite: each check compares a library result with an
//! independent computation on a small instance.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use ustatlab_core::bounds::{decoupling_comparison, variance_bound};
use ustatlab_core::norms::{chaos_star_norm, norm_kj, norm_kju};
use ustatlab_core::rng::{stream, StreamRole};
use ustatlab_core::simulate::{draw_sample, exact_moment, exact_variance, IndexRegion, SumAccumulator};
use ustatlab_core::{
    enumerate_partition_specs, enumerate_partitions, CoordSet, DiscreteDistribution, Kernel, Partition, PartitionSpec,
    SumKind,
};

use crate::report::{Num, Report, Row};
use crate::Global;

fn random_kernel(rng: &mut ChaCha8Rng, d: usize, m: usize, q: usize) -> Kernel {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let law = DiscreteDistribution::new(raw.iter().map(|x| x / total).collect()).expect("normalized law");
    let values = (0..m.pow(d as u32) * q).map(|_| rng.random_range(-1.0..1.0)).collect();
    Kernel::new(d, q, values, law).expect("valid shape")
}

/// Bell numbers from the Bell triangle.
fn bell(upto: usize) -> Vec<usize> {
    let mut out = vec![1];
    let mut row = vec![1usize];
    for _ in 0..upto {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            next.push(next.last().unwrap() + x);
        }
        out.push(next[0]);
        row = next;
    }
    out
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Top singular value of the whitened matrix `sqrt(p_x) h(x,y) sqrt(p_y)`.
fn top_singular(h: &Kernel) -> f64 {
    let m = h.alphabet_size();
    let p = h.law().probs();
    let b: Vec<f64> = (0..m * m).map(|c| p[c / m].sqrt() * h.cell(c)[0] * p[c % m].sqrt()).collect();
    let mut v = vec![1.0; m];
    let mut sigma = 0.0;
    for _ in 0..2000 {
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

fn check(name: &str, pass: bool, detail: String) -> Row {
    Row::new("check", if pass { 1 } else { 0 }).spec(name).flag(if pass { "pass" } else { "fail" }).detail(detail)
}

pub fn run(g: &Global) -> Report {
    let mut r = Report::new("selftest");
    r.config("seed", g.seed);
    r.constants = ustatlab_core::CalibrationConstants::default().describe();
    let mut rng = stream(g.seed, StreamRole::Outer, 0, 0, 0);

    let b = bell(6);
    let ok = (0..=6).all(|d| enumerate_partitions(CoordSet::full(d)).len() == b[d]);
    r.push(check("bell_numbers", ok, format!("B_0..B_6={b:?}")));
    let ok = (1..=5).all(|d| enumerate_partition_specs(d).len() == (0..=d).map(|j| binom(d, j) * b[d - j]).sum::<usize>());
    r.push(check("spec_counts", ok, "sum_j C(d,j) B_(d-j), d<=5".into()));

    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let h = random_kernel(&mut rng, 1 + i % 3, 2 + i % 3, 1 + i % 2);
        let pi = h.hoeffding_project();
        let twice = pi.hoeffding_project();
        let drift = pi.values().iter().zip(twice.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(drift).max(pi.is_canonical(1e-10).max_violation);
    }
    r.push(check("projection", worst <= 1e-10, format!("max_violation={}", Num(worst))));

    let h = random_kernel(&mut rng, 2, 3, 2);
    let v = norm_kj(&h, &PartitionSpec::full_k(2)).map(|r| r.value).unwrap_or(f64::NAN);
    let want = h.second_moment().sqrt();
    r.push(check("l2_norm", (v - want).abs() <= 1e-12, format!("value={};sqrt_second_moment={}", Num(v), Num(want))));

    let sign = Kernel::from_fn(2, 1, DiscreteDistribution::uniform(2), |x| {
        vec![if (x[0] + x[1]) % 2 == 0 { 1.0 } else { -1.0 }]
    })
    .expect("sign kernel");
    let v = norm_kj(&sign, &PartitionSpec::full_k(2)).map(|r| r.value).unwrap_or(f64::NAN);
    r.push(check("sign_kernel", (v - 1.0).abs() <= 1e-12, format!("value={}", Num(v))));

    let law = DiscreteDistribution::new(vec![0.75, 0.25]).expect("law");
    let ex = Kernel::new(1, 1, vec![-1.0, 3.0], law).expect("example");
    let spec = PartitionSpec::new(CoordSet::EMPTY, Partition::from_blocks(vec![CoordSet::singleton(1)]).expect("block"));
    let v1 = norm_kju(&ex, &spec, 1.0).map(|r| r.value).unwrap_or(f64::NAN);
    let v2 = norm_kju(&ex, &spec, 2.0).map(|r| r.value).unwrap_or(f64::NAN);
    let ok = (v1 - 1.5).abs() <= 1e-6 && (v2 - 3f64.sqrt()).abs() <= 1e-6;
    r.push(check("truncated_example", ok, format!("u=1:{};u=2:{}", Num(v1), Num(v2))));

    let spec = PartitionSpec::new(
        CoordSet::EMPTY,
        Partition::from_blocks(vec![CoordSet::singleton(1), CoordSet::singleton(2)]).expect("blocks"),
    );
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let h = random_kernel(&mut rng, 2, 4, 1);
        let v = norm_kj(&h, &spec).map(|r| r.value).unwrap_or(f64::NAN);
        worst = worst.max((v - top_singular(&h)).abs());
    }
    r.push(check("singular_value", worst <= 1e-8, format!("max_abs_diff={}", Num(worst))));

    let mut ok = true;
    for kind in [SumKind::Decoupled, SumKind::RandomizedDecoupled] {
        for rep in 0..10 {
            let h = random_kernel(&mut rng, 3, 3, 1);
            let draws = draw_sample(&h, kind, 6, g.seed, rep);
            let mut acc = SumAccumulator::new(kind, 3, 3);
            for i in 0..6 {
                let xs: Vec<usize> = draws.columns.iter().map(|c| c[i]).collect();
                let eps: Vec<i8> = match &draws.signs {
                    Some(s) => s.iter().map(|c| c[i]).collect(),
                    None => vec![1; 3],
                };
                acc.push(&xs, &eps);
            }
            let full = acc.multiplicities(IndexRegion::Full);
            let off = acc.multiplicities(IndexRegion::OffDiagonal);
            let diag = acc.multiplicities(IndexRegion::Diagonal);
            ok &= full.iter().zip(&off).zip(&diag).all(|((f, o), d)| *f == o + d);
        }
    }
    r.push(check("full_equals_off_plus_diag", ok, "integer multiplicities, d=3, n=6".into()));

    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let h = random_kernel(&mut rng, 2, 2, 1).hoeffding_project();
        let m = exact_moment(&h, 2, 2.0, SumKind::Decoupled).unwrap_or(f64::NAN);
        worst = worst.max((m - 4.0 * h.second_moment()).abs());
    }
    r.push(check("second_moment_identity", worst <= 1e-12, format!("max_abs_diff={}", Num(worst))));

    let mut ok = true;
    for _ in 0..5 {
        let h = random_kernel(&mut rng, 2, 2, 1);
        ok &= decoupling_comparison(&h, 2, 2.0).map(|(l, r)| l <= r).unwrap_or(false);
        let v = exact_variance(&h, 2, SumKind::Decoupled).unwrap_or(f64::NAN);
        ok &= variance_bound(&h, 2).map(|b| v <= b + 1e-12).unwrap_or(false);
    }
    r.push(check("decoupling_and_variance", ok, "d=2, m=2, n=2".into()));

    let a: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v = chaos_star_norm(&a, 7, 1, 1, &PartitionSpec::full_k(1), 2.0).map(|r| r.value).unwrap_or(f64::NAN);
    let want = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    r.push(check("chaos_l2", (v - want).abs() <= 1e-12, format!("value={};l2={}", Num(v), Num(want))));

    let red = r.rows.iter().filter(|row| row.flag != "pass").count();
    r.summary("checks", r.rows.len());
    r.summary("failed", red);
    r
}

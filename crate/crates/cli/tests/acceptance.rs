//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! always exits successfully; the lines are the result.

use std::process::Command;
use std::time::{Duration, Instant};

use copula_ci::copula::{draw_dependent_samples, CorrelationMatrix, RngStream};
use copula_ci::dist::DistributionSpec;
use copula_ci::engine::hdi_interval;
use copula_ci::epi::{fit_beta_ci, rogan_gladen, ProbInterval};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const EX1_A: ProbInterval = (0.027, 0.050);
const EX1_B: ProbInterval = (0.036, 0.057);
const PREV: ProbInterval = (0.136, 0.204);
const SENS: ProbInterval = (0.837, 0.918);
const SPEC: ProbInterval = (0.857, 0.975);

struct Report {
    passed: usize,
    total: usize,
}

impl Report {
    fn check(&mut self, id: u32, ok: bool, what: &str, detail: String) {
        self.total += 1;
        self.passed += ok as usize;
        println!(
            "{} criterion {id:>2}: {what}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
}

struct CliRun {
    stdout: String,
    elapsed: Duration,
}

fn cli(args: &[String]) -> CliRun {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_copula-ci"))
        .args(args)
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    CliRun {
        stdout: String::from_utf8(out.stdout).unwrap(),
        elapsed,
    }
}

fn interval(run: &CliRun) -> (f64, f64, Value) {
    let v: Value = serde_json::from_str(&run.stdout).unwrap();
    (v["low"].as_f64().unwrap(), v["upp"].as_f64().unwrap(), v)
}

fn pair(ci: ProbInterval) -> String {
    format!("{},{}", ci.0, ci.1)
}

fn args(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

fn product_args(sigma: &str, method: &str, threads: usize) -> Vec<String> {
    let mut a = args(&["--threads", &threads.to_string(), "combine"]);
    a.extend(args(&["--dist", &format!("beta:{}:{}", EX1_A.0, EX1_A.1)]));
    a.extend(args(&["--dist", &format!("beta:{}:{}", EX1_B.0, EX1_B.1)]));
    a.extend(args(&[
        "--expr", "x1*x2", "--sigma", sigma, "--n", "1000000", "--seed", "123", "--method", method,
    ]));
    a
}

fn prevalence_args(rho: f64, method: &str, threads: usize) -> Vec<String> {
    let mut a = args(&["--threads", &threads.to_string(), "adjust-prev"]);
    a.extend(args(&[
        "--prev-ci",
        &pair(PREV),
        "--sens-ci",
        &pair(SENS),
        "--spec-ci",
        &pair(SPEC),
    ]));
    a.extend(args(&[
        "--prev",
        &(84.0f64 / 500.0).to_string(),
        "--sens",
        &(238.0f64 / 270.0).to_string(),
        "--spec",
        &(82.0f64 / 88.0).to_string(),
    ]));
    a.extend(args(&[
        "--rho-sens-spec",
        &rho.to_string(),
        "--n",
        "1000000",
        "--seed",
        "123",
        "--method",
        method,
    ]));
    a
}

fn within(got: (f64, f64), want: (f64, f64), tol: f64) -> bool {
    (got.0 - want.0).abs() <= tol && (got.1 - want.1).abs() <= tol
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn ks_distance(sample: &[f64], dist: &DistributionSpec) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0f64, |worst, (i, &x)| {
        let f = dist.cdf(x).unwrap();
        worst.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

fn fmt_ci((low, upp): (f64, f64)) -> String {
    format!("({low:.6}, {upp:.6})")
}

fn main() {
    let mut report = Report { passed: 0, total: 0 };

    // Criteria 1 and 2: product of two proportions.
    let ind = cli(&product_args("1,0;0,1", "hdi", 1));
    let dep = cli(&product_args("1,0.5;0.5,1", "hdi", 1));
    let (l1, u1, _) = interval(&ind);
    let (l2, u2, _) = interval(&dep);
    report.check(
        1,
        within((l1, u1), (0.0011, 0.0025), 2e-4) && ind.elapsed <= Duration::from_secs(10),
        "product of two proportions, independent, hdi",
        format!(
            "{} vs (0.0011, 0.0025) +/-2e-4, {:.2} s on one thread",
            fmt_ci((l1, u1)),
            ind.elapsed.as_secs_f64()
        ),
    );
    report.check(
        2,
        within((l2, u2), (0.0010, 0.0026), 2e-4) && l2 <= l1 + 2e-4 && u2 >= u1 - 2e-4,
        "product of two proportions, correlation 0.5, hdi",
        format!(
            "{} vs (0.0010, 0.0026) +/-2e-4; independent {}",
            fmt_ci((l2, u2)),
            fmt_ci((l1, u1))
        ),
    );

    // Criteria 3 and 4: prevalence adjustment.
    let direct = rogan_gladen(84.0 / 500.0, 238.0 / 270.0, 82.0 / 88.0).unwrap();
    let p_ind = cli(&prevalence_args(0.0, "hdi", 1));
    let p_dep = cli(&prevalence_args(-0.5, "hdi", 1));
    let (l3, u3, v3) = interval(&p_ind);
    let (l4, u4, _) = interval(&p_dep);
    let reported_point = v3["point"].as_f64().unwrap();
    report.check(
        3,
        (direct - 0.1227).abs() <= 1e-4 && reported_point == direct && within((l3, u3), (0.039, 0.190), 0.003),
        "prevalence adjustment, independent, hdi",
        format!(
            "point {direct:.6}; interval {} vs (0.039, 0.190) +/-0.003",
            fmt_ci((l3, u3))
        ),
    );
    report.check(
        4,
        within((l4, u4), (0.038, 0.194), 0.003) && u4 - l4 >= u3 - l3 - 0.002,
        "prevalence adjustment, sens/spec correlation -0.5, hdi",
        format!(
            "{} vs (0.038, 0.194) +/-0.003; width {:.6} vs {:.6}",
            fmt_ci((l4, u4)),
            u4 - l4,
            u3 - l3
        ),
    );
    for (rho, want) in [(0.0, (0.039, 0.190)), (-0.5, (0.038, 0.194))] {
        let (l, u, _) = interval(&cli(&prevalence_args(rho, "percentile", 1)));
        println!(
            "info: prevalence adjustment, correlation {rho}, percentile: {} (within +/-0.003 of {want:?}: {})",
            fmt_ci((l, u)),
            within((l, u), want, 0.003)
        );
    }

    // Criterion 5: rank correlation of the copula.
    let margs = [
        DistributionSpec::gamma(2.0, 3.0).unwrap(),
        DistributionSpec::beta(0.7, 1.5).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for (k, rho) in [-0.9, -0.5, 0.5, 0.9].into_iter().enumerate() {
        let sigma = CorrelationMatrix::from_pairs(2, &[(0, 1, rho)]).unwrap();
        let m = draw_dependent_samples(&margs, &sigma, 100_000, &mut RngStream::new(900 + k as u64, 0)).unwrap();
        let s = pearson(&ranks(&m.column(0)), &ranks(&m.column(1)));
        let want = 6.0 / std::f64::consts::PI * (rho / 2.0).asin();
        worst = worst.max((s - want).abs());
    }
    report.check(
        5,
        worst < 0.01,
        "rank correlation law",
        format!("largest deviation {worst:.5} (limit 0.01)"),
    );

    // Criterion 6: marginals survive the coupling.
    let ex1: Vec<DistributionSpec> = [EX1_A, EX1_B]
        .iter()
        .map(|&c| fit_beta_ci("p", c).unwrap().spec)
        .collect();
    let ex2: Vec<DistributionSpec> = [PREV, SENS, SPEC]
        .iter()
        .map(|&c| fit_beta_ci("p", c).unwrap().spec)
        .collect();
    let cases = [
        (&ex1, CorrelationMatrix::identity(2)),
        (&ex1, CorrelationMatrix::from_pairs(2, &[(0, 1, 0.5)]).unwrap()),
        (&ex2, CorrelationMatrix::identity(3)),
        (&ex2, CorrelationMatrix::from_pairs(3, &[(1, 2, -0.5)]).unwrap()),
    ];
    let mut worst: f64 = 0.0;
    for (k, (margs, sigma)) in cases.iter().enumerate() {
        let m = draw_dependent_samples(margs, sigma, 100_000, &mut RngStream::new(600 + k as u64, 0)).unwrap();
        for (j, spec) in margs.iter().enumerate() {
            worst = worst.max(ks_distance(&m.column(j), spec));
        }
    }
    report.check(
        6,
        worst < 0.006,
        "marginal preservation",
        format!("largest KS distance {worst:.5} (limit 0.006)"),
    );

    // Criterion 7: HDI against exhaustive search.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(10..=1000);
        let values: Vec<f64> = (0..n)
            .map(|_| (rng.random::<f64>() * 20.0).round() * rng.random::<f64>())
            .collect();
        let pct: usize = rng.random_range(50..100);
        let mut x = values.clone();
        x.sort_by(f64::total_cmp);
        let m = (pct * n).div_ceil(100);
        let best = (0..=n - m)
            .min_by(|&a, &b| (x[a + m - 1] - x[a]).total_cmp(&(x[b + m - 1] - x[b])))
            .unwrap();
        if hdi_interval(&values, pct as f64 / 100.0).unwrap() != (x[best], x[best + m - 1]) {
            mismatches += 1;
        }
    }
    report.check(
        7,
        mismatches == 0,
        "hdi equals exhaustive window search",
        format!("{mismatches} of 100 samples differ"),
    );

    // Criterion 8: coverage of the bundled scenario.
    let scenario = format!("{}/scenarios/two_proportions.toml", env!("CARGO_MANIFEST_DIR"));
    let cov = cli(&args(&["coverage", "--scenario", &scenario, "--seed", "1"]));
    let v: Value = serde_json::from_str(&cov.stdout).unwrap();
    let coverage = v["coverage"].as_f64().unwrap();
    report.check(
        8,
        (0.93..=0.97).contains(&coverage) && cov.elapsed <= Duration::from_secs(900),
        "coverage of the two-proportion scenario",
        format!(
            "coverage {coverage} (mc s.e. {:.4}, {} excluded) in {:.0} s",
            v["mcStdErr"].as_f64().unwrap(),
            v["excludedTrials"],
            cov.elapsed.as_secs_f64()
        ),
    );

    // Criterion 9: thread count does not change output.
    let reruns = [
        (&ind, product_args("1,0;0,1", "hdi", 8)),
        (&dep, product_args("1,0.5;0.5,1", "hdi", 8)),
        (&p_ind, prevalence_args(0.0, "hdi", 8)),
        (&p_dep, prevalence_args(-0.5, "hdi", 8)),
    ];
    let differing = reruns.iter().filter(|(first, a)| cli(a).stdout != first.stdout).count();
    report.check(
        9,
        differing == 0,
        "1 vs 8 threads give identical JSON",
        format!("{differing} of 4 runs differ"),
    );

    // Criterion 10: fitted marginals hit the interval ends.
    let mut worst: f64 = 0.0;
    for ci in [EX1_A, EX1_B, PREV, SENS, SPEC] {
        let spec = fit_beta_ci("p", ci).unwrap().spec;
        worst = worst
            .max((spec.cdf(ci.0).unwrap() - 0.025).abs())
            .max((spec.cdf(ci.1).unwrap() - 0.975).abs());
    }
    report.check(
        10,
        worst <= 1e-6,
        "fit fidelity",
        format!("largest CDF error {worst:.2e} (limit 1e-6)"),
    );

    println!("{} of {} criteria passed", report.passed, report.total);
}

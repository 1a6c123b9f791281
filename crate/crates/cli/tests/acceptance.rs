//! Acceptance suite. One line per criterion; exits nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::Instant;

use peai::biasvar::{
    decompose, hybrid_sweep, min_total_error, spearman, EstimatorFamily, InputDistribution,
    OutputClamp, SweepConfig, SyntheticTask, Truth,
};
use peai::estimation::estimate_moments;
use peai::frontier::{
    frontier_scalars, frontier_variance, global_minimum_variance, lagrange_multipliers,
    long_only_weights, optimal_weights, uniform_ensemble,
};
use peai::oracle::{oracle_min_variance, random_affine_weights, random_instance};
use peai::synth::default_peai_scenario;
use peai::{MomentEstimate, Portfolio};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn grid_step(n: usize) -> f64 {
    match n {
        2 => 1e-3,
        3 => 1e-2,
        4 => 0.05,
        _ => 0.1,
    }
}

const INSTANCES: u64 = 50;
const TARGETS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn instances() -> Vec<MomentEstimate> {
    (0..INSTANCES)
        .map(|seed| random_instance(2 + (seed as usize % 4), 10_000 + seed))
        .collect()
}

fn targets(m: &MomentEstimate) -> impl Iterator<Item = f64> + '_ {
    let (lo, hi) = m.mu_range();
    TARGETS.iter().map(move |t| lo + t * (hi - lo))
}

fn closed_form_vs_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (k, m) in instances().iter().enumerate() {
        let s = frontier_scalars(m).map_err(|e| e.to_string())?;
        for mu_c in targets(m) {
            let f = frontier_variance(&s, mu_c).map_err(|e| e.to_string())?;
            let o =
                oracle_min_variance(m, mu_c, (-3.0, 4.0), grid_step(m.n_models()), false, 50_000)
                    .map_err(|e| format!("instance {k}: {e}"))?;
            let r = rel_err(f, o.sigma2_c());
            worst = worst.max(r);
            if r > 1e-6 {
                return Err(format!(
                    "instance {k} at mu_c {mu_c}: closed {f} oracle {}",
                    o.sigma2_c()
                ));
            }
        }
    }
    Ok(format!(
        "{} targets, worst relative error {worst:.2e}, {:.1} s",
        INSTANCES as usize * TARGETS.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn triple_identity() -> Outcome {
    let mut worst = 0.0f64;
    for (k, m) in instances().iter().enumerate() {
        let s = frontier_scalars(m).map_err(|e| e.to_string())?;
        for mu_c in targets(m) {
            let quad = optimal_weights(m, mu_c)
                .map_err(|e| e.to_string())?
                .sigma2_c();
            let closed = (s.alpha * mu_c * mu_c - 2.0 * s.beta * mu_c + s.gamma) / s.delta;
            let (l1, l2) = lagrange_multipliers(&s, mu_c).map_err(|e| e.to_string())?;
            let lagr = l1 + l2 * mu_c;
            let r = rel_err(quad, closed)
                .max(rel_err(quad, lagr))
                .max(rel_err(closed, lagr));
            worst = worst.max(r);
            if r > 1e-9 {
                return Err(format!(
                    "instance {k} at mu_c {mu_c}: {quad} / {closed} / {lagr}"
                ));
            }
        }
    }
    Ok(format!("worst relative disagreement {worst:.2e}"))
}

fn dominance() -> Outcome {
    let mut worst = f64::INFINITY;
    for (k, m) in instances().iter().enumerate() {
        let s = frontier_scalars(m).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        for _ in 0..1000 {
            let p = Portfolio::evaluate(m, random_affine_weights(m.n_models(), &mut rng))
                .map_err(|e| e.to_string())?;
            let margin =
                p.sigma2_c() - frontier_variance(&s, p.mu_c()).map_err(|e| e.to_string())?;
            worst = worst.min(margin);
            if margin < -1e-9 {
                return Err(format!(
                    "instance {k}: portfolio {margin:e} below the frontier"
                ));
            }
        }
    }
    Ok(format!(
        "{} portfolios, smallest margin {worst:.2e}",
        INSTANCES * 1000
    ))
}

fn uniform_suboptimality() -> Outcome {
    let m = estimate_moments(&default_peai_scenario(42), 0.0).map_err(|e| e.to_string())?;
    let u = uniform_ensemble(&m).map_err(|e| e.to_string())?;
    let gap = u.gap.ok_or("default scenario frontier is degenerate")?;
    if !(gap > 0.0) {
        return Err(format!("default scenario gap {gap:e} is not positive"));
    }
    let mu_c = u.portfolio.mu_c();
    let s = frontier_scalars(&m).map_err(|e| e.to_string())?;
    let f = frontier_variance(&s, mu_c).map_err(|e| e.to_string())?;
    let o = oracle_min_variance(&m, mu_c, (-2.0, 3.0), 1e-2, false, 50_000)
        .map_err(|e| e.to_string())?;
    if rel_err(f, o.sigma2_c()) > 1e-6 {
        return Err(format!(
            "oracle {} disagrees with frontier {f}",
            o.sigma2_c()
        ));
    }
    if !(u.portfolio.sigma2_c() > o.sigma2_c()) {
        return Err("uniform ensemble is not above the oracle minimum".into());
    }
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let m2 = random_instance(2, 500 + seed);
        let g = uniform_ensemble(&m2)
            .map_err(|e| e.to_string())?
            .gap
            .ok_or("N=2 degenerate")?;
        worst = worst.max(g.abs());
    }
    if worst > 1e-9 {
        return Err(format!("N=2 gap {worst:e} exceeds 1e-9"));
    }
    Ok(format!(
        "default gap {gap:.4e} (relative {:.3}), oracle confirms frontier; N=2 max |gap| {worst:.1e}",
        gap / f
    ))
}

fn diversification() -> Outcome {
    let m = estimate_moments(&default_peai_scenario(42), 0.0).map_err(|e| e.to_string())?;
    let g = global_minimum_variance(&m).map_err(|e| e.to_string())?;
    let best_single = (0..m.n_models())
        .map(|i| m.omega()[(i, i)])
        .fold(f64::INFINITY, f64::min);
    if g.sigma2_c < best_single {
        Ok(format!(
            "gmv variance {:.4e} below best single model {best_single:.4e}",
            g.sigma2_c
        ))
    } else {
        Err(format!(
            "gmv variance {} not below {best_single}",
            g.sigma2_c
        ))
    }
}

fn cubic_task(seed: u64) -> SyntheticTask {
    SyntheticTask::new(
        Truth::Polynomial(vec![0.0, -0.5, 0.0, 1.0]),
        0.5,
        InputDistribution::Uniform { lo: -1.0, hi: 1.0 },
        seed,
    )
    .expect("valid task")
}

fn bias_variance_identity() -> Outcome {
    let start = Instant::now();
    let task = cubic_task(11);
    let clamp = OutputClamp::new(-0.7, 0.7).map_err(|e| e.to_string())?;
    let families = [
        EstimatorFamily::fixed(0.0),
        EstimatorFamily::sample_mean(),
        EstimatorFamily::polynomial(1),
        EstimatorFamily::polynomial(3),
        EstimatorFamily::polynomial(6),
        EstimatorFamily::polynomial(6).with_clamp(clamp),
        EstimatorFamily::sample_mean().with_clamp(clamp),
    ];
    let mut worst = 0.0f64;
    for fam in &families {
        for x0 in [-0.8, 0.0, 0.5] {
            let r = decompose(&task, fam, 20, 10_000, x0).map_err(|e| e.to_string())?;
            let z = r.identity_residual().abs() / r.combined_standard_error();
            worst = worst.max(z);
            if !r.identity_holds(4.0) {
                return Err(format!(
                    "{} at x={x0}: residual {:e} is {z:.2} SE",
                    fam.family_id,
                    r.identity_residual()
                ));
            }
        }
    }
    let flat = SyntheticTask::new(
        Truth::constant(0.3),
        1.0,
        InputDistribution::Uniform { lo: -1.0, hi: 1.0 },
        12,
    )
    .map_err(|e| e.to_string())?;
    let r = decompose(&flat, &EstimatorFamily::sample_mean(), 10, 100_000, 0.0)
        .map_err(|e| e.to_string())?;
    let z = (r.variance - 0.1).abs() / r.standard_errors.variance;
    if z > 3.0 {
        return Err(format!(
            "sample-mean variance {} vs 0.1 is {z:.2} SE away",
            r.variance
        ));
    }
    Ok(format!(
        "{} families x 3 points, worst {worst:.2} SE; sample-mean var {:.5} vs 0.1 ({z:.2} SE), {:.1} s",
        families.len(),
        r.variance,
        start.elapsed().as_secs_f64()
    ))
}

fn hybridization() -> Outcome {
    let task = cubic_task(21);
    let degrees: Vec<usize> = (0..=8).collect();
    let cfg = SweepConfig::with_grid(20, 2_000, -1.0, 1.0, 9);
    // the truth ranges over [-0.5, 0.5] on the input interval
    let base = EstimatorFamily::polynomial(0)
        .with_clamp(OutputClamp::new(-0.7, 0.7).map_err(|e| e.to_string())?);
    let free = hybrid_sweep(&task, &base, &degrees, false, &cfg).map_err(|e| e.to_string())?;
    let held = hybrid_sweep(&task, &base, &degrees, true, &cfg).map_err(|e| e.to_string())?;

    let d: Vec<f64> = degrees.iter().map(|&k| k as f64).collect();
    let v: Vec<f64> = free.iter().map(|e| e.report.variance).collect();
    let rho = spearman(&d, &v).ok_or("rank correlation undefined")?;
    if !(rho > 0.0) {
        return Err(format!("variance-degree rank correlation {rho}"));
    }
    for (a, b) in free.iter().zip(&held) {
        let se = a
            .report
            .standard_errors
            .variance
            .hypot(b.report.standard_errors.variance);
        if b.report.variance > a.report.variance + 2.0 * se {
            return Err(format!(
                "degree {}: clamped variance {} above {} + 2 SE",
                a.complexity, b.report.variance, a.report.variance
            ));
        }
    }
    let (bf, bh) = (
        min_total_error(&free).ok_or("empty sweep")?,
        min_total_error(&held).ok_or("empty sweep")?,
    );
    let se = bf
        .report
        .standard_errors
        .mse
        .hypot(bh.report.standard_errors.mse);
    if bh.report.mse > bf.report.mse + 2.0 * se {
        return Err(format!(
            "constrained min mse {} above {} + 2 SE",
            bh.report.mse, bf.report.mse
        ));
    }
    Ok(format!(
        "spearman {rho:.3}; min mse free {:.4} (degree {}) vs clamped {:.4} (degree {})",
        bf.report.mse, bf.complexity, bh.report.mse, bh.complexity
    ))
}

fn long_only() -> Outcome {
    let mut identical = 0;
    let mut seed = 0u64;
    while identical < 20 {
        if seed > 10_000 {
            return Err(format!(
                "found only {identical} nonnegative unconstrained solutions"
            ));
        }
        let m = random_instance(3 + (seed as usize % 3), 20_000 + seed);
        seed += 1;
        let g = global_minimum_variance(&m).map_err(|e| e.to_string())?;
        let (lo, hi) = m.mu_range();
        if g.mu_c < lo || g.mu_c > hi {
            continue;
        }
        let free = optimal_weights(&m, g.mu_c).map_err(|e| e.to_string())?;
        if free.weights().iter().any(|&w| w < 0.0) {
            continue;
        }
        let long = long_only_weights(&m, g.mu_c).map_err(|e| e.to_string())?;
        if long != free {
            return Err(format!(
                "instance {seed}: long-only differs from a nonnegative solution"
            ));
        }
        identical += 1;
    }

    let mut matched = 0;
    let mut worst = 0.0f64;
    let mut seed = 0u64;
    while matched < 20 {
        if seed > 10_000 {
            return Err(format!(
                "found only {matched} instances with active constraints"
            ));
        }
        let n = 3 + (seed as usize % 3);
        let m = random_instance(n, 30_000 + seed);
        seed += 1;
        let (lo, hi) = m.mu_range();
        let mu_c = lo + 0.9 * (hi - lo);
        let free = optimal_weights(&m, mu_c).map_err(|e| e.to_string())?;
        if !free.has_short_position() {
            continue;
        }
        let long = long_only_weights(&m, mu_c).map_err(|e| e.to_string())?;
        let step = [0.01, 0.02, 0.05][n - 3];
        let o = oracle_min_variance(&m, mu_c, (0.0, 1.0), step, true, 50_000)
            .map_err(|e| e.to_string())?;
        let diff = (long.sigma2_c() - o.sigma2_c()).abs();
        worst = worst.max(diff);
        if diff > 1e-4 {
            return Err(format!(
                "instance {seed} (N={n}): solver {} oracle {}",
                long.sigma2_c(),
                o.sigma2_c()
            ));
        }
        matched += 1;
    }
    Ok(format!(
        "{identical} bitwise-identical nonnegative cases; {matched} active-constraint cases, worst diff {worst:.2e}"
    ))
}

fn peai(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peai"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn has_non_finite(bytes: &[u8]) -> bool {
    let text = String::from_utf8_lossy(bytes).to_ascii_lowercase();
    text.contains("nan") || text.contains("inf")
}

fn degeneracy() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = dir.path();
    let write =
        |name: &str, body: &str| std::fs::write(p.join(name), body).map_err(|e| e.to_string());
    let m = random_instance(4, 7);
    let omega: Vec<String> = m
        .omega()
        .transpose()
        .iter()
        .map(|v| format!("{v:?}"))
        .collect();
    write(
        "flat.json",
        &format!(
            r#"{{"mu":[0.8,0.8,0.8,0.8],"omega":[{}],"tags":["AI","AI","P","E"]}}"#,
            omega.join(",")
        ),
    )?;
    write(
        "singular.json",
        r#"{"mu":[1,2],"omega":[1,1,1,1],"tags":["AI","P"]}"#,
    )?;
    write(
        "twins.csv",
        "a,b,c\nAI,Physics,Expert\n0.1,0.1,0.5\n0.5,0.5,0.2\n0.3,0.3,0.9\n0.2,0.2,0.4\n",
    )?;

    let cases: [(&str, &[&str]); 7] = [
        (
            "degenerate_frontier",
            &["frontier", "--moments", "flat.json"],
        ),
        (
            "degenerate_frontier",
            &["weights", "--moments", "flat.json", "--target-mean", "0.8"],
        ),
        (
            "degenerate_frontier",
            &[
                "weights",
                "--moments",
                "flat.json",
                "--target-mean",
                "0.8",
                "--long-only",
            ],
        ),
        (
            "singular_covariance",
            &["frontier", "--moments", "singular.json"],
        ),
        (
            "singular_covariance",
            &["estimate", "--moments", "singular.json"],
        ),
        (
            "singular_covariance",
            &["frontier", "--samples", "twins.csv"],
        ),
        (
            "singular_covariance",
            &["weights", "--samples", "twins.csv", "--target-mean", "0.3"],
        ),
    ];
    for (code, args) in cases {
        let o = peai(args, p);
        if o.status.code() != Some(2) {
            return Err(format!("{args:?} exited with {:?}", o.status.code()));
        }
        if has_non_finite(&o.stdout) || has_non_finite(&o.stderr) {
            return Err(format!("{args:?} printed a non-finite value"));
        }
        let err = String::from_utf8_lossy(&o.stderr);
        let last: serde_json::Value = err
            .lines()
            .last()
            .and_then(|l| serde_json::from_str(l).ok())
            .ok_or_else(|| format!("{args:?}: no JSON diagnostic"))?;
        if last["code"] != code {
            return Err(format!("{args:?}: expected {code}, got {}", last["code"]));
        }
    }
    let flat = MomentEstimate::new(nalgebra::DVector::from_element(4, 0.8), m.omega().clone())
        .map_err(|e| e.to_string())?;
    if !matches!(
        frontier_scalars(&flat),
        Err(peai::Error::DegenerateFrontier { .. })
    ) {
        return Err("library accepted a mean proportional to ones".into());
    }
    Ok(format!(
        "{} degenerate invocations exit 2 with a diagnostic and no NaN",
        cases.len()
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = dir.path();
    let runs: [&[&str]; 6] = [
        &["scenario", "--seed", "42", "--trials", "500"],
        &["frontier", "--demo", "--seed", "42"],
        &[
            "weights",
            "--demo",
            "--seed",
            "42",
            "--target-mean",
            "0.88",
            "--long-only",
        ],
        &["estimate", "--demo", "--seed", "42", "--shrinkage", "0.2"],
        &[
            "biasvar",
            "--degrees",
            "0..8",
            "--replicates",
            "500",
            "--seed",
            "42",
        ],
        &[
            "biasvar",
            "--degrees",
            "0..8",
            "--replicates",
            "500",
            "--seed",
            "42",
            "--constraint",
            "-0.7:0.7",
        ],
    ];
    for args in runs {
        let a = peai(args, p);
        let b = peai(args, p);
        let single = Command::new(env!("CARGO_BIN_EXE_peai"))
            .args(args)
            .current_dir(p)
            .env("RAYON_NUM_THREADS", "1")
            .output()
            .map_err(|e| e.to_string())?;
        if !a.status.success() {
            return Err(format!(
                "{args:?} failed: {}",
                String::from_utf8_lossy(&a.stderr)
            ));
        }
        if a.stdout != b.stdout || a.stdout != single.stdout {
            return Err(format!("{args:?} output differs between runs"));
        }
    }
    Ok(format!(
        "{} seeded commands byte-identical across runs and thread counts",
        runs.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("closed form matches refined oracle", closed_form_vs_oracle),
        ("frontier variance triple identity", triple_identity),
        ("random portfolios never beat the frontier", dominance),
        ("uniform ensemble suboptimality", uniform_suboptimality),
        ("diversification at the gmv point", diversification),
        ("bias-variance identity", bias_variance_identity),
        ("hybridization sweep", hybridization),
        ("long-only solver", long_only),
        ("degeneracy handling", degeneracy),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

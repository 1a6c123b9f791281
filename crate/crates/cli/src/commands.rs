use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use peai::biasvar::{
    min_total_error, spearman, sweep_entries, EstimatorFamily, InputDistribution, OutputClamp,
    SweepConfig, SweepEntry, SyntheticTask, Truth,
};
use peai::estimation::{estimate_moments, shrink_to_diagonal};
use peai::frontier::{
    frontier_scalars, global_minimum_variance, long_only_weights, optimal_weights, trace_frontier,
    uniform_ensemble, DEFAULT_TRACE_POINTS,
};
use peai::synth::{default_peai_scenario, gen_population, DEFAULT_CORRELATION, DEFAULT_SCENARIO};
use peai::{MomentEstimate, Portfolio};
use serde_json::{json, Value};

use crate::diag::{warn, CliError};
use crate::io::{
    fmt_f64, read_moments_json, read_samples_csv, with_output, write_samples_csv, Dataset,
    MomentsFile,
};

#[derive(Debug, Parser)]
#[command(
    name = "peai",
    version,
    about = "Minimum-variance model combination and bias-variance sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace the minimum-variance frontier.
    Frontier(FrontierArgs),
    /// Minimum-variance weights for one target mean.
    Weights(WeightsArgs),
    /// Estimate moments and write them as JSON.
    Estimate(EstimateArgs),
    /// Write the synthetic three-model scenario as a samples CSV.
    Scenario(ScenarioArgs),
    /// Monte-Carlo bias-variance sweep over model complexity.
    Biasvar(BiasvarArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Samples CSV: header of model ids, optional tag row, one row per trial.
    #[arg(long)]
    pub samples: Option<String>,
    /// Moments JSON with `mu` and row-major `omega`.
    #[arg(long)]
    pub moments: Option<String>,
    /// Use the built-in AI/physics/expert scenario.
    #[arg(long)]
    pub demo: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shrink the covariance toward its diagonal by this fraction.
    #[arg(long, default_value_t = 0.0)]
    pub shrinkage: f64,
}

#[derive(Debug, Args)]
pub struct FrontierArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = DEFAULT_TRACE_POINTS)]
    pub points: usize,
    /// Target mean range `lo:hi`; defaults to the span of the model means.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    /// Frontier CSV destination; stdout when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Summary JSON destination. Goes to stdout when `--csv` is a file and this is omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub target_mean: f64,
    /// Forbid negative weights.
    #[arg(long)]
    pub long_only: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = peai::synth::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_CORRELATION)]
    pub correlation: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyName {
    Poly,
    Mean,
}

#[derive(Debug, Args)]
pub struct BiasvarArgs {
    /// `poly`, `mean` or `fixed:C`.
    #[arg(long, default_value = "poly")]
    pub family: String,
    /// Complexities (polynomial degree) as `a..b` or a comma list.
    #[arg(long)]
    pub degrees: Option<String>,
    /// Output clamp `lo:hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub constraint: Option<String>,
    #[arg(long, default_value_t = 2000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `poly:c0,c1,..`, `const:c` or `sin:amplitude,frequency`.
    #[arg(long, default_value = "poly:0,-0.5,0,1", allow_hyphen_values = true)]
    pub truth: String,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long, default_value_t = 20)]
    pub train_size: usize,
    /// Number of evaluation points spread over the input range.
    #[arg(long, default_value_t = 21)]
    pub eval_points: usize,
    #[arg(long, default_value = "-1:1", allow_hyphen_values = true)]
    pub input_range: String,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Frontier(a) => frontier(a),
        Command::Weights(a) => weights(a),
        Command::Estimate(a) => estimate(a),
        Command::Scenario(a) => scenario(a),
        Command::Biasvar(a) => biasvar(a),
    }
}

fn parse_pair(flag: &str, s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::usage(format!("--{flag} expects lo:hi, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CliError::usage(format!(
            "--{flag} needs finite lo < hi, got {s:?}"
        )));
    }
    Ok((lo, hi))
}

fn parse_floats(flag: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::usage(format!("--{flag}: {t:?} is not a finite number")))
        })
        .collect()
}

fn parse_degrees(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::usage(format!("--degrees expects a..b or a comma list, got {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

fn load(input: &InputArgs) -> Result<Dataset, CliError> {
    if !(0.0..=1.0).contains(&input.shrinkage) {
        return Err(CliError::usage(format!(
            "--shrinkage must lie in [0, 1], got {}",
            input.shrinkage
        )));
    }
    let source = &input.source;
    let samples = if let Some(path) = &source.samples {
        read_samples_csv(path)?
    } else if source.demo {
        default_peai_scenario(input.seed)
    } else {
        let path = source
            .moments
            .as_deref()
            .expect("clap enforces one input source");
        let mut d = read_moments_json(path)?;
        if input.shrinkage > 0.0 {
            let omega = shrink_to_diagonal(d.moments.omega(), input.shrinkage);
            d.moments = MomentEstimate::new(d.moments.mu().clone(), omega)?;
        }
        return Ok(d);
    };
    Ok(Dataset {
        moments: estimate_moments(&samples, input.shrinkage)?,
        model_ids: samples.model_ids().to_vec(),
        tags: samples.tags().to_vec(),
    })
}

fn weights_json(p: &Portfolio) -> Value {
    json!(p.weights().iter().copied().collect::<Vec<f64>>())
}

fn write_json(path: Option<&std::path::Path>, value: &Value) -> Result<(), CliError> {
    with_output(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn frontier(a: FrontierArgs) -> Result<(), CliError> {
    let d = load(&a.input)?;
    let m = &d.moments;
    let scalars = frontier_scalars(m)?;
    let (seg_lo, seg_hi) = m.mu_range();
    let (lo, hi) = match &a.range {
        Some(r) => parse_pair("range", r)?,
        None => (seg_lo, seg_hi),
    };
    let trace = trace_frontier(m, lo, hi, a.points)?;
    let gmv = global_minimum_variance(m)?;
    let uniform = uniform_ensemble(m)?;

    let n = m.n_models();
    let summary_to_stdout = a.summary.is_none() && a.csv.is_some();
    with_output(a.csv.as_deref(), |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["mu_c".to_string(), "sigma2_c".into(), "sigma_c".into()];
        header.extend((1..=n).map(|i| format!("w_{i}")));
        out.write_record(&header)?;
        for p in &trace.points {
            let mut row = vec![
                fmt_f64(p.mu_c),
                fmt_f64(p.sigma2_c),
                fmt_f64(p.sigma2_c.sqrt()),
            ];
            row.extend(p.portfolio.weights().iter().map(|v| fmt_f64(*v)));
            out.write_record(&row)?;
        }
        out.flush()
    })?;

    let endpoint = |i: usize| {
        json!({
            "model_id": d.model_ids[i],
            "tag": d.tags[i].as_str(),
            "mu_c": m.mu()[i],
            "sigma2_c": m.omega()[(i, i)],
        })
    };
    let argmin = (0..n)
        .min_by(|&i, &j| m.mu()[i].total_cmp(&m.mu()[j]))
        .unwrap_or(0);
    let argmax = (0..n)
        .max_by(|&i, &j| m.mu()[i].total_cmp(&m.mu()[j]).then(j.cmp(&i)))
        .unwrap_or(0);
    let gmv_class = gmv.portfolio.classify(&d.tags)?;
    let uniform_frontier = uniform.gap.map(|g| uniform.portfolio.sigma2_c() - g);
    let summary = json!({
        "model_ids": d.model_ids,
        "tags": d.tags.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
        "scalars": {
            "alpha": scalars.alpha,
            "beta": scalars.beta,
            "gamma": scalars.gamma,
            "delta": scalars.delta,
        },
        "gmv": {
            "mu_c": gmv.mu_c,
            "sigma2_c": gmv.sigma2_c,
            "weights": weights_json(&gmv.portfolio),
            "composite_tag": gmv_class.tag.as_str(),
            "peai": gmv_class.peai,
        },
        "uniform": {
            "mu_c": uniform.portfolio.mu_c(),
            "sigma2_c": uniform.portfolio.sigma2_c(),
            "frontier_sigma2_c": uniform_frontier,
            "gap": uniform.gap,
        },
        "p1": endpoint(argmin),
        "p2": endpoint(argmax),
        "segment": [trace.segment.0, trace.segment.1],
        "range": [lo, hi],
        "points": trace.points.len(),
    });
    if summary_to_stdout {
        write_json(None, &summary)
    } else if let Some(path) = &a.summary {
        write_json(Some(path), &summary)
    } else {
        Ok(())
    }
}

fn weights(a: WeightsArgs) -> Result<(), CliError> {
    let d = load(&a.input)?;
    let m = &d.moments;
    if !a.target_mean.is_finite() {
        return Err(CliError::usage("--target-mean must be finite"));
    }
    let p = if a.long_only {
        long_only_weights(m, a.target_mean)?
    } else {
        optimal_weights(m, a.target_mean)?
    };
    let class = p.classify(&d.tags)?;
    let out = json!({
        "model_ids": d.model_ids,
        "target_mean": a.target_mean,
        "long_only": a.long_only,
        "weights": weights_json(&p),
        "mu_c": p.mu_c(),
        "sigma2_c": p.sigma2_c(),
        "short": p.has_short_position(),
        "composite_tag": class.tag.as_str(),
        "peai": class.peai,
    });
    write_json(a.output.as_deref(), &out)
}

fn estimate(a: EstimateArgs) -> Result<(), CliError> {
    let d = load(&a.input)?;
    let file = MomentsFile::from_dataset(&d);
    let value = serde_json::to_value(&file).expect("moments serialize");
    write_json(a.output.as_deref(), &value)
}

fn scenario(a: ScenarioArgs) -> Result<(), CliError> {
    let samples = gen_population(&DEFAULT_SCENARIO, a.correlation, a.trials, a.seed)?;
    with_output(a.output.as_deref(), |w| write_samples_csv(w, &samples))
}

fn parse_family(s: &str) -> Result<EstimatorFamily, CliError> {
    if let Some(c) = s.strip_prefix("fixed:") {
        let v = parse_floats("family", c)?;
        if v.len() != 1 {
            return Err(CliError::usage("--family fixed:C takes one value"));
        }
        return Ok(EstimatorFamily::fixed(v[0]));
    }
    match FamilyName::from_str(s, true) {
        Ok(FamilyName::Poly) => Ok(EstimatorFamily::polynomial(0)),
        Ok(FamilyName::Mean) => Ok(EstimatorFamily::sample_mean()),
        Err(_) => Err(CliError::usage(format!(
            "--family must be poly, mean or fixed:C, got {s:?}"
        ))),
    }
}

fn parse_truth(s: &str) -> Result<Truth, CliError> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("--truth expects kind:values, got {s:?}")))?;
    let v = parse_floats("truth", rest)?;
    match (kind, v.as_slice()) {
        ("poly", c) if !c.is_empty() => Ok(Truth::Polynomial(c.to_vec())),
        ("const", [c]) => Ok(Truth::constant(*c)),
        ("sin", [amplitude, frequency]) => Ok(Truth::Sine {
            amplitude: *amplitude,
            frequency: *frequency,
        }),
        _ => Err(CliError::usage(format!(
            "--truth must be poly:c0,.., const:c or sin:a,f, got {s:?}"
        ))),
    }
}

fn biasvar(a: BiasvarArgs) -> Result<(), CliError> {
    let mut family = parse_family(&a.family)?;
    if let Some(c) = &a.constraint {
        let (lo, hi) = parse_pair("constraint", c)?;
        family = family.with_clamp(OutputClamp::new(lo, hi)?);
    }
    let degrees = match &a.degrees {
        Some(s) => parse_degrees(s)?,
        None if family.kind == peai::biasvar::FamilyKind::Polynomial => (0..=8).collect(),
        None => vec![0],
    };
    let (in_lo, in_hi) = parse_pair("input-range", &a.input_range)?;
    if a.eval_points == 0 {
        return Err(CliError::usage("--eval-points must be at least 1"));
    }
    let task = SyntheticTask::new(
        parse_truth(&a.truth)?,
        a.noise,
        InputDistribution::Uniform {
            lo: in_lo,
            hi: in_hi,
        },
        a.seed,
    )?;
    let config = SweepConfig::with_grid(a.train_size, a.replicates, in_lo, in_hi, a.eval_points);
    let results = sweep_entries(&task, &family, &degrees, true, &config)?;

    let mut ok: Vec<SweepEntry> = Vec::new();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (complexity, res) in results {
        match res {
            Ok(report) => {
                ok.push(SweepEntry { complexity, report });
                rows.push(vec![
                    complexity.to_string(),
                    fmt_f64(report.bias2),
                    fmt_f64(report.variance),
                    fmt_f64(report.noise),
                    fmt_f64(report.mse),
                    fmt_f64(report.standard_errors.mse),
                    String::new(),
                ]);
            }
            Err(e) if matches!(e.root(), peai::Error::IllPosedFit(_)) => {
                let msg = e.root().to_string();
                warn("ill_posed_fit", format!("complexity {complexity}: {msg}"));
                let mut row = vec![complexity.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push(msg);
                rows.push(row);
            }
            Err(e) => return Err(e.into()),
        }
    }

    let summary_to_stdout = a.summary.is_none() && a.csv.is_some();
    with_output(a.csv.as_deref(), |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "complexity",
            "bias2",
            "variance",
            "noise",
            "mse",
            "se_mse",
            "warning",
        ])?;
        for r in &rows {
            out.write_record(r)?;
        }
        out.flush()
    })?;

    let best = min_total_error(&ok);
    let ranks = (ok.len() >= 2)
        .then(|| {
            let c: Vec<f64> = ok.iter().map(|e| e.complexity as f64).collect();
            let v: Vec<f64> = ok.iter().map(|e| e.report.variance).collect();
            spearman(&c, &v)
        })
        .flatten();
    let summary = json!({
        "family": family.family_id,
        "complexity_measure": if family.kind == peai::biasvar::FamilyKind::Polynomial {
            "polynomial degree"
        } else {
            "label only"
        },
        "constraint": family.constraint.map(|c| [c.lo, c.hi]),
        "seed": a.seed,
        "replicates": a.replicates,
        "train_size": a.train_size,
        "rows": rows.len(),
        "failed_rows": rows.len() - ok.len(),
        "min_total_error": best.map(|b| json!({
            "complexity": b.complexity,
            "mse": b.report.mse,
            "se_mse": b.report.standard_errors.mse,
        })),
        "variance_complexity_spearman": ranks,
    });
    if summary_to_stdout {
        write_json(None, &summary)
    } else if let Some(path) = &a.summary {
        write_json(Some(path), &summary)
    } else {
        Ok(())
    }
}

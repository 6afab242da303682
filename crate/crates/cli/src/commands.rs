//! Turning arguments into manifests and manifests into output text.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use copula_ci::copula::CorrelationMatrix;
use copula_ci::engine::{
    boot_comb, BootOutput, BootstrapConfig, CombinedEstimate, Combiner, CombinerSource, Diagnostics, MethodTag,
    PointSource,
};
use copula_ci::epi::{
    adjust_prevalence, rho_grid, rho_sweep, scatter_draws, sens_spec_sigma, PointEstimates, PrevAdjustRequest,
    RhoSweepRow,
};
use copula_ci::fit::{fit_from_quantiles, FittedDistribution};
use copula_ci::validation::{run_coverage, CoverageResult, CoverageScenario};
use serde::Serialize;

use crate::args::{
    AdjustArgs, CombineArgs, CoverageArgs, EstimateOutput, OutFormat, PrevalenceArgs, ReplayArgs, RunArgs, ScatterArgs,
    SweepArgs,
};
use crate::format::{exact, sig};
use crate::manifest::{Run, RunManifest, VERSION};

/// Where results go besides standard output.
#[derive(Debug, Clone)]
pub struct Sinks {
    pub format: OutFormat,
    pub boot_vals: Option<PathBuf>,
}

impl Sinks {
    fn from_output(output: &EstimateOutput) -> Self {
        Self {
            format: output.out,
            boot_vals: output.boot_vals.clone(),
        }
    }
}

fn config(run: &RunArgs) -> Result<BootstrapConfig> {
    let config = BootstrapConfig {
        n: run.n,
        seed: run.seed,
        method: run.method,
        level: run.level,
        ..Default::default()
    };
    config.validate()?;
    Ok(config)
}

pub fn combine(args: &CombineArgs) -> Result<String> {
    let d = args.dists.len();
    let sigma = match &args.sigma {
        Some(rows) => rows.matrix()?,
        None => CorrelationMatrix::identity(d),
    };
    let combiner = match (&args.expr, &args.combiner) {
        (Some(text), _) => CombinerSource::Expression {
            text: text.clone(),
            variables: args.vars.clone(),
        },
        (None, Some(name)) => CombinerSource::Builtin {
            name: name.clone(),
            arity: d,
        },
        (None, None) => return Err(anyhow!("one of --expr or --combiner is required")),
    };
    let arity = Combiner::from_source(&combiner).context("combiner")?.arity();
    if arity != d {
        let flag = if args.expr.is_some() { "--expr" } else { "--combiner" };
        bail!("{flag} takes {arity} inputs but {d} --dist marginals were given");
    }
    let run = Run::Combine {
        marginals: args.dists.clone(),
        sigma,
        combiner,
        config: config(&args.run)?,
    };
    execute(
        &RunManifest::new(run, args.run.timestamp),
        &Sinks::from_output(&args.output),
    )
}

fn prevalence_request(inputs: &PrevalenceArgs, sigma: CorrelationMatrix, config: BootstrapConfig) -> PrevAdjustRequest {
    let point_estimates = match (inputs.prev, inputs.sens, inputs.spec) {
        (Some(prev), Some(sens), Some(spec)) => Some(PointEstimates { prev, sens, spec }),
        _ => None,
    };
    PrevAdjustRequest {
        prev_ci: inputs.prev_ci,
        sens_ci: inputs.sens_ci,
        spec_ci: inputs.spec_ci,
        point_estimates,
        sigma,
        config,
    }
}

pub fn adjust_prev(args: &AdjustArgs) -> Result<String> {
    let sigma = match (&args.inputs.sigma, args.rho_sens_spec) {
        (Some(rows), _) => rows.matrix()?,
        (None, rho) => sens_spec_sigma(rho.unwrap_or(0.0)).context("--rho-sens-spec")?,
    };
    let request = prevalence_request(&args.inputs, sigma, config(&args.run)?);
    request.validate()?;
    let run = Run::AdjustPrev { request };
    execute(
        &RunManifest::new(run, args.run.timestamp),
        &Sinks::from_output(&args.output),
    )
}

pub fn sweep(args: &SweepArgs) -> Result<String> {
    let sigma = match &args.inputs.sigma {
        Some(rows) => rows.matrix()?,
        None => CorrelationMatrix::identity(3),
    };
    let request = prevalence_request(&args.inputs, sigma, config(&args.run)?);
    request.validate()?;
    let run = Run::Sweep {
        request,
        rho_from: args.rho_from,
        rho_to: args.rho_to,
        steps: args.steps,
    };
    let sinks = Sinks {
        format: args.out,
        boot_vals: None,
    };
    execute(&RunManifest::new(run, args.run.timestamp), &sinks)
}

pub fn scatter(args: &ScatterArgs) -> Result<String> {
    let run = Run::Scatter {
        sens_ci: args.sens_ci,
        spec_ci: args.spec_ci,
        rho: args.rho,
        m: args.m,
        seed: args.seed,
    };
    let sinks = Sinks {
        format: args.out,
        boot_vals: None,
    };
    execute(&RunManifest::new(run, args.timestamp), &sinks)
}

pub fn load_scenario(path: &Path) -> Result<CoverageScenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let de = toml::Deserializer::parse(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        anyhow!("{}: field `{field}`: {}", path.display(), e.into_inner())
    })
}

pub fn coverage(args: &CoverageArgs) -> Result<String> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(trials) = args.trials {
        scenario.trials = trials;
    }
    scenario
        .resolve()
        .with_context(|| format!("scenario {}", args.scenario.display()))?;
    let run = Run::Coverage {
        scenario,
        seed: args.seed,
    };
    let sinks = Sinks {
        format: args.out,
        boot_vals: None,
    };
    execute(&RunManifest::new(run, args.timestamp), &sinks)
}

pub fn replay(args: &ReplayArgs) -> Result<String> {
    let text = std::fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", args.file.display()))?;
    if let Some(inner) = value.get_mut("manifest") {
        value = inner.take();
    }
    let manifest: RunManifest = serde_path_to_error::deserialize(value).map_err(|e| {
        let field = e.path().to_string();
        anyhow!("{}: manifest field `{field}`: {}", args.file.display(), e.into_inner())
    })?;
    if manifest.version != VERSION {
        log::warn!(
            "manifest written by version {}, replaying with {VERSION}",
            manifest.version
        );
    }
    let sinks = Sinks {
        format: OutFormat::Json,
        boot_vals: args.boot_vals.clone(),
    };
    execute(&manifest, &sinks)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EstimateReport<'a> {
    low: f64,
    upp: f64,
    point: Option<f64>,
    point_source: PointSource,
    method: MethodTag,
    level: f64,
    n: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    point_estimates: Option<PointEstimates>,
    diagnostics: &'a Diagnostics,
    manifest: &'a RunManifest,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    rows: &'a [RhoSweepRow],
    manifest: &'a RunManifest,
}

#[derive(Serialize)]
struct ScatterReport<'a> {
    /// `[sens, spec]` pairs.
    draws: Vec<[f64; 2]>,
    manifest: &'a RunManifest,
}

#[derive(Serialize)]
struct CoverageReport<'a> {
    #[serde(flatten)]
    result: &'a CoverageResult,
    manifest: &'a RunManifest,
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn csv_table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Runs a manifest and renders the result.
pub fn execute(manifest: &RunManifest, sinks: &Sinks) -> Result<String> {
    match &manifest.run {
        Run::Combine {
            marginals,
            sigma,
            combiner,
            config,
        } => {
            let fitted = marginals
                .iter()
                .enumerate()
                .map(|(i, m)| fit_from_quantiles(m.family, m.constraint).with_context(|| format!("--dist #{}", i + 1)))
                .collect::<Result<Vec<_>>>()?;
            log_fits(&fitted);
            let combiner = Combiner::from_source(combiner).context("combiner")?;
            let config = with_boot_vals(config, sinks);
            let out = boot_comb(&fitted, sigma, &combiner, &config, None)?;
            dump_boot_vals(sinks, &out, &combiner.variables())?;
            render_estimate(manifest, &out.estimate, config.seed, None, sinks.format)
        }
        Run::AdjustPrev { request } => {
            let mut request = request.clone();
            request.config = with_boot_vals(&request.config, sinks);
            log_fits(&request.marginals()?);
            let out = adjust_prevalence(&request)?;
            let names = ["prev", "sens", "spec"].map(String::from);
            dump_boot_vals(sinks, &out, &names)?;
            render_estimate(
                manifest,
                &out.estimate,
                request.config.seed,
                request.point_estimates,
                sinks.format,
            )
        }
        Run::Sweep {
            request,
            rho_from,
            rho_to,
            steps,
        } => {
            let rows = rho_sweep(request, &rho_grid(*rho_from, *rho_to, *steps))?;
            match sinks.format {
                OutFormat::Json => json(&SweepReport { rows: &rows, manifest }),
                OutFormat::Csv => Ok(csv_table(
                    &["rho", "low", "upp", "width"],
                    rows.iter()
                        .map(|r| vec![sig(r.rho, 10), sig(r.low, 10), sig(r.upp, 10), sig(r.width, 10)]),
                )),
            }
        }
        Run::Scatter {
            sens_ci,
            spec_ci,
            rho,
            m,
            seed,
        } => {
            let draws = scatter_draws(*sens_ci, *spec_ci, *rho, *m, *seed)?;
            let pairs: Vec<[f64; 2]> = (0..draws.rows()).map(|i| [draws.row(i)[0], draws.row(i)[1]]).collect();
            match sinks.format {
                OutFormat::Json => json(&ScatterReport { draws: pairs, manifest }),
                OutFormat::Csv => Ok(csv_table(
                    &["sens", "spec"],
                    pairs.iter().map(|p| vec![exact(p[0]), exact(p[1])]),
                )),
            }
        }
        Run::Coverage { scenario, seed } => {
            let result = run_coverage(scenario, *seed)?;
            if result.excluded_trials > 0 {
                log::warn!("{} trials excluded after failed fits", result.excluded_trials);
            }
            match sinks.format {
                OutFormat::Json => json(&CoverageReport {
                    result: &result,
                    manifest,
                }),
                OutFormat::Csv => Ok(csv_table(
                    &["coverage", "meanWidth", "mcStdErr", "excludedTrials"],
                    std::iter::once(vec![
                        exact(result.coverage),
                        exact(result.mean_width),
                        exact(result.mc_std_err),
                        result.excluded_trials.to_string(),
                    ]),
                )),
            }
        }
    }
}

fn with_boot_vals(config: &BootstrapConfig, sinks: &Sinks) -> BootstrapConfig {
    BootstrapConfig {
        return_boot_vals: sinks.boot_vals.is_some(),
        ..config.clone()
    }
}

fn log_fits(fitted: &[FittedDistribution]) {
    for f in fitted {
        log::info!("fitted {} (residual {:.2e})", f.spec, f.residual);
        if let Some(w) = &f.warning {
            log::warn!("{w}");
        }
    }
}

fn render_estimate(
    manifest: &RunManifest,
    e: &CombinedEstimate,
    seed: u64,
    point_estimates: Option<PointEstimates>,
    format: OutFormat,
) -> Result<String> {
    match format {
        OutFormat::Json => json(&EstimateReport {
            low: e.low,
            upp: e.upp,
            point: e.point_estimate,
            point_source: e.point_source,
            method: e.method,
            level: e.level,
            n: e.n,
            seed,
            point_estimates,
            diagnostics: &e.diagnostics,
            manifest,
        }),
        OutFormat::Csv => Ok(csv_table(
            &["low", "upp", "point", "method", "level", "n", "seed"],
            std::iter::once(vec![
                exact(e.low),
                exact(e.upp),
                e.point_estimate.map(exact).unwrap_or_default(),
                e.method.to_string(),
                exact(e.level),
                e.n.to_string(),
                seed.to_string(),
            ]),
        )),
    }
}

fn dump_boot_vals(sinks: &Sinks, out: &BootOutput, names: &[String]) -> Result<()> {
    let (Some(path), Some(sample)) = (&sinks.boot_vals, &out.sample) else {
        return Ok(());
    };
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{},value", names.join(","))?;
        for (i, v) in sample.values.iter().enumerate() {
            if let Some(draws) = &sample.input_draws {
                for x in draws.row(i) {
                    write!(w, "{},", exact(*x))?;
                }
            }
            writeln!(w, "{}", exact(*v))?;
        }
        w.flush()
    };
    write().with_context(|| format!("--boot-vals {}", path.display()))
}

//! Command execution: run a validated config, render CSV or JSON, and write
//! the result atomically (temp file + rename in the target directory).

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::cli::config::{
    BandsConfig, EpCurveConfig, EpScanConfig, FitConfig, PipelineConfig, RatesConfig, RunConfig,
    SimulateConfig, SolvePolConfig,
};
use crate::dissipation::{pump_rates, solve_polarization, Polarization};
use crate::eplocate::{locate_ep_on_scan, trace_ep2_curve, Ep2Branch};
use crate::expsim::{synthesize_dataset, uniform_times, TimeSeriesDataset};
use crate::fitting::{bootstrap_ci, fit_gamma};
use crate::model::HamiltonianSpec;
use crate::spectra::{sweep_bands, Axis, BandSweep};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!(
                "format: found {other:?}, expected csv or json"
            ))),
        }
    }

    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug)]
pub struct ExecuteOutcome {
    pub path: PathBuf,
    /// One-line human summary, suppressed by --quiet.
    pub summary: String,
}

/// Run a validated command, writing its output atomically. `out` overrides
/// the default `epsim-<command>.<ext>` filename.
pub fn execute(
    config: &RunConfig,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<ExecuteOutcome> {
    let (default_name, body, summary) = match config {
        RunConfig::Bands(c) => run_bands(c, format)?,
        RunConfig::EpScan(c) => run_ep_scan(c, format)?,
        RunConfig::EpCurve(c) => run_ep_curve(c, format)?,
        RunConfig::Rates(c) => run_rates(c, format)?,
        RunConfig::SolvePol(c) => run_solve_pol(c, format)?,
        RunConfig::Simulate(c) => run_simulate(c, format)?,
        RunConfig::Fit(c) => run_fit(c, format)?,
        RunConfig::Pipeline(c) => run_pipeline(c, format)?,
    };
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{default_name}.{}", format.extension())));
    write_atomic(&path, &body)?;
    Ok(ExecuteOutcome { path, summary })
}

fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(".{}.tmp", file_name(path))),
        None => PathBuf::from(format!(".{}.tmp", file_name(path))),
    };
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into())
}

fn config_comment(config_json: &Value) -> String {
    format!("config {config_json}")
}

fn run_bands(c: &BandsConfig, format: OutputFormat) -> Result<(String, String, String)> {
    let spec = c.spec.to_spec()?;
    let axis = Axis::parse(&c.axis)?;
    let grid = c.grid.values();
    let sweep = sweep_bands(&spec, axis, &grid)?;
    let flagged = sweep.flagged.iter().filter(|f| **f).count();
    let summary = format!(
        "bands: {} grid points on {}, {} flagged near-degenerate",
        grid.len(),
        c.axis,
        flagged
    );
    let body = match format {
        OutputFormat::Csv => {
            let comments = vec![config_comment(&serde_json::to_value(c)?)];
            sweep.to_csv(&comments)
        }
        OutputFormat::Json => pretty(&bands_json(&sweep, c)?)?,
    };
    Ok(("epsim-bands".into(), body, summary))
}

fn bands_json(sweep: &BandSweep, c: &BandsConfig) -> Result<Value> {
    let bands: Vec<Value> = sweep
        .bands
        .iter()
        .map(|band| {
            Value::Array(
                band.iter()
                    .map(|z| json!({"re": z.re, "im": z.im}))
                    .collect(),
            )
        })
        .collect();
    Ok(json!({
        "config": serde_json::to_value(c)?,
        "axis": sweep.axis_name,
        "axis_values": sweep.axis_values,
        "bands": bands,
        "gaps": sweep.gaps,
        "gram_conds": sweep.gram_conds,
        "flagged": sweep.flagged,
    }))
}

fn run_ep_scan(c: &EpScanConfig, format: OutputFormat) -> Result<(String, String, String)> {
    let spec = c.spec.to_spec()?;
    let axis = Axis::parse(&c.axis)?;
    let records = locate_ep_on_scan(&spec, axis, (c.interval[0], c.interval[1]), c.tol)?;
    let summary = format!(
        "ep-scan: {} degeneracies on {} in [{}, {}]",
        records.len(),
        c.axis,
        c.interval[0],
        c.interval[1]
    );
    let body = match format {
        OutputFormat::Json => pretty(&json!({
            "config": serde_json::to_value(c)?,
            "records": serde_json::to_value(&records)?,
        }))?,
        OutputFormat::Csv => {
            let mut out = format!("# {}\n", config_comment(&serde_json::to_value(c)?));
            out.push_str(
                "axis,axis_value,eigenvalue_re,eigenvalue_im,algebraic_mult,geometric_mult,\
                 kind,min_gap,gram_cond,bracket_width\n",
            );
            for r in &records {
                let kind = match r.kind {
                    crate::eplocate::DegeneracyKind::Exceptional => "exceptional",
                    crate::eplocate::DegeneracyKind::Diabolic => "diabolic",
                };
                out.push_str(&format!(
                    "{},{:.12e},{:.12e},{:.12e},{},{},{},{:.6e},{:.6e},{:.6e}\n",
                    r.axis,
                    r.axis_value,
                    r.eigenvalue_re,
                    r.eigenvalue_im,
                    r.algebraic_mult,
                    r.geometric_mult,
                    kind,
                    r.diagnostics.min_gap,
                    r.diagnostics.gram_cond,
                    r.diagnostics.bracket_width,
                ));
            }
            out
        }
    };
    Ok(("epsim-ep-scan".into(), body, summary))
}

fn run_ep_curve(c: &EpCurveConfig, format: OutputFormat) -> Result<(String, String, String)> {
    let branch = Ep2Branch::parse(&c.branch)?;
    let grid = c.j1_grid.values();
    let curve = trace_ep2_curve(branch, c.gamma_fixed, &grid)?;
    let summary = format!(
        "ep-curve: branch {} traced {} points{}",
        c.branch,
        curve.points.len(),
        if curve.terminal_ep4.is_some() {
            ", terminated at the fourfold point"
        } else {
            ""
        }
    );
    let body = match format {
        OutputFormat::Csv => {
            let comments = vec![config_comment(&serde_json::to_value(c)?)];
            curve.to_csv(&comments)
        }
        OutputFormat::Json => pretty(&json!({
            "config": serde_json::to_value(c)?,
            "curve": serde_json::to_value(&curve)?,
        }))?,
    };
    Ok(("epsim-ep-curve".into(), body, summary))
}

fn run_rates(c: &RatesConfig, format: OutputFormat) -> Result<(String, String, String)> {
    let pol = Polarization::new(c.eps[0], c.eps[1], c.eps[2])?;
    let rates = pump_rates(&pol)?;
    let summary = format!(
        "rates: ({:.6}, {:.6}, {:.6}, {:.6})",
        rates.rates[0], rates.rates[1], rates.rates[2], rates.rates[3]
    );
    let body = match format {
        OutputFormat::Json => pretty(&json!({
            "config": serde_json::to_value(c)?,
            "rates": serde_json::to_value(&rates)?,
        }))?,
        OutputFormat::Csv => {
            let mut out = format!("# {}\n", config_comment(&serde_json::to_value(c)?));
            out.push_str("state_index,rate,rate_exact\n");
            for (k, r) in rates.rates.iter().enumerate() {
                let exact = rates
                    .rates_exact
                    .as_ref()
                    .map(|e| e[k].clone())
                    .unwrap_or_default();
                out.push_str(&format!("{k},{r:.12e},{exact}\n"));
            }
            out
        }
    };
    Ok(("epsim-rates".into(), body, summary))
}

fn run_solve_pol(c: &SolvePolConfig, format: OutputFormat) -> Result<(String, String, String)> {
    // infeasible targets are a reportable outcome, not a process failure
    let (value, summary) = match solve_polarization(&c.target) {
        Ok(sol) => (
            json!({
                "config": serde_json::to_value(c)?,
                "feasible": true,
                "solution": serde_json::to_value(&sol)?,
            }),
            format!(
                "solve-pol: eps = ({:.6}, {:.6}, {:.6}), scale {:.6e}, residual {:.3e}",
                sol.sigma_plus, sol.sigma_minus, sol.pi, sol.scale, sol.residual
            ),
        ),
        Err(Error::Infeasible(msg)) => (
            json!({
                "config": serde_json::to_value(c)?,
                "feasible": false,
                "reason": msg,
            }),
            "solve-pol: target infeasible".into(),
        ),
        Err(e) => return Err(e),
    };
    let body = match format {
        OutputFormat::Json => pretty(&value)?,
        // structurally a record, not a table; CSV degrades to key,value rows
        OutputFormat::Csv => {
            let mut out = format!("# {}\n", config_comment(&serde_json::to_value(c)?));
            out.push_str("key,value\n");
            flatten_kv(&value, "", &mut out);
            out
        }
    };
    Ok(("epsim-solve-pol".into(), body, summary))
}

fn flatten_kv(value: &Value, prefix: &str, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_kv(v, &key, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_kv(v, &format!("{prefix}.{i}"), out);
            }
        }
        other => out.push_str(&format!("{prefix},{other}\n")),
    }
}

fn run_simulate(c: &SimulateConfig, format: OutputFormat) -> Result<(String, String, String)> {
    let spec = c.spec.to_spec()?;
    let times = uniform_times(c.t_max_us * 1e-6, c.n_points as usize);
    let dataset = synthesize_dataset(&spec, &times, c.shots as u64, c.seed, c.detection_error)?;
    let summary = format!(
        "simulate: {} points to {} us, {} shots, seed {}",
        c.n_points, c.t_max_us, c.shots, c.seed
    );
    let body = match format {
        OutputFormat::Csv => dataset.to_csv()?,
        OutputFormat::Json => pretty(&json!({
            "config": serde_json::to_value(c)?,
            "dataset": serde_json::to_value(&dataset)?,
        }))?,
    };
    Ok(("epsim-simulate".into(), body, summary))
}

fn run_fit(c: &FitConfig, format: OutputFormat) -> Result<(String, String, String)> {
    let text = std::fs::read_to_string(&c.input)?;
    let dataset = TimeSeriesDataset::from_csv(&text)?;
    let template = fit_template(&c.spec.to_spec()?);
    let result = fit_with_options(
        &dataset,
        &template,
        (c.bounds[0], c.bounds[1]),
        c.weighted,
        c.bootstrap,
        c.n_resamples as usize,
        c.ci_level,
        c.seed,
    )?;
    let summary = fit_summary(&result);
    let body = fit_body(c, &result, format)?;
    Ok(("epsim-fit".into(), body, summary))
}

fn run_pipeline(c: &PipelineConfig, format: OutputFormat) -> Result<(String, String, String)> {
    let base = c.spec.to_spec()?;
    let synth_spec = HamiltonianSpec {
        gamma: crate::model::GammaSpec::Pattern {
            scale: c.gamma_true,
        },
        ..base.clone()
    };
    let times = uniform_times(c.t_max_us * 1e-6, c.n_points as usize);
    let dataset =
        synthesize_dataset(&synth_spec, &times, c.shots as u64, c.seed, c.detection_error)?;
    let template = fit_template(&base);
    let result = fit_with_options(
        &dataset,
        &template,
        (c.bounds[0], c.bounds[1]),
        c.weighted,
        c.n_resamples > 0,
        c.n_resamples as usize,
        c.ci_level,
        c.seed,
    )?;
    let summary = format!(
        "pipeline: gamma_true {} -> {}",
        c.gamma_true,
        fit_summary(&result)
    );
    let value = json!({
        "config": serde_json::to_value(c)?,
        "gamma_true": c.gamma_true,
        "fit": serde_json::to_value(&result)?,
    });
    let body = match format {
        OutputFormat::Json => pretty(&value)?,
        OutputFormat::Csv => {
            let mut out = format!("# {}\n", config_comment(&serde_json::to_value(c)?));
            out.push_str("key,value\n");
            flatten_kv(&value["fit"], "fit", &mut out);
            out.push_str(&format!("gamma_true,{}\n", c.gamma_true));
            out
        }
    };
    Ok(("epsim-pipeline".into(), body, summary))
}

/// Fits always vary the pattern scale; any gamma baked into the spec config
/// is ignored for the template.
fn fit_template(spec: &HamiltonianSpec) -> HamiltonianSpec {
    HamiltonianSpec {
        gamma: crate::model::GammaSpec::Pattern { scale: 0.0 },
        ..spec.clone()
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_with_options(
    dataset: &TimeSeriesDataset,
    template: &HamiltonianSpec,
    bounds: (f64, f64),
    weighted: bool,
    bootstrap: bool,
    n_resamples: usize,
    ci_level: f64,
    seed: u64,
) -> Result<crate::fitting::FitResult> {
    if bootstrap && n_resamples > 0 {
        bootstrap_ci(
            dataset, template, bounds, n_resamples, ci_level, seed, weighted,
        )
    } else {
        fit_gamma(dataset, template, bounds, weighted)
    }
}

fn fit_summary(result: &crate::fitting::FitResult) -> String {
    match result.ci_gamma {
        Some((lo, hi)) => format!(
            "fit: gamma_hat {:.6} (ci [{:.6}, {:.6}], {} resamples)",
            result.gamma_hat, lo, hi, result.bootstrap_samples
        ),
        None => format!("fit: gamma_hat {:.6}", result.gamma_hat),
    }
}

fn fit_body(
    c: &FitConfig,
    result: &crate::fitting::FitResult,
    format: OutputFormat,
) -> Result<String> {
    let value = json!({
        "config": serde_json::to_value(c)?,
        "fit": serde_json::to_value(result)?,
    });
    match format {
        OutputFormat::Json => pretty(&value),
        OutputFormat::Csv => {
            let mut out = format!("# {}\n", config_comment(&serde_json::to_value(c)?));
            out.push_str("key,value\n");
            flatten_kv(&value["fit"], "fit", &mut out);
            Ok(out)
        }
    }
}

fn pretty(value: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

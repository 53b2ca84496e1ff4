//! Batch experiment driver: single runs with per-iteration metrics, and
//! one-parameter sensitivity sweeps over seeds, both writing plot-ready
//! CSV files with the full effective configuration echoed in the header.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use plbp_core::metrics::{direction_rmse, heading_errors, position_errors, position_rmse};
use plbp_core::plbp::{run_plbp, LinearizationMode, RunConfig};
use plbp_core::scenario::{generate_scenario, load_scenario, Layout, Scenario, ScenarioParams};

#[derive(Parser, Debug)]
#[command(
    name = "plbp",
    about = "Cooperative vehicle localization from angle-of-arrival measurements",
    long_about = "Runs posterior-linearization belief propagation on synthetic vehicular \
                  scenarios. Without --sweep, performs a single experiment and writes \
                  per-iteration metrics plus final per-vehicle errors; with --sweep, varies \
                  one scenario parameter over a list of values and seeds."
)]
pub struct Cli {
    /// JSON config file; top-level keys are the scenario parameters
    /// (r, fov, sigma_x, sigma_y, sigma_theta, R, n_vehicles, n_anchors,
    /// anchor_var, layout) plus K, M, mode, seed.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Base random seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Outer linearization iterations.
    #[arg(long = "K")]
    pub k: Option<usize>,

    /// BP sweeps per linearization.
    #[arg(long = "M")]
    pub m: Option<usize>,

    /// Linearization mode; may be given twice to run both in one output.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Vec<Mode>,

    /// Sweep parameter: one of r, R, sigma_p, sigma_theta.
    #[arg(long, value_parser = parse_sweep_param)]
    pub sweep: Option<SweepParam>,

    /// Comma-separated sweep values (defaults depend on the parameter).
    #[arg(long)]
    pub values: Option<String>,

    /// Number of seeds per sweep value.
    #[arg(long)]
    pub seeds: Option<usize>,

    /// Output directory for the CSV files.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Scenario source: `grid`, `uniform`, or `from-file:<path>`.
    #[arg(long)]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Posterior,
    Prior,
}

impl Mode {
    fn to_core(self) -> LinearizationMode {
        match self {
            Mode::Posterior => LinearizationMode::Posterior,
            Mode::Prior => LinearizationMode::Prior,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Mode::Posterior => "posterior",
            Mode::Prior => "prior",
        }
    }
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    match s {
        "posterior" => Ok(Mode::Posterior),
        "prior" => Ok(Mode::Prior),
        other => Err(format!("unknown mode '{other}' (posterior|prior)")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "r")]
    Radius,
    #[serde(rename = "R")]
    MeasVar,
    #[serde(rename = "sigma_p")]
    SigmaP,
    #[serde(rename = "sigma_theta")]
    SigmaTheta,
}

impl SweepParam {
    fn label(self) -> &'static str {
        match self {
            SweepParam::Radius => "r",
            SweepParam::MeasVar => "R",
            SweepParam::SigmaP => "sigma_p",
            SweepParam::SigmaTheta => "sigma_theta",
        }
    }

    fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::Radius => vec![10.0, 15.0, 20.0, 25.0, 30.0],
            SweepParam::MeasVar => vec![0.01, 0.04, 0.09, 0.16, 0.25],
            SweepParam::SigmaP => vec![0.0, 2.5, 5.0, 7.5, 10.0],
            SweepParam::SigmaTheta => vec![0.05, 0.2, 0.35, 0.5, 0.7],
        }
    }

    /// Applies one sweep value, keeping every other parameter fixed.
    pub fn apply(self, params: &mut ScenarioParams, value: f64) {
        match self {
            SweepParam::Radius => params.r = value,
            SweepParam::MeasVar => params.meas_var = value,
            SweepParam::SigmaP => {
                params.sigma_x = value / std::f64::consts::SQRT_2;
                params.sigma_y = value / std::f64::consts::SQRT_2;
            }
            SweepParam::SigmaTheta => params.sigma_theta = value,
        }
    }
}

fn parse_sweep_param(s: &str) -> std::result::Result<SweepParam, String> {
    match s {
        "r" => Ok(SweepParam::Radius),
        "R" => Ok(SweepParam::MeasVar),
        "sigma_p" => Ok(SweepParam::SigmaP),
        "sigma_theta" => Ok(SweepParam::SigmaTheta),
        other => Err(format!(
            "unknown sweep parameter '{other}' (r|R|sigma_p|sigma_theta)"
        )),
    }
}

/// Config-file schema: scenario parameters plus run settings, everything
/// optional so the file can override only what it needs.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub r: Option<f64>,
    pub fov: Option<f64>,
    pub sigma_x: Option<f64>,
    pub sigma_y: Option<f64>,
    pub sigma_theta: Option<f64>,
    #[serde(rename = "R")]
    pub meas_var: Option<f64>,
    pub n_vehicles: Option<usize>,
    pub n_anchors: Option<usize>,
    pub anchor_var: Option<[f64; 3]>,
    pub layout: Option<Layout>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
}

/// Sweep section of the effective configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub seeds: usize,
}

/// The fully resolved experiment: every output file embeds this as JSON,
/// and re-running from the embedded copy reproduces the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub params: ScenarioParams,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub modes: Vec<Mode>,
    pub seed: u64,
    /// `grid`, `uniform`, or `from-file:<path>`.
    pub scenario_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

/// Merges CLI flags over the config file over the benchmark defaults.
pub fn resolve(cli: &Cli) -> Result<EffectiveConfig> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let defaults = ScenarioParams::default();
    let mut params = ScenarioParams {
        r: file.r.unwrap_or(defaults.r),
        fov: file.fov.unwrap_or(defaults.fov),
        sigma_x: file.sigma_x.unwrap_or(defaults.sigma_x),
        sigma_y: file.sigma_y.unwrap_or(defaults.sigma_y),
        sigma_theta: file.sigma_theta.unwrap_or(defaults.sigma_theta),
        meas_var: file.meas_var.unwrap_or(defaults.meas_var),
        n_vehicles: file.n_vehicles.unwrap_or(defaults.n_vehicles),
        n_anchors: file.n_anchors.unwrap_or(defaults.n_anchors),
        anchor_var: file.anchor_var.unwrap_or(defaults.anchor_var),
        layout: file.layout.unwrap_or(defaults.layout),
    };

    let scenario_source = match &cli.scenario {
        Some(s) => {
            match s.as_str() {
                "grid" => params.layout = Layout::GridStreets,
                "uniform" => params.layout = Layout::Uniform,
                other if other.starts_with("from-file:") => params.layout = Layout::FromFile,
                other => bail!("unknown --scenario '{other}' (grid|uniform|from-file:<path>)"),
            }
            s.clone()
        }
        None => match params.layout {
            Layout::GridStreets => "grid".to_string(),
            Layout::Uniform => "uniform".to_string(),
            Layout::FromFile => bail!("layout 'from-file' requires --scenario from-file:<path>"),
        },
    };

    let sweep = match cli.sweep {
        Some(param) => {
            let values = match &cli.values {
                Some(list) => list
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .with_context(|| format!("bad sweep value '{v}'"))
                    })
                    .collect::<Result<Vec<f64>>>()?,
                None => param.default_values(),
            };
            if values.is_empty() || values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                bail!("sweep values must be non-negative and finite");
            }
            let seeds = cli.seeds.unwrap_or(10);
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            Some(SweepSpec {
                param,
                values,
                seeds,
            })
        }
        None => None,
    };

    let modes = if cli.mode.is_empty() {
        vec![file.mode.unwrap_or(Mode::Posterior)]
    } else {
        cli.mode.clone()
    };

    // Sweeps follow the sensitivity-study setup (K=10, M=10) unless
    // explicitly overridden.
    let m = cli
        .m
        .or(file.m)
        .unwrap_or(if sweep.is_some() { 10 } else { 3 });

    Ok(EffectiveConfig {
        params,
        k: cli.k.or(file.k).unwrap_or(10),
        m,
        modes,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        scenario_source,
        sweep,
    })
}

/// Runs the experiment described by `cfg`, writing CSV files into `out`.
pub fn execute(cfg: &EffectiveConfig, out: &Path) -> Result<()> {
    cfg.params
        .validate()
        .context("invalid scenario parameters")?;
    if cfg.k < 1 || cfg.m < 1 {
        bail!("K and M must be at least 1");
    }
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    match &cfg.sweep {
        None => run_experiment(cfg, out),
        Some(spec) => {
            if cfg.scenario_source.starts_with("from-file:") {
                bail!("sweeps regenerate scenarios and cannot use from-file layouts");
            }
            sweep_experiment(cfg, spec, out)
        }
    }
}

fn obtain_scenario(cfg: &EffectiveConfig, seed: u64) -> Result<Scenario> {
    if let Some(path) = cfg.scenario_source.strip_prefix("from-file:") {
        return Ok(load_scenario(Path::new(path))?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(generate_scenario(&cfg.params, &mut rng)?)
}

fn header(cfg: &EffectiveConfig, kind: &str) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "# plbp {kind}")?;
    writeln!(s, "# config: {}", serde_json::to_string(cfg)?)?;
    Ok(s)
}

fn run_experiment(cfg: &EffectiveConfig, out: &Path) -> Result<()> {
    let scenario = obtain_scenario(cfg, cfg.seed)?;
    let graph = scenario.factor_graph()?;
    let exclude: &BTreeSet<usize> = &scenario.anchor_ids;

    let mut metrics = header(cfg, "run")?;
    metrics.push_str("k,m,mode,pos_rmse_m,dir_rmse_rad\n");
    let mut errors = header(cfg, "run vehicle errors")?;
    errors.push_str("mode,id,is_anchor,pos_error_m,dir_error_rad\n");

    for &mode in &cfg.modes {
        let run_cfg = RunConfig {
            outer_iterations: cfg.k,
            bp_iterations: cfg.m,
            mode: mode.to_core(),
            record_history: true,
            ..Default::default()
        };
        let result = run_plbp(&graph, &run_cfg)?;
        let history = result.history.as_ref().expect("history was requested");
        for (idx, beliefs) in history.iter().enumerate() {
            writeln!(
                metrics,
                "{},{},{},{:.6},{:.6}",
                idx + 1,
                cfg.m,
                mode.label(),
                position_rmse(beliefs, &scenario.truth, exclude)?,
                direction_rmse(beliefs, &scenario.truth, exclude)?
            )?;
        }

        // Final per-vehicle errors, anchors included for completeness.
        let none = BTreeSet::new();
        let pos = position_errors(&result.beliefs, &scenario.truth, &none)?;
        let dir = heading_errors(&result.beliefs, &scenario.truth, &none)?;
        for id in 0..scenario.num_vehicles() {
            writeln!(
                errors,
                "{},{},{},{:.6},{:.6}",
                mode.label(),
                id,
                scenario.anchor_ids.contains(&id),
                pos[id],
                dir[id]
            )?;
        }
    }

    std::fs::write(out.join("metrics.csv"), metrics)?;
    std::fs::write(out.join("vehicle_errors.csv"), errors)?;
    Ok(())
}

fn sweep_experiment(cfg: &EffectiveConfig, spec: &SweepSpec, out: &Path) -> Result<()> {
    let mode = cfg.modes[0];
    let jobs: Vec<(usize, u64)> = (0..spec.values.len())
        .flat_map(|vi| (0..spec.seeds as u64).map(move |s| (vi, s)))
        .collect();

    let results: Vec<(usize, u64, f64, f64)> = jobs
        .par_iter()
        .map(|&(vi, seed_idx)| {
            let mut params = cfg.params.clone();
            spec.param.apply(&mut params, spec.values[vi]);
            params.validate()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + seed_idx);
            let scenario = generate_scenario(&params, &mut rng)?;
            let graph = scenario.factor_graph()?;
            let run_cfg = RunConfig {
                outer_iterations: cfg.k,
                bp_iterations: cfg.m,
                mode: mode.to_core(),
                ..Default::default()
            };
            let result = run_plbp(&graph, &run_cfg)?;
            let pos = position_rmse(&result.beliefs, &scenario.truth, &scenario.anchor_ids)?;
            let dir = direction_rmse(&result.beliefs, &scenario.truth, &scenario.anchor_ids)?;
            Ok((vi, seed_idx, pos, dir))
        })
        .collect::<plbp_core::Result<Vec<_>>>()?;

    // Aggregate per value; results sorted for a deterministic file.
    let mut csv = header(cfg, "sweep")?;
    csv.push_str("param,value,seeds,pos_rmse_mean,pos_rmse_stderr,dir_rmse_mean,dir_rmse_stderr\n");
    for (vi, &value) in spec.values.iter().enumerate() {
        let mut rows: Vec<&(usize, u64, f64, f64)> = results.iter().filter(|r| r.0 == vi).collect();
        rows.sort_by_key(|r| r.1);
        let n = rows.len() as f64;
        let (pm, dm) = (
            rows.iter().map(|r| r.2).sum::<f64>() / n,
            rows.iter().map(|r| r.3).sum::<f64>() / n,
        );
        let pvar = rows.iter().map(|r| (r.2 - pm) * (r.2 - pm)).sum::<f64>() / n;
        let dvar = rows.iter().map(|r| (r.3 - dm) * (r.3 - dm)).sum::<f64>() / n;
        writeln!(
            csv,
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            spec.param.label(),
            value,
            rows.len(),
            pm,
            (pvar / n).sqrt(),
            dm,
            (dvar / n).sqrt()
        )?;
    }
    std::fs::write(out.join("sweep.csv"), csv)?;
    Ok(())
}

/// Extracts the `# config:` line of an output file back into a config;
/// feeding it to [`execute`] reproduces the run.
pub fn config_from_output(text: &str) -> Result<EffectiveConfig> {
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .context("no '# config:' header line found")?;
    Ok(serde_json::from_str(line)?)
}

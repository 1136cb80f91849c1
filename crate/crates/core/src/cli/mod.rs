//! Command-line front end: `verify`, `simulate`, `fit` and `figures`.
//!
//! Every run ends with exit code 0 (success), 1 (a check or fit failed),
//! 2 (usage or input error) or 3 (I/O failure).

pub mod data;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::activations::{dyisru, scaled_dyt, DyIsruParams, DyTParams};
use crate::error::Error;
use crate::fitting::{
    fit_kind, mirror_augment, residual_stats, FitDataset, FitResult, FunctionKind,
};
use crate::simulation::{outlier_points, run_scenario, OutlierScenario, SimulationConfig};
use crate::verification::run_suite;

use svg::{sample_curve, Panel, PALETTE};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Frames drawn by `simulate` unless `--frames` is given.
pub const DEFAULT_FRAMES: [usize; 4] = [0, 1, 2, 9];

/// Fig. 1 style curve parameters (C = 50).
pub const FIG1_CHANNELS: usize = 50;
pub const FIG1_ALPHAS: [f64; 3] = [0.05, 0.1, 0.3];
pub const FIG1_BETAS: [f64; 3] = [25.0, 100.0, 400.0];
pub const FIG1_X_RANGE: (f64, f64) = (-40.0, 40.0);

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::BracketFailure(_) | Error::DegenerateVariance(_) => {
                CliError::Failure(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dynact",
    version,
    about = "Layer normalization vs. DyT / DyISRU: verification, simulation, fitting"
)]
pub struct Cli {
    /// Seed for every random draw of the run.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Print a machine-readable summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the numerical identity checks and write verification.json.
    Verify {
        /// Random vectors per channel count (layer-norm derivative) or in total.
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
    },
    /// Stepwise outlier simulation: scenario.csv plus one SVG per frame.
    Simulate(SimulateArgs),
    /// Fit DyT or DyISRU to outlier data.
    Fit(FitArgs),
    /// Regenerate all figures with their CSV data.
    Figures,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(2..))]
    pub channels: u64,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 5.0)]
    pub step: f64,
    #[arg(long = "s-max", default_value_t = 9)]
    pub s_max: usize,
    /// Frames to draw (comma separated); defaults to 0,1,2,9 clipped to s-max.
    #[arg(long, value_delimiter = ',')]
    pub frames: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Dyt,
    Dyisru,
}

impl From<KindArg> for FunctionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Dyt => FunctionKind::DyT,
            KindArg::Dyisru => FunctionKind::DyIsru,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with columns x,y or a scenario CSV (rows with is_outlier=1 are used).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Channel count C; inferred from a scenario CSV when omitted.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub channels: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub artifacts: Vec<String>,
    pub tool_version: String,
}

/// Result of a command that ran to completion.
pub struct Outcome {
    pub passed: bool,
    pub summary: Value,
    pub text: String,
}

struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            names: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(format!("cannot serialize {name}: {e}")))?;
        self.write(name, &(text + "\n"))
    }

    /// Writes `manifest.json`; must be the last artifact.
    fn finish(mut self, command: &str, config: Value, seed: u64) -> Result<Vec<String>, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config,
            seed,
            artifacts: self.names.clone(),
            tool_version: TOOL_VERSION.to_string(),
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(self.names)
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            if cli.json {
                println!("{}", outcome.summary);
            } else {
                print!("{}", outcome.text);
            }
            if outcome.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Verify { trials } => cmd_verify(cli.seed, *trials, &cli.out),
        Command::Simulate(args) => cmd_simulate(cli.seed, args, &cli.out),
        Command::Fit(args) => cmd_fit(cli.seed, args, &cli.out),
        Command::Figures => cmd_figures(cli.seed, &cli.out),
    }
}

pub fn cmd_verify(seed: u64, trials: u64, out: &Path) -> Result<Outcome, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be >= 1".into()));
    }
    let report = run_suite(seed, trials)?;
    let mut artifacts = Artifacts::create(out)?;
    artifacts.write_json("verification.json", &report)?;
    let files = artifacts.finish("verify", json!({ "trials": trials }), seed)?;

    let mut text = String::new();
    for c in &report.checks {
        text.push_str(&format!(
            "{} {:<32} trials={:<6} max_abs={:.3e} max_rel={:.3e} tol={:.0e}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.trials,
            c.max_abs_error,
            c.max_rel_error,
            c.tolerance
        ));
    }
    text.push_str(&format!(
        "verdict: {}\n",
        if report.verdict { "passed" } else { "failed" }
    ));
    Ok(Outcome {
        passed: report.verdict,
        summary: json!({ "report": report, "artifacts": files }),
        text,
    })
}

fn simulation_config(seed: u64, args: &SimulateArgs) -> Result<SimulationConfig, CliError> {
    let config = SimulationConfig {
        channels: args.channels as usize,
        sigma: args.sigma,
        mu: args.mu,
        step: args.step,
        s_max: args.s_max,
        seed,
    };
    config.validate()?;
    Ok(config)
}

/// Frame `s`: that frame's regular channels as empty circles and the
/// outliers of frames `1..=s` as filled circles.
pub fn frame_panel(scenario: &OutlierScenario, s: usize) -> Panel {
    let o = scenario.outlier_index;
    let frame = scenario.frame(s).expect("frame within s_max");
    let regular: Vec<(f64, f64)> = frame
        .x
        .values()
        .iter()
        .zip(frame.y.values())
        .enumerate()
        .filter(|&(k, _)| !scenario.is_outlier(s, k))
        .map(|(_, (&x, &y))| (x, y))
        .collect();
    let outliers: Vec<(f64, f64)> = scenario
        .frames
        .iter()
        .filter(|f| f.s >= 1 && f.s <= s)
        .map(|f| (f.x.values()[o], f.y.values()[o]))
        .collect();
    let mut panel = Panel::new(format!("Layer normalization, S = {s}"), "x", "y")
        .points(regular, false, PALETTE[0], None);
    if !outliers.is_empty() {
        panel = panel.points(outliers, true, PALETTE[1], Some("outliers"));
    }
    panel
}

pub fn cmd_simulate(seed: u64, args: &SimulateArgs, out: &Path) -> Result<Outcome, CliError> {
    let config = simulation_config(seed, args)?;
    let frames: Vec<usize> = match &args.frames {
        Some(requested) => {
            if let Some(bad) = requested.iter().find(|&&s| s > config.s_max) {
                return Err(CliError::Usage(format!(
                    "frame {bad} exceeds --s-max {}",
                    config.s_max
                )));
            }
            requested.clone()
        }
        None => DEFAULT_FRAMES
            .iter()
            .copied()
            .filter(|&s| s <= config.s_max)
            .collect(),
    };
    let scenario = run_scenario(&config)?;
    let mut artifacts = Artifacts::create(out)?;
    artifacts.write("scenario.csv", &data::scenario_csv(&scenario))?;
    for &s in &frames {
        artifacts.write(
            &format!("frame_s{s}.svg"),
            &svg::render(&[frame_panel(&scenario, s)]),
        )?;
    }
    let files = artifacts.finish(
        "simulate",
        json!({ "simulation": config, "frames": frames }),
        seed,
    )?;
    let text = format!(
        "simulated {} frames, C = {}, outlier channel {}; wrote {}\n",
        scenario.frames.len(),
        config.channels,
        scenario.outlier_index,
        files.join(", ")
    );
    Ok(Outcome {
        passed: true,
        summary: json!({ "outlier_index": scenario.outlier_index, "artifacts": files }),
        text,
    })
}

fn fit_color(kind: FunctionKind) -> &'static str {
    match kind {
        FunctionKind::DyT => PALETTE[2],
        FunctionKind::DyIsru => PALETTE[3],
    }
}

/// Two stacked panels: data with fitted curves, and residuals of the
/// positive (unmirrored) outliers.
pub fn fit_figure(data: &FitDataset, fits: &[&FitResult], background: &[(f64, f64)]) -> String {
    let reach = data
        .points()
        .iter()
        .chain(background)
        .map(|p| p.0.abs())
        .fold(0.0, f64::max)
        * 1.05;
    let originals = &data.points()[..data.n_original()];
    let mut top = Panel::new("Fits to layer-normalized outliers", "x", "y");
    if !background.is_empty() {
        top = top.points(background.to_vec(), false, "#999999", None);
    }
    top = top.points(data.points().to_vec(), true, PALETTE[1], Some("outliers"));
    let mut bottom = Panel::new("Residuals", "x", "y - f(x)");
    for fit in fits {
        let kind = fit.function_kind;
        let c = data.channels();
        let p = fit.parameter;
        let curve = sample_curve(-reach, reach, |x| kind.eval(x, p, c).unwrap_or(f64::NAN));
        let label = match kind {
            FunctionKind::DyT => format!("DyT, alpha = {p:.4}"),
            FunctionKind::DyIsru => format!("DyISRU, beta = {p:.1}"),
        };
        top = top.curve(curve, fit_color(kind), false, Some(&label));
        let mut res: Vec<(f64, f64)> = originals
            .iter()
            .zip(&fit.residuals)
            .filter(|(pt, _)| pt.0 >= 0.0)
            .map(|(pt, r)| (pt.0, *r))
            .collect();
        res.sort_by(|a, b| a.0.total_cmp(&b.0));
        bottom = bottom
            .curve(res.clone(), fit_color(kind), false, Some(&label))
            .points(res, true, fit_color(kind), None);
    }
    bottom = bottom.hline(0.0);
    svg::render(&[top, bottom])
}

pub fn cmd_fit(seed: u64, args: &FitArgs, out: &Path) -> Result<Outcome, CliError> {
    let file = fs::File::open(&args.input)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", args.input.display())))?;
    let input = data::read_fit_input(std::io::BufReader::new(file))?;
    let channels = match (args.channels, input.channels) {
        (Some(c), _) => c as usize,
        (None, Some(c)) => c,
        (None, None) => {
            return Err(CliError::Usage(
                "--channels is required for x,y input".into(),
            ))
        }
    };
    let kind = FunctionKind::from(args.kind);
    let dataset = mirror_augment(&input.points, channels)?;
    let result = fit_kind(kind, &dataset)?;
    let (mae, max_abs) = residual_stats(&result);

    let mut artifacts = Artifacts::create(out)?;
    artifacts.write_json(&format!("fit_{kind}.json"), &result)?;
    artifacts.write(
        &format!("fit_{kind}.svg"),
        &fit_figure(&dataset, &[&result], &[]),
    )?;
    let files = artifacts.finish(
        "fit",
        json!({
            "input": args.input.display().to_string(),
            "kind": kind,
            "channels": channels,
            "mirrored": dataset.mirrored(),
        }),
        seed,
    )?;
    let text = format!(
        "{kind}: parameter = {}, sse = {:.6e}, mae = {:.6}, max |residual| = {:.6}, points = {}\n",
        result.parameter, result.sse, mae, max_abs, result.n_points
    );
    Ok(Outcome {
        passed: true,
        summary: json!({ "fit": result, "max_abs_residual": max_abs, "artifacts": files }),
        text,
    })
}

fn fig1(artifacts: &mut Artifacts) -> Result<Value, CliError> {
    let c = FIG1_CHANNELS;
    let (lo, hi) = FIG1_X_RANGE;
    let mut csv = String::from("function,parameter,x,y\n");
    let mut panel = Panel::new(format!("DyT and DyISRU, C = {c}"), "x", "y");
    let mut color = PALETTE.iter().cycle();
    for &alpha in &FIG1_ALPHAS {
        let p = DyTParams::new(alpha, c)?;
        let curve = sample_curve(lo, hi, |x| scaled_dyt(x, &p));
        for (x, y) in &curve {
            csv.push_str(&format!("dyt,{alpha},{x},{y}\n"));
        }
        panel = panel.curve(
            curve,
            color.next().unwrap(),
            false,
            Some(&format!("DyT alpha = {alpha}")),
        );
    }
    for &beta in &FIG1_BETAS {
        let p = DyIsruParams::new(beta, c)?;
        let curve = sample_curve(lo, hi, |x| dyisru(x, &p));
        for (x, y) in &curve {
            csv.push_str(&format!("dyisru,{beta},{x},{y}\n"));
        }
        panel = panel.curve(
            curve,
            color.next().unwrap(),
            true,
            Some(&format!("DyISRU beta = {beta}")),
        );
    }
    let bound = ((c - 1) as f64).sqrt();
    panel = panel.hline(bound).hline(-bound);
    artifacts.write("fig1_activations.csv", &csv)?;
    artifacts.write("fig1_activations.svg", &svg::render(&[panel]))?;
    Ok(json!({
        "channels": c,
        "alphas": FIG1_ALPHAS,
        "betas": FIG1_BETAS,
        "x_range": [lo, hi],
        "extrema": [-bound, bound],
    }))
}

pub fn cmd_figures(seed: u64, out: &Path) -> Result<Outcome, CliError> {
    let mut artifacts = Artifacts::create(out)?;
    let fig1_config = fig1(&mut artifacts)?;

    let config = SimulationConfig::with_seed(seed);
    let scenario = run_scenario(&config)?;
    artifacts.write("fig2_scenario.csv", &data::scenario_csv(&scenario))?;
    for s in DEFAULT_FRAMES {
        artifacts.write(
            &format!("fig2_s{s}.svg"),
            &svg::render(&[frame_panel(&scenario, s)]),
        )?;
    }

    let points = outlier_points(&scenario)?;
    let dataset = mirror_augment(&points, config.channels)?;
    let dyt = fit_kind(FunctionKind::DyT, &dataset)?;
    let isru = fit_kind(FunctionKind::DyIsru, &dataset)?;
    let mut csv = String::from("s,x,y,dyt,dyisru,dyt_residual,dyisru_residual\n");
    for (k, &(x, y)) in points.iter().enumerate() {
        let fd = y - dyt.residuals[k];
        let fi = y - isru.residuals[k];
        csv.push_str(&format!(
            "{},{x},{y},{fd},{fi},{},{}\n",
            k + 1,
            dyt.residuals[k],
            isru.residuals[k]
        ));
    }
    let o = scenario.outlier_index;
    let background: Vec<(f64, f64)> = scenario
        .frames
        .iter()
        .flat_map(|f| {
            f.x.values()
                .iter()
                .zip(f.y.values())
                .enumerate()
                .filter(move |&(k, _)| k != o)
                .map(|(_, (&x, &y))| (x, y))
        })
        .collect();
    artifacts.write("fig3_fits.csv", &csv)?;
    artifacts.write_json("fig3_fits.json", &json!({ "dyt": dyt, "dyisru": isru }))?;
    artifacts.write(
        "fig3_fits.svg",
        &fit_figure(&dataset, &[&dyt, &isru], &background),
    )?;

    let files = artifacts.finish(
        "figures",
        json!({ "fig1": fig1_config, "simulation": config, "frames": DEFAULT_FRAMES }),
        seed,
    )?;
    let text = format!(
        "DyT alpha = {:.4} (mae {:.3}), DyISRU beta = {:.1} (mae {:.4}); wrote {} files\n",
        dyt.parameter,
        dyt.mae,
        isru.parameter,
        isru.mae,
        files.len()
    );
    Ok(Outcome {
        passed: true,
        summary: json!({ "dyt": dyt, "dyisru": isru, "artifacts": files }),
        text,
    })
}

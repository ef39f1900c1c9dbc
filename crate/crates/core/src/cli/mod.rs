//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration or I/O problems, 2 when the
//! numerics fail.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::classical::{lyapunov_exponent, poincare_section};
use crate::scenarios::{presets, Regime, ScenarioOutput, Simulation};
use config::{parse_ini, resolve, Entry, RunConfig};
use output::OutputDir;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Simulation(#[from] crate::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), reason: reason.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 1,
            CliError::Simulation(e) if e.is_input_error() => 1,
            CliError::Simulation(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "spindyn", version, about = "Entanglement dynamics of two coupled spins in a magnetic field")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Two spins 1/2 starting from a product of coherent states.
    TwoQubits {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        state: StateArgs,
    },
    /// A large spin (environment) coupled to a qubit.
    Environment {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        state: StateArgs,
    },
    /// Two large spins with their classical companion trajectory.
    Semiclassical {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        classical: ClassicalArgs,
    },
    /// Poincaré section at p2 = 0 of the classical flow.
    Poincare {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        classical: ClassicalArgs,
    },
    /// Largest Lyapunov exponent of the classical flow.
    Lyapunov {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        classical: ClassicalArgs,
    },
    /// Print the available presets.
    ListPresets,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// INI file with keys at top level or under [two_qubits], [environment], [semiclassical].
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset to start from; `all` runs every preset of the regime.
    #[arg(long, allow_hyphen_values = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "output")]
    out: PathBuf,
    /// Also write gnuplot scripts (config key `plots`).
    #[arg(long)]
    plots: bool,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "SPINDYN_THREADS", default_value_t = 0)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Spin magnitude, e.g. `200` or `1/2`.
    #[arg(long, allow_hyphen_values = true)]
    s1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s2: Option<String>,
    /// Zeeman coefficient eps1 * B0.
    #[arg(long, allow_hyphen_values = true)]
    eps1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<String>,
    /// Number of grid points, both ends included.
    #[arg(long, allow_hyphen_values = true)]
    n_points: Option<String>,
}

#[derive(Args, Debug)]
struct StateArgs {
    /// Coherent label of spin 1: `0`, `1+1i`, `i`, `inf`, ...
    #[arg(long, allow_hyphen_values = true)]
    z1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    z2: Option<String>,
    /// `coherent <z>`, `uniform`, `thermal [T]` or `canonical q,p`.
    #[arg(long, allow_hyphen_values = true)]
    initial1: Option<String>,
    /// Temperature of a thermal spin 1.
    #[arg(long, allow_hyphen_values = true)]
    temperature: Option<String>,
}

#[derive(Args, Debug)]
struct ClassicalArgs {
    /// Classical point `q1,p1,q2,p2`; repeat for scans.
    #[arg(long, allow_hyphen_values = true)]
    point: Vec<String>,
    /// Section crossings per initial condition.
    #[arg(long, allow_hyphen_values = true)]
    crossings: Option<String>,
    /// positive, negative or both.
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    /// Runge-Kutta step.
    #[arg(long, allow_hyphen_values = true)]
    step: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    max_time: Option<String>,
    /// Lyapunov averaging time.
    #[arg(long, allow_hyphen_values = true)]
    horizon: Option<String>,
    /// Lyapunov renormalisation interval.
    #[arg(long, allow_hyphen_values = true)]
    renorm: Option<String>,
}

impl ModelArgs {
    fn entries(&self, out: &mut Vec<Entry>) {
        let pairs = [
            ("alpha", &self.alpha),
            ("s1", &self.s1),
            ("s2", &self.s2),
            ("eps1_b0", &self.eps1),
            ("eps2_b0", &self.eps2),
            ("t_end", &self.t_end),
            ("n_points", &self.n_points),
        ];
        out.extend(pairs.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| Entry::new(k, v.as_str()))));
    }
}

impl StateArgs {
    fn entries(&self, out: &mut Vec<Entry>) {
        if let Some(v) = &self.initial1 {
            out.push(Entry::new("initial1", v.as_str()));
        }
        if let Some(z) = &self.z1 {
            out.push(Entry::new("initial1", format!("coherent {z}")));
        }
        if let Some(t) = &self.temperature {
            out.push(Entry::new("initial1", format!("thermal {t}")));
        }
        if let Some(z) = &self.z2 {
            out.push(Entry::new("initial2", format!("coherent {z}")));
        }
    }
}

impl ClassicalArgs {
    /// `as_initial` maps a single `--point` onto the initial state instead of
    /// the scan list.
    fn entries(&self, out: &mut Vec<Entry>, as_initial: bool) -> Result<(), CliError> {
        if let Some(v) = &self.step {
            out.push(Entry::new("step", v.as_str()));
        }
        let pairs = [
            ("crossings", &self.crossings),
            ("direction", &self.direction),
            ("max_time", &self.max_time),
            ("horizon", &self.horizon),
            ("renorm", &self.renorm),
        ];
        out.extend(pairs.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| Entry::new(k, v.as_str()))));
        if self.point.is_empty() {
            return Ok(());
        }
        if as_initial {
            let [p] = &self.point[..] else {
                return Err(CliError::config("point", "give a single point for a semiclassical run"));
            };
            let x = config::point("point", p)?;
            out.push(Entry::new("initial1", format!("canonical {},{}", x.q1, x.p1)));
            out.push(Entry::new("initial2", format!("canonical {},{}", x.q2, x.p2)));
        } else {
            out.push(Entry::new("points", self.point.join("; ")));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Job {
    Series(Regime),
    Poincare,
    Lyapunov,
}

impl Job {
    fn regime(self) -> Regime {
        match self {
            Job::Series(r) => r,
            Job::Poincare | Job::Lyapunov => Regime::Semiclassical,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Job::Series(r) => r.name(),
            Job::Poincare => "poincare",
            Job::Lyapunov => "lyapunov",
        }
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit
/// code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let mut entries = Vec::new();
    let (job, run) = match command {
        Command::ListPresets => {
            for p in presets() {
                println!("{:<14} {:<14} {}", p.name, p.config.regime.name(), p.description);
            }
            return Ok(());
        }
        Command::TwoQubits { run, model, state } => {
            model.entries(&mut entries);
            state.entries(&mut entries);
            (Job::Series(Regime::TwoQubits), run)
        }
        Command::Environment { run, model, state } => {
            model.entries(&mut entries);
            state.entries(&mut entries);
            (Job::Series(Regime::Environment), run)
        }
        Command::Semiclassical { run, model, state, classical } => {
            model.entries(&mut entries);
            state.entries(&mut entries);
            classical.entries(&mut entries, true)?;
            (Job::Series(Regime::Semiclassical), run)
        }
        Command::Poincare { run, model, classical } => {
            model.entries(&mut entries);
            classical.entries(&mut entries, false)?;
            (Job::Poincare, run)
        }
        Command::Lyapunov { run, model, classical } => {
            model.entries(&mut entries);
            classical.entries(&mut entries, false)?;
            (Job::Lyapunov, run)
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.jobs)
        .build()
        .map_err(|e| CliError::config("jobs", e.to_string()))?;
    pool.install(|| execute(job, &run, entries))
}

fn execute(job: Job, run: &RunArgs, flags: Vec<Entry>) -> Result<(), CliError> {
    let regime = job.regime();
    let mut base = match &run.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            parse_ini(&text, regime)?
        }
        None => Vec::new(),
    };
    if let Some(p) = &run.preset {
        base.push(Entry::new("preset", p.as_str()));
    }
    base.extend(flags);
    if run.plots {
        base.push(Entry::new("plots", "true"));
    }

    let batch = base.iter().rev().find(|e| e.key == "preset").is_some_and(|e| e.value == "all");
    if !batch {
        let cfg = resolve(regime, &base)?;
        return run_one(job, cfg, &run.out);
    }
    let names: Vec<&'static str> = presets().into_iter().filter(|p| p.config.regime == regime).map(|p| p.name).collect();
    let results: Vec<Result<(), CliError>> = names
        .par_iter()
        .map(|name| {
            let entries: Vec<Entry> = base
                .iter()
                .map(|e| if e.key == "preset" { Entry::new("preset", *name) } else { e.clone() })
                .collect();
            let cfg = resolve(regime, &entries)?;
            run_one(job, cfg, &run.out.join(name))
        })
        .collect();
    // report the most severe failure
    results.into_iter().filter_map(Result::err).max_by_key(CliError::exit_code).map_or(Ok(()), Err)
}

fn run_one(job: Job, mut cfg: RunConfig, out: &Path) -> Result<(), CliError> {
    match job {
        Job::Poincare => cfg.enable_section(),
        Job::Lyapunov => cfg.enable_lyapunov(),
        Job::Series(_) => {}
    }
    cfg.scenario.validate()?;
    let start = Instant::now();
    let mut dir = OutputDir::create(out)?;
    let summary = match job {
        Job::Series(_) => run_series(&cfg, &mut dir)?,
        Job::Poincare => run_poincare(&cfg, &mut dir)?,
        Job::Lyapunov => run_lyapunov(&cfg, &mut dir)?,
    };
    let seconds = start.elapsed().as_secs_f64();
    dir.write_manifest(&config::format_snapshot(&cfg), seconds)?;
    println!("{}: {summary} -> {} ({seconds:.2} s)", job.name(), dir.root().display());
    Ok(())
}

fn run_series(cfg: &RunConfig, dir: &mut OutputDir) -> Result<String, CliError> {
    let sc = &cfg.scenario;
    let sim = Simulation::new(sc.model())?;
    let result = sim.run(sc)?;
    let series = result.series();
    output::write_series(series, &dir.file("entropy.csv"))?;
    let mut summary = format!("{} points, max delta {:.6}", series.len(), series.max_delta());
    if cfg.plots {
        dir.write("entropy.gp", &output::entropy_plot("entropy.csv", sc.regime.name()))?;
    }
    if let ScenarioOutput::Semiclassical(run) = &result {
        output::write_trajectory(&run.trajectory, &dir.file("trajectory.csv"))?;
        if cfg.plots {
            dir.write("trajectory.gp", &output::trajectory_plot("trajectory.csv"))?;
        }
        if let Some(section) = &run.section {
            output::write_section(section, &dir.file("poincare_0.csv"))?;
            if cfg.plots {
                dir.write("poincare.gp", &output::section_plot(&["poincare_0.csv".to_string()], "section"))?;
            }
        }
        if let Some(l) = run.lyapunov {
            output::write_lyapunov(&[(run.trajectory.states[0], l)], &dir.file("lyapunov.csv"))?;
            summary.push_str(&format!(", lyapunov {l:.4e}"));
        }
    }
    Ok(summary)
}

fn run_poincare(cfg: &RunConfig, dir: &mut OutputDir) -> Result<String, CliError> {
    let points = cfg.scan_points()?;
    let params = cfg.scenario.model();
    let opts = cfg.scenario.classical.section.expect("enabled for poincare runs");
    let sections: Vec<_> = points.par_iter().map(|x| poincare_section(x, &params, &opts)).collect::<Result<_, _>>()?;
    let mut names = Vec::new();
    let mut incomplete = 0;
    for (i, s) in sections.iter().enumerate() {
        let name = format!("poincare_{i}.csv");
        output::write_section(s, &dir.file(&name))?;
        names.push(name);
        incomplete += usize::from(!s.complete);
    }
    if cfg.plots {
        dir.write("poincare.gp", &output::section_plot(&names, "section at p2 = 0"))?;
    }
    let total: usize = sections.iter().map(|s| s.points.len()).sum();
    Ok(format!("{} initial conditions, {total} crossings, {incomplete} incomplete", points.len()))
}

fn run_lyapunov(cfg: &RunConfig, dir: &mut OutputDir) -> Result<String, CliError> {
    let points = cfg.scan_points()?;
    let params = cfg.scenario.model();
    let opts = cfg.scenario.classical.lyapunov.expect("enabled for lyapunov runs");
    let values: Vec<f64> = points.par_iter().map(|x| lyapunov_exponent(x, &params, &opts)).collect::<Result<_, _>>()?;
    let rows: Vec<_> = points.iter().copied().zip(values.iter().copied()).collect();
    output::write_lyapunov(&rows, &dir.file("lyapunov.csv"))?;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(format!("{} initial conditions, largest exponent {max:.4e}", points.len()))
}

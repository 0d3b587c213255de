use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ridge_sketch::baselines::{cg_solve, pcg_solve, PcgConfig};
use ridge_sketch::bench::{
    compare_solvers, default_path, run_path, write_plot_csv, OracleMode, RunOptions, SolverSpec,
};
use ridge_sketch::data::{generate_synthetic, load_csv, load_libsvm, Dataset, SpectrumDecay};
use ridge_sketch::dual::solve_underdetermined;
use ridge_sketch::lab::{run_gaussian_trials, run_srht_trials, Spectrum, TrialConfig};
use ridge_sketch::problem::{direct_solve, prediction_error, Orientation};
use ridge_sketch::sketch::SketchKind;
use ridge_sketch::solver::{adaptive_solve, SolverConfig, SolverMode};
use ridge_sketch::Error;

#[derive(Parser)]
#[command(name = "ridge-sketch", version, about = "Sketched solvers for ridge regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem at a fixed regularizer.
    Solve(SolveArgs),
    /// Solve along a decreasing regularization path with warm starts.
    Path(PathArgs),
    /// Compare solvers over repeated runs.
    Compare(CompareArgs),
    /// Monte Carlo check of eigenvalue concentration bounds.
    Concentration(ConcentrationArgs),
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SketchArg {
    Gaussian,
    Srht,
}

impl From<SketchArg> for SketchKind {
    fn from(s: SketchArg) -> Self {
        match s {
            SketchArg::Gaussian => SketchKind::Gaussian,
            SketchArg::Srht => SketchKind::Srht,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Polyak,
    GradientOnly,
}

impl From<ModeArg> for SolverMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Polyak => SolverMode::PolyakThenGradient,
            ModeArg::GradientOnly => SolverMode::GradientOnly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Adaptive,
    Cg,
    Pcg,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecayArg {
    Exp,
    Poly,
}

impl From<DecayArg> for SpectrumDecay {
    fn from(d: DecayArg) -> Self {
        match d {
            DecayArg::Exp => SpectrumDecay::Exp,
            DecayArg::Poly => SpectrumDecay::Poly,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Dense CSV file, last column is the target.
    #[arg(long, conflicts_with_all = ["libsvm", "synthetic"])]
    csv: Option<PathBuf>,
    /// libsvm text file.
    #[arg(long, conflicts_with = "synthetic")]
    libsvm: Option<PathBuf>,
    /// Synthetic spectrum.
    #[arg(long, value_enum)]
    synthetic: Option<DecayArg>,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 128)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, Error> {
        match (&self.csv, &self.libsvm, self.synthetic) {
            (Some(p), _, _) => load_csv(p),
            (_, Some(p), _) => load_libsvm(p, None),
            (_, _, Some(k)) => generate_synthetic(k.into(), self.n, self.d, self.data_seed),
            _ => Err(Error::InvalidInput(
                "one of --csv, --libsvm or --synthetic is required".into(),
            )),
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "srht")]
    sketch: SketchArg,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    #[arg(long, default_value_t = 1e-10)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    m_initial: usize,
    #[arg(long, value_enum, default_value = "polyak")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Accept Gaussian rho/eta outside the range the bounds are stated for.
    #[arg(long)]
    allow_out_of_range: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            rho: self.rho,
            eta: self.eta,
            sketch_kind: self.sketch.into(),
            m_initial: self.m_initial,
            eps: self.eps,
            max_iters: self.max_iters,
            mode: self.mode.into(),
            seed: self.seed,
            permissive: self.allow_out_of_range,
            ..SolverConfig::default()
        }
    }

    fn spec(&self, solver: SolverArg) -> SolverSpec {
        match solver {
            SolverArg::Adaptive => SolverSpec::Adaptive {
                kind: self.sketch.into(),
                mode: self.mode.into(),
                rho: self.rho,
                eta: self.eta,
                m_initial: self.m_initial,
            },
            SolverArg::Cg => SolverSpec::Cg,
            SolverArg::Pcg => SolverSpec::Pcg {
                kind: self.sketch.into(),
                rho: self.rho,
            },
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value = "adaptive")]
    method: SolverArg,
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    /// Report the exact solution and the error of the returned point.
    #[arg(long)]
    oracle: bool,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value = "adaptive")]
    method: SolverArg,
    /// Comma-separated, strictly decreasing regularizers.
    #[arg(long, value_delimiter = ',')]
    nus: Option<Vec<f64>>,
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 1e-10)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, value_delimiter = ',')]
    nus: Option<Vec<f64>>,
    /// Comma-separated solver labels: adaptive-srht, adaptive-gaussian,
    /// adaptive-gd-srht, adaptive-gd-gaussian, cg, pcg-srht, pcg-gaussian.
    #[arg(long, value_delimiter = ',', default_value = "adaptive-srht,adaptive-gd-srht,cg,pcg-srht")]
    solvers: Vec<String>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot-data CSV path.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumArg {
    Exp,
    Poly,
    Flat,
    Step,
}

#[derive(Args)]
struct ConcentrationArgs {
    #[arg(long, value_enum, default_value = "exp")]
    spectrum: SpectrumArg,
    #[arg(long, default_value_t = 64)]
    d: usize,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    /// Number of leading unit singular values for the step spectrum.
    #[arg(long, default_value_t = 16)]
    high_count: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    sketch: SketchArg,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the prescribed sketch size.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "exp")]
    kind: DecayArg,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 128)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(Error),
    NotConverged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Error> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn parse_solver(label: &str, rho: f64) -> Result<SolverSpec, Error> {
    let (kind, rest) = if let Some(r) = label.strip_suffix("-srht") {
        (SketchKind::Srht, r)
    } else if let Some(r) = label.strip_suffix("-gaussian") {
        (SketchKind::Gaussian, r)
    } else if label == "cg" {
        return Ok(SolverSpec::Cg);
    } else {
        return Err(Error::InvalidInput(format!("unknown solver {label:?}")));
    };
    match rest {
        "adaptive" => Ok(SolverSpec::adaptive(kind, SolverMode::PolyakThenGradient, rho)),
        "adaptive-gd" => Ok(SolverSpec::adaptive(kind, SolverMode::GradientOnly, rho)),
        "pcg" => Ok(SolverSpec::Pcg { kind, rho }),
        _ => Err(Error::InvalidInput(format!("unknown solver {label:?}"))),
    }
}

#[derive(Serialize)]
struct SolveOutput<T: Serialize> {
    provenance: String,
    nu: f64,
    converged: bool,
    report: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleDiagnostics>,
}

#[derive(Serialize)]
struct OracleDiagnostics {
    prediction_error: f64,
    relative_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    effective_dimension: Option<f64>,
}

fn run_solve(args: &SolveArgs) -> Result<(), Failure> {
    let ds = args.data.load()?;
    let p = ds.to_problem(args.nu)?;
    let cfg = args.solver.config();
    let tol = cfg.eps.sqrt();
    let (x, converged, report) = match (args.method, p.orientation()) {
        (SolverArg::Adaptive, Orientation::Overdetermined) => {
            let rep = adaptive_solve(&p, &cfg)?;
            (rep.x.clone(), rep.converged, serde_json::to_value(&rep))
        }
        (SolverArg::Adaptive, Orientation::Underdetermined) => {
            let rep = solve_underdetermined(&p, &cfg)?;
            (rep.x.clone(), rep.dual.converged, serde_json::to_value(&rep))
        }
        (SolverArg::Cg, _) => {
            let rep = cg_solve(&p, tol, cfg.max_iters, None)?;
            (rep.x.clone(), rep.converged, serde_json::to_value(&rep))
        }
        (SolverArg::Pcg, _) => {
            let pc = PcgConfig {
                kind: cfg.sketch_kind,
                rho: cfg.rho,
                seed: cfg.seed,
                m: None,
            };
            let rep = pcg_solve(&p, &pc, tol, cfg.max_iters, None)?;
            (rep.x.clone(), rep.converged, serde_json::to_value(&rep))
        }
    };
    let report = report.map_err(|e| Error::Io(e.to_string()))?;
    let oracle = if args.oracle {
        let xs = direct_solve(&p)?;
        let err = prediction_error(&p, &x, &xs)?;
        let scale = prediction_error(&p, &nalgebra::DVector::zeros(p.d()), &xs)?;
        Some(OracleDiagnostics {
            prediction_error: err,
            relative_error: if scale > 0.0 { (err / scale).sqrt() } else { 0.0 },
            effective_dimension: p.oracle().ok().map(|o| o.d_eff()),
        })
    } else {
        None
    };
    emit(
        &SolveOutput {
            provenance: ds.meta.provenance.clone(),
            nu: args.nu,
            converged,
            report,
            oracle,
        },
        args.out.as_deref(),
    )?;
    if converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn oracle_mode(on: bool) -> OracleMode {
    if on {
        OracleMode::Record
    } else {
        OracleMode::Off
    }
}

fn run_path_cmd(args: &PathArgs) -> Result<(), Failure> {
    let ds = args.data.load()?;
    let nus = args.nus.clone().unwrap_or_else(|| default_path(ds.source));
    let cfg = args.solver.config();
    cfg.validate()?;
    cfg.tuning()?;
    let opts = RunOptions {
        eps: cfg.eps,
        seed: cfg.seed,
        max_iters: cfg.max_iters,
        oracle: oracle_mode(args.oracle),
        warm_start: true,
        permissive: cfg.permissive,
    };
    let res = run_path(&ds, &nus, &args.solver.spec(args.method), &opts)?;
    emit(&res, args.out.as_deref())?;
    if res.all_converged() {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn run_compare(args: &CompareArgs) -> Result<(), Failure> {
    let ds = args.data.load()?;
    let nus = args.nus.clone().unwrap_or_else(|| default_path(ds.source));
    let specs = args
        .solvers
        .iter()
        .map(|s| parse_solver(s.trim(), args.rho))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = RunOptions {
        eps: args.eps,
        seed: args.seed,
        max_iters: args.max_iters,
        oracle: oracle_mode(args.oracle),
        warm_start: true,
        permissive: false,
    };
    let rep = compare_solvers(&ds, &nus, &specs, &opts, args.repeats)?;
    emit(&rep, args.out.as_deref())?;
    if let Some(p) = &args.plot {
        write_plot_csv(&rep, BufWriter::new(File::create(p).map_err(Error::from)?))?;
    }
    if rep.any_failure() {
        Err(Failure::NotConverged)
    } else {
        Ok(())
    }
}

fn run_concentration(args: &ConcentrationArgs) -> Result<(), Failure> {
    let spectrum = match args.spectrum {
        SpectrumArg::Exp => Spectrum::Exponential { d: args.d },
        SpectrumArg::Poly => Spectrum::Polynomial { d: args.d },
        SpectrumArg::Flat => Spectrum::Flat { d: args.d, value: 1.0 },
        SpectrumArg::Step => Spectrum::StepTop {
            d: args.d,
            high_count: args.high_count,
            high: 1.0,
            low: 1e-3,
        },
    };
    let cfg = TrialConfig {
        spectrum,
        n: args.n,
        nu: args.nu,
        kind: args.sketch.into(),
        rho: args.rho,
        eta: args.eta,
        trials: args.trials,
        base_seed: args.seed,
        basis_seed: args.seed,
        m: args.m,
    };
    let rep = match cfg.kind {
        SketchKind::Gaussian => run_gaussian_trials(&cfg)?,
        SketchKind::Srht => run_srht_trials(&cfg)?,
    };
    emit(&rep, args.out.as_deref())?;
    Ok(())
}

fn run_synth(args: &SynthArgs) -> Result<(), Failure> {
    let ds = generate_synthetic(args.kind.into(), args.n, args.d, args.seed)?;
    let w = output(args.out.as_deref())?;
    let mut w = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    for i in 0..ds.meta.n {
        let mut row: Vec<String> = ds.a.row(i).iter().map(|v| format!("{v:e}")).collect();
        row.push(format!("{:e}", ds.b[i]));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Path(a) => run_path_cmd(a),
        Command::Compare(a) => run_compare(a),
        Command::Concentration(a) => run_concentration(a),
        Command::Synth(a) => run_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged) => {
            eprintln!("ridge-sketch: did not converge");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("ridge-sketch: {e}");
            ExitCode::from(2)
        }
    }
}

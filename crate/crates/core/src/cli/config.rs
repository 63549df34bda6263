use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::axisym::AxisymConfig;
use crate::constants::{Constants, ProblemParams};
use crate::error::{Error, Result};
use crate::quadrature::GridSpec;
use crate::radial::SolverConfig;

#[derive(Debug, Parser)]
#[command(
    name = "qcurv",
    version,
    about = "Solvers for constant Q-curvature metrics with a conical singularity",
    subcommand_required = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the radial problem at one value of Λ.
    #[command(allow_negative_numbers = true)]
    SolveRadial(CommonArgs),
    /// Continuation in Λ toward the radial threshold, then blow-up extraction.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated fractions of Λ_1(1+α), strictly increasing.
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        /// Smallest final peak w(0) accepted for the blow-up extraction.
        #[arg(long)]
        min_peak: Option<f64>,
    },
    /// Solve the axially symmetric problem with the tilt term.
    #[command(allow_negative_numbers = true)]
    SolveAxisym {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        polar_nodes: Option<usize>,
        #[arg(long)]
        l_max: Option<usize>,
        /// Drop the `v* x_1` term (recovers the radial problem).
        #[arg(long)]
        no_tilt: bool,
    },
    /// Radial solve followed by the Pohozaev balance check.
    #[command(allow_negative_numbers = true)]
    PohoCheck(CommonArgs),
    /// Radial solve followed by the far-field slope and lower-bound checks.
    #[command(allow_negative_numbers = true)]
    Asymptotics(CommonArgs),
    /// Closed-form planar solutions.
    #[command(allow_negative_numbers = true)]
    Oracle2d {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        lambda_scale: Option<f64>,
        #[arg(long)]
        zeta_re: Option<f64>,
        #[arg(long)]
        zeta_im: Option<f64>,
    },
    /// Solve from scratch on a grid of Λ values straddling Λ_1(1+α).
    #[command(allow_negative_numbers = true)]
    ThresholdScan {
        #[command(flatten)]
        common: CommonArgs,
        /// Lowest fraction of Λ_1(1+α).
        #[arg(long)]
        scan_lo: Option<f64>,
        #[arg(long)]
        scan_hi: Option<f64>,
        #[arg(long)]
        scan_step: Option<f64>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Absolute total curvature Λ.
    #[arg(long, group = "lambda_spec")]
    pub lambda: Option<f64>,
    /// Λ as a fraction of Λ_1(1+α).
    #[arg(long, group = "lambda_spec")]
    pub lambda_frac: Option<f64>,
    /// Λ as a fraction of Λ_1.
    #[arg(long, group = "lambda_spec")]
    pub lambda_frac_l1: Option<f64>,
    /// Gaussian rate in the weight `e^{-μ|x|²}` (default n).
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub grading: Option<f64>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub ceiling: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for assembled kernel matrices.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    SolveRadial,
    Sweep,
    SolveAxisym,
    PohoCheck,
    Asymptotics,
    Oracle2d,
    ThresholdScan,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::SolveRadial => "solve-radial",
            CommandKind::Sweep => "sweep",
            CommandKind::SolveAxisym => "solve-axisym",
            CommandKind::PohoCheck => "poho-check",
            CommandKind::Asymptotics => "asymptotics",
            CommandKind::Oracle2d => "oracle2d",
            CommandKind::ThresholdScan => "threshold-scan",
        }
    }

    /// Commands that need a single Λ.
    fn needs_lambda(self) -> bool {
        matches!(self, CommandKind::SolveRadial | CommandKind::SolveAxisym | CommandKind::PohoCheck | CommandKind::Asymptotics)
    }
}

// ---- config file ----

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    problem: FileProblem,
    #[serde(default)]
    grid: FileGrid,
    #[serde(default)]
    solver: FileSolver,
    #[serde(default)]
    output: FileOutput,
    #[serde(default)]
    sweep: FileSweep,
    #[serde(default)]
    scan: FileScan,
    #[serde(default)]
    axisym: FileAxisym,
    #[serde(default)]
    oracle: FileOracle,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileProblem {
    n: Option<u32>,
    alpha: Option<f64>,
    lambda: Option<f64>,
    lambda_frac: Option<f64>,
    lambda_frac_l1: Option<f64>,
    mu: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGrid {
    nodes: Option<usize>,
    r_max: Option<f64>,
    grading: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSolver {
    damping: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    ceiling: Option<f64>,
    resolution_guard: Option<bool>,
    recovery: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOutput {
    dir: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSweep {
    fractions: Option<Vec<f64>>,
    min_peak: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileScan {
    lo: Option<f64>,
    hi: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileAxisym {
    polar_nodes: Option<usize>,
    l_max: Option<usize>,
    tilt: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOracle {
    lambda_scale: Option<f64>,
    zeta_re: Option<f64>,
    zeta_im: Option<f64>,
}

fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

// ---- resolution with provenance ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Default,
    Config,
    Flag,
}

/// One resolved key and where its value came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub value: serde_json::Value,
    pub source: Source,
}

#[derive(Default)]
struct Resolver {
    echo: BTreeMap<String, Setting>,
}

impl Resolver {
    fn record<T: Serialize>(&mut self, key: &str, value: &T, source: Source) {
        let value = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.echo.insert(key.to_string(), Setting { value, source });
    }

    fn pick<T: Serialize>(&mut self, key: &str, flag: Option<T>, file: Option<T>, default: T) -> T {
        let (v, s) = match (flag, file) {
            (Some(f), _) => (f, Source::Flag),
            (None, Some(c)) => (c, Source::Config),
            (None, None) => (default, Source::Default),
        };
        self.record(key, &v, s);
        v
    }

    fn pick_opt<T: Serialize>(&mut self, key: &str, flag: Option<T>, file: Option<T>) -> Option<T> {
        let (v, s) = match (flag, file) {
            (Some(f), _) => (Some(f), Source::Flag),
            (None, Some(c)) => (Some(c), Source::Config),
            (None, None) => (None, Source::Default),
        };
        self.record(key, &v, s);
        v
    }
}

/// How Λ was requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum LambdaSpec {
    Absolute(f64),
    /// Fraction of Λ_1(1+α).
    Fraction(f64),
    /// Fraction of Λ_1.
    FractionOfL1(f64),
}

impl LambdaSpec {
    fn from_parts(lambda: Option<f64>, frac: Option<f64>, frac_l1: Option<f64>) -> Result<Option<Self>> {
        match (lambda, frac, frac_l1) {
            (None, None, None) => Ok(None),
            (Some(l), None, None) => Ok(Some(LambdaSpec::Absolute(l))),
            (None, Some(f), None) => Ok(Some(LambdaSpec::Fraction(f))),
            (None, None, Some(f)) => Ok(Some(LambdaSpec::FractionOfL1(f))),
            _ => Err(Error::Usage("give at most one of lambda, lambda_frac, lambda_frac_l1".into())),
        }
    }

    pub fn resolve(self, consts: &Constants, alpha: f64) -> f64 {
        match self {
            LambdaSpec::Absolute(l) => l,
            LambdaSpec::Fraction(f) => f * consts.critical_lambda(alpha),
            LambdaSpec::FractionOfL1(f) => f * consts.lambda_1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub lambda_scale: f64,
    pub zeta: (f64, f64),
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: ProblemParams,
    pub lambda_spec: Option<LambdaSpec>,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub sweep_fractions: Vec<f64>,
    pub min_peak: f64,
    pub scan: ScanSpec,
    pub axisym: AxisymConfig,
    pub oracle: OracleSpec,
    /// Every resolved key with its source.
    pub echo: BTreeMap<String, Setting>,
}

struct Extra {
    fractions: Option<Vec<f64>>,
    min_peak: Option<f64>,
    polar_nodes: Option<usize>,
    l_max: Option<usize>,
    tilt: Option<bool>,
    lambda_scale: Option<f64>,
    zeta_re: Option<f64>,
    zeta_im: Option<f64>,
    scan_lo: Option<f64>,
    scan_hi: Option<f64>,
    scan_step: Option<f64>,
}

impl Extra {
    fn none() -> Self {
        Self {
            fractions: None,
            min_peak: None,
            polar_nodes: None,
            l_max: None,
            tilt: None,
            lambda_scale: None,
            zeta_re: None,
            zeta_im: None,
            scan_lo: None,
            scan_hi: None,
            scan_step: None,
        }
    }
}

/// Parse argv (including the program name) into a validated configuration.
pub fn parse_and_validate<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.to_string()))?;
    resolve(cli.command)
}

pub fn resolve(command: Command) -> Result<RunConfig> {
    let mut extra = Extra::none();
    let (kind, common) = match command {
        Command::SolveRadial(c) => (CommandKind::SolveRadial, c),
        Command::PohoCheck(c) => (CommandKind::PohoCheck, c),
        Command::Asymptotics(c) => (CommandKind::Asymptotics, c),
        Command::Sweep { common, fractions, min_peak } => {
            extra.fractions = fractions;
            extra.min_peak = min_peak;
            (CommandKind::Sweep, common)
        }
        Command::SolveAxisym { common, polar_nodes, l_max, no_tilt } => {
            extra.polar_nodes = polar_nodes;
            extra.l_max = l_max;
            extra.tilt = no_tilt.then_some(false);
            (CommandKind::SolveAxisym, common)
        }
        Command::Oracle2d { common, lambda_scale, zeta_re, zeta_im } => {
            extra.lambda_scale = lambda_scale;
            extra.zeta_re = zeta_re;
            extra.zeta_im = zeta_im;
            (CommandKind::Oracle2d, common)
        }
        Command::ThresholdScan { common, scan_lo, scan_hi, scan_step } => {
            extra.scan_lo = scan_lo;
            extra.scan_hi = scan_hi;
            extra.scan_step = scan_step;
            (CommandKind::ThresholdScan, common)
        }
    };
    let file = match &common.config {
        Some(p) => read_file_config(p)?,
        None => FileConfig::default(),
    };
    build(kind, &common, extra, file)
}

fn build(kind: CommandKind, a: &CommonArgs, x: Extra, f: FileConfig) -> Result<RunConfig> {
    let mut r = Resolver::default();
    r.record("command", &kind.name(), Source::Flag);

    // problem
    let default_n = if kind == CommandKind::Oracle2d { 2 } else { 3 };
    let n = r.pick("problem.n", a.n, f.problem.n, default_n);
    if kind == CommandKind::Oracle2d && n != 2 {
        return Err(Error::Usage(format!("oracle2d is planar, got n = {n}")));
    }
    let alpha = r.pick("problem.alpha", a.alpha, f.problem.alpha, 0.0);
    let consts = Constants::new(n).map_err(|e| Error::Usage(e.to_string()))?;
    if !(alpha > -1.0) {
        return Err(Error::Usage(format!("alpha must be > -1, got {alpha}")));
    }
    let flag_spec = LambdaSpec::from_parts(a.lambda, a.lambda_frac, a.lambda_frac_l1)?;
    let file_spec = LambdaSpec::from_parts(f.problem.lambda, f.problem.lambda_frac, f.problem.lambda_frac_l1)?;
    let lambda_spec = r.pick_opt("problem.lambda_spec", flag_spec, file_spec);
    let lambda = match (lambda_spec, kind) {
        (Some(s), _) => s.resolve(&consts, alpha),
        (None, CommandKind::Oracle2d) => 4.0 * std::f64::consts::PI * (1.0 + alpha),
        (None, k) if k.needs_lambda() => {
            return Err(Error::Usage(format!("{} needs one of --lambda, --lambda-frac, --lambda-frac-l1", k.name())));
        }
        // placeholder for list-driven commands; every solve sets its own Λ
        (None, _) => 0.5 * consts.critical_lambda(alpha),
    };
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Usage(format!("Λ must be positive, got {lambda}")));
    }
    let default_mu = if kind == CommandKind::Oracle2d { 0.0 } else { n as f64 };
    let mu = r.pick("problem.mu", a.mu, f.problem.mu, default_mu);
    let params = ProblemParams::with_mu(n, alpha, lambda, mu).map_err(|e| Error::Usage(e.to_string()))?;
    let lambda_source = r.echo["problem.lambda_spec"].source;
    r.record("problem.lambda", &lambda, lambda_source);

    // grid
    let default_nodes = if kind == CommandKind::SolveAxisym { 128 } else { 512 };
    let grid = GridSpec {
        nodes: r.pick("grid.nodes", a.nodes, f.grid.nodes, default_nodes),
        r_max: r.pick_opt("grid.r_max", a.r_max, f.grid.r_max),
        grading: r.pick_opt("grid.grading", a.grading, f.grid.grading),
    };

    // solver
    let d = SolverConfig::default();
    let solver = SolverConfig {
        damping: r.pick("solver.damping", a.damping, f.solver.damping, d.damping),
        tol: r.pick("solver.tol", a.tol, f.solver.tol, d.tol),
        max_iter: r.pick("solver.max_iter", a.max_iter, f.solver.max_iter, d.max_iter),
        ceiling: r.pick("solver.ceiling", a.ceiling, f.solver.ceiling, d.ceiling),
        resolution_guard: r.pick("solver.resolution_guard", None, f.solver.resolution_guard, d.resolution_guard),
        recovery: r.pick("solver.recovery", None, f.solver.recovery, d.recovery),
    };
    solver.validate().map_err(|e| Error::Usage(e.to_string()))?;

    // output
    let out_dir = r.pick("output.dir", a.out.clone(), f.output.dir, PathBuf::from("out"));
    let cache_dir = r.pick_opt("output.cache_dir", a.cache_dir.clone(), f.output.cache_dir);

    let sweep_fractions = r.pick("sweep.fractions", x.fractions, f.sweep.fractions, vec![0.9, 0.99, 0.999]);
    let min_peak = r.pick("sweep.min_peak", x.min_peak, f.sweep.min_peak, 0.0);
    let scan = ScanSpec {
        lo: r.pick("scan.lo", x.scan_lo, f.scan.lo, 0.90),
        hi: r.pick("scan.hi", x.scan_hi, f.scan.hi, 1.10),
        step: r.pick("scan.step", x.scan_step, f.scan.step, 0.02),
    };
    let da = AxisymConfig::default();
    let axisym = AxisymConfig {
        polar_nodes: r.pick("axisym.polar_nodes", x.polar_nodes, f.axisym.polar_nodes, da.polar_nodes),
        l_max: r.pick_opt("axisym.l_max", x.l_max, f.axisym.l_max),
        tilt: r.pick("axisym.tilt", x.tilt, f.axisym.tilt, da.tilt),
    };
    let oracle = OracleSpec {
        lambda_scale: r.pick("oracle.lambda_scale", x.lambda_scale, f.oracle.lambda_scale, 1.0),
        zeta: (
            r.pick("oracle.zeta_re", x.zeta_re, f.oracle.zeta_re, 0.0),
            r.pick("oracle.zeta_im", x.zeta_im, f.oracle.zeta_im, 0.0),
        ),
    };

    let cfg = RunConfig {
        command: kind,
        params,
        lambda_spec,
        grid,
        solver,
        out_dir,
        cache_dir,
        sweep_fractions,
        min_peak,
        scan,
        axisym,
        oracle,
        echo: r.echo,
    };
    cfg.check_command_specific()?;
    Ok(cfg)
}

impl RunConfig {
    fn check_command_specific(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        match self.command {
            CommandKind::Sweep => {
                let f = &self.sweep_fractions;
                if f.is_empty() || f.windows(2).any(|w| !(w[1] > w[0])) || f.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
                    return usage(format!("sweep fractions must be strictly increasing in (0, 1), got {f:?}"));
                }
            }
            CommandKind::ThresholdScan => {
                let s = self.scan;
                if !(s.lo > 0.0 && s.hi > s.lo && s.step > 0.0) {
                    return usage(format!("scan needs 0 < lo < hi and step > 0, got {s:?}"));
                }
            }
            CommandKind::SolveAxisym => {
                if self.axisym.polar_nodes < 2 {
                    return usage("axisym needs at least two polar nodes".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Λ values of a sweep or scan.
    pub fn lambda_list(&self) -> Vec<f64> {
        let crit = self.params.constants().critical_lambda(self.params.alpha);
        match self.command {
            CommandKind::Sweep => self.sweep_fractions.iter().map(|f| f * crit).collect(),
            CommandKind::ThresholdScan => {
                crate::diagnostics::scan_fractions(self.scan.lo, self.scan.hi, self.scan.step).iter().map(|f| f * crit).collect()
            }
            _ => vec![self.params.lambda],
        }
    }
}

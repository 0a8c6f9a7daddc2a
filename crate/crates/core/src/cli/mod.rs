//! Command-line surface: scenario ingestion, risk and hull evaluation, and
//! the verification suite.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 numerical
//! non-convergence, 3 a reported check failed.

mod commands;
pub mod report;
pub mod scenario;
mod verify;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::RiskError;
use crate::hulls::{HullMode, RiskDescriptor};
use crate::utility::Utility;

pub use commands::{cmd_hull, cmd_oce};
pub use report::{Report, Status};
pub use scenario::Scenario;
pub use verify::cmd_verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Io(String),
    Parse { line: u64, message: String },
    Risk(RiskError),
}

impl CliError {
    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        CliError::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Risk(e) if e.is_numerical() => EXIT_NONCONVERGENCE,
            _ => EXIT_VALIDATION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            CliError::Risk(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<RiskError> for CliError {
    fn from(e: RiskError) -> Self {
        CliError::Risk(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "oce-risk", version, about = "Optimized certainty equivalent risk measures and risk hulls on scenario data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Risk value, minimizer, conjugate and subdifferential of an OCE measure.
    Oce(OceArgs),
    /// Primal and dual value of a monotone and/or invariant risk hull.
    Hull(HullArgs),
    /// Run the invariant suite on a scenario file or on random instances.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario CSV with header `probability,value[,...]`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Value column to use (default: the first one).
    #[arg(long)]
    pub column: Option<String>,
    /// Relative duality gap tolerance.
    #[arg(long, default_value_t = 1e-4)]
    pub tol_gap: f64,
    /// Tolerance of the Fenchel equality test.
    #[arg(long, default_value_t = 1e-7)]
    pub tol_fenchel: f64,
    /// Tolerance of the axiom checks.
    #[arg(long, default_value_t = 1e-7)]
    pub tol_axiom: f64,
    /// Tolerance of closed-form identities.
    #[arg(long, default_value_t = 1e-9)]
    pub tol_identity: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the text report here and the key/value report next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UtilityChoice {
    TwoSlope,
    Exponential,
    WorstCase,
    Pwl,
    Cvar,
    Entropic,
}

#[derive(Debug, Clone, Args)]
pub struct OceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = UtilityChoice::Exponential)]
    pub utility: UtilityChoice,
    /// Slope for t > 0 of the two-slope utility, in (-1, 0].
    #[arg(long, allow_hyphen_values = true)]
    pub gamma1: Option<f64>,
    /// Slope for t <= 0 of the two-slope utility, below -1.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma2: Option<f64>,
    /// CVaR level in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    /// Breakpoints of a piecewise-linear utility, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub breaks: Vec<f64>,
    /// Slopes of a piecewise-linear utility, one more than breakpoints.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub slopes: Vec<f64>,
    /// Dual point at which to evaluate the conjugate and test membership.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xstar: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DescChoice {
    LpDeviation,
    LpSemiDeviation,
    MeanLp,
    LpSemiMoment,
    Exponential,
    Logarithmic,
    InfDeviation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    Combined,
    Monotone,
    Invariant,
}

impl From<ModeChoice> for HullMode {
    fn from(m: ModeChoice) -> Self {
        match m {
            ModeChoice::Combined => HullMode::Combined,
            ModeChoice::Monotone => HullMode::Monotone,
            ModeChoice::Invariant => HullMode::Invariant,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NumeraireSource {
    Constant(f64),
    Column(String),
}

impl FromStr for NumeraireSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "const" {
            return Ok(NumeraireSource::Constant(1.0));
        }
        if let Some(c) = s.strip_prefix("const:") {
            let v: f64 = c.parse().map_err(|_| format!("`{c}` is not a number"))?;
            if !v.is_finite() || v == 0.0 {
                return Err("constant numeraire must be finite and nonzero".into());
            }
            return Ok(NumeraireSource::Constant(v));
        }
        if let Some(name) = s.strip_prefix("column:") {
            if name.is_empty() {
                return Err("empty column name".into());
            }
            return Ok(NumeraireSource::Column(name.to_string()));
        }
        Err(format!("expected const, const:<c> or column:<name>, got `{s}`"))
    }
}

impl fmt::Display for NumeraireSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumeraireSource::Constant(c) => write!(f, "const:{c:?}"),
            NumeraireSource::Column(n) => write!(f, "column:{n}"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct HullArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub desc: DescChoice,
    /// Norm exponent in [1, inf] (default 2; inf for inf-deviation).
    #[arg(long)]
    pub p: Option<f64>,
    /// Scale parameter (default 0.5; 2 for lp-semi-deviation, which needs c > 1).
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeChoice::Combined)]
    pub mode: ModeChoice,
    /// `const`, `const:<c>` or `column:<name>`.
    #[arg(long, default_value = "const")]
    pub numeraire: NumeraireSource,
    /// Random restarts of the dual ascent.
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Atoms per random instance when no input file is given.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Number of random instances when no input file is given.
    #[arg(long, default_value_t = 3)]
    pub instances: usize,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
}

fn common_args(c: &CommonArgs) -> Vec<String> {
    let mut a = Vec::new();
    if let Some(p) = &c.input {
        a.extend(["--input".to_string(), p.display().to_string()]);
    }
    if let Some(col) = &c.column {
        a.extend(["--column".to_string(), col.clone()]);
    }
    for (flag, v) in [
        ("--tol-gap", c.tol_gap),
        ("--tol-fenchel", c.tol_fenchel),
        ("--tol-axiom", c.tol_axiom),
        ("--tol-identity", c.tol_identity),
    ] {
        a.extend([flag.to_string(), format!("{v:?}")]);
    }
    a.extend(["--seed".to_string(), c.seed.to_string()]);
    a
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Oce(a) => &a.common,
            Command::Hull(a) => &a.common,
            Command::Verify(a) => &a.common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Oce(_) => "oce",
            Command::Hull(_) => "hull",
            Command::Verify(_) => "verify",
        }
    }

    /// Arguments that reproduce this run (without `--out`).
    pub fn to_args(&self) -> Vec<String> {
        let mut a = vec![self.name().to_string()];
        a.extend(common_args(self.common()));
        match self {
            Command::Oce(o) => {
                a.extend(["--utility".to_string(), value_name(&o.utility)]);
                if let Some(g) = o.gamma1 {
                    a.push(format!("--gamma1={g:?}"));
                }
                if let Some(g) = o.gamma2 {
                    a.push(format!("--gamma2={g:?}"));
                }
                a.extend(["--beta".to_string(), format!("{:?}", o.beta)]);
                if !o.breaks.is_empty() {
                    a.push(format!("--breaks={}", join(&o.breaks)));
                }
                if !o.slopes.is_empty() {
                    a.push(format!("--slopes={}", join(&o.slopes)));
                }
                if let Some(x) = &o.xstar {
                    a.push(format!("--xstar={}", join(x)));
                }
            }
            Command::Hull(h) => {
                a.extend(["--desc".to_string(), value_name(&h.desc)]);
                if let Some(p) = h.p {
                    a.extend(["--p".to_string(), format!("{p:?}")]);
                }
                if let Some(c) = h.c {
                    a.extend(["--c".to_string(), format!("{c:?}")]);
                }
                a.extend(["--mode".to_string(), value_name(&h.mode)]);
                a.extend(["--numeraire".to_string(), h.numeraire.to_string()]);
                a.extend(["--restarts".to_string(), h.restarts.to_string()]);
            }
            Command::Verify(v) => {
                a.extend(["--n".to_string(), v.n.to_string()]);
                a.extend(["--instances".to_string(), v.instances.to_string()]);
                a.extend(["--restarts".to_string(), v.restarts.to_string()]);
            }
        }
        a
    }
}

impl OceArgs {
    pub fn utility(&self) -> Result<Utility, CliError> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::Usage(format!("--utility two-slope needs --{name}")))
        };
        Ok(match self.utility {
            UtilityChoice::TwoSlope => Utility::two_slope(need(self.gamma1, "gamma1")?, need(self.gamma2, "gamma2")?)?,
            UtilityChoice::Exponential | UtilityChoice::Entropic => Utility::Exponential,
            UtilityChoice::WorstCase => Utility::IndicatorNonneg,
            UtilityChoice::Cvar => Utility::cvar(self.beta)?,
            UtilityChoice::Pwl => Utility::piecewise_linear(self.breaks.clone(), self.slopes.clone())?,
        })
    }
}

impl HullArgs {
    pub fn descriptor(&self) -> Result<RiskDescriptor, CliError> {
        let p = self.p.unwrap_or(2.0);
        let c = self.c.unwrap_or(0.5);
        Ok(match self.desc {
            DescChoice::LpDeviation => RiskDescriptor::lp_deviation(p, c)?,
            DescChoice::LpSemiDeviation => RiskDescriptor::lp_semi_deviation(p, self.c.unwrap_or(2.0))?,
            DescChoice::MeanLp => RiskDescriptor::mean_lp(p, c)?,
            DescChoice::LpSemiMoment => RiskDescriptor::lp_semi_moment(p, c)?,
            DescChoice::Exponential => RiskDescriptor::Exponential,
            DescChoice::Logarithmic => RiskDescriptor::Logarithmic,
            DescChoice::InfDeviation => RiskDescriptor::inf_deviation(self.p.unwrap_or(f64::INFINITY))?,
        })
    }
}

pub(crate) fn load_scenario(common: &CommonArgs) -> Result<Scenario, CliError> {
    match &common.input {
        Some(path) => Scenario::from_path(path),
        None => Err(CliError::Usage("--input is required".into())),
    }
}

fn echo_config(report: &mut Report, cmd: &Command) {
    report.config.push(("command".into(), cmd.name().into()));
    report.config.push(("args".into(), cmd.to_args().join(" ")));
}

/// Runs one command and returns its report.
pub fn run(cmd: &Command) -> Result<Report, CliError> {
    let c = cmd.common();
    for (name, t) in [
        ("tol-gap", c.tol_gap),
        ("tol-fenchel", c.tol_fenchel),
        ("tol-axiom", c.tol_axiom),
        ("tol-identity", c.tol_identity),
    ] {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Usage(format!("--{name} must be positive and finite")));
        }
    }
    let mut report = match cmd {
        Command::Oce(a) => cmd_oce(a)?,
        Command::Hull(a) => cmd_hull(a)?,
        Command::Verify(a) => cmd_verify(a)?,
    };
    echo_config(&mut report, cmd);
    Ok(report)
}

fn write_outputs(report: &Report, out: &std::path::Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", out.display()));
    std::fs::write(out, report.to_text()).map_err(io)?;
    let kv = kv_path(out);
    std::fs::write(&kv, report.to_kv()).map_err(|e| CliError::Io(format!("{}: {e}", kv.display())))
}

/// Location of the key/value report written next to the text report.
pub fn kv_path(out: &std::path::Path) -> PathBuf {
    let kv = out.with_extension("tsv");
    if kv == out {
        let mut s = out.as_os_str().to_owned();
        s.push(".kv.tsv");
        PathBuf::from(s)
    } else {
        kv
    }
}

/// Parses arguments, runs the command, prints the report and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(report) => {
            print!("{}", report.to_text());
            if let Some(out) = &cli.command.common().out {
                if let Err(e) = write_outputs(&report, out) {
                    eprintln!("oce-risk: {e}");
                    return e.exit_code();
                }
            }
            match report.status() {
                Status::Ok => EXIT_OK,
                Status::ChecksFailed => EXIT_CHECK_FAILED,
                Status::NonConvergence => EXIT_NONCONVERGENCE,
            }
        }
        Err(e) => {
            eprintln!("oce-risk: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeraire_parsing() {
        assert_eq!("const".parse::<NumeraireSource>().unwrap(), NumeraireSource::Constant(1.0));
        assert_eq!("const:2.5".parse::<NumeraireSource>().unwrap(), NumeraireSource::Constant(2.5));
        assert_eq!(
            "column:pi".parse::<NumeraireSource>().unwrap(),
            NumeraireSource::Column("pi".into())
        );
        assert!("const:0".parse::<NumeraireSource>().is_err());
        assert!("pi".parse::<NumeraireSource>().is_err());
    }

    #[test]
    fn echoed_args_parse_back_to_the_same_command() {
        let line = [
            "oce-risk", "oce", "--input", "a.csv", "--utility", "pwl", "--breaks", "-1,0", "--slopes", "-3,-1,0",
            "--xstar", "-0.5,-1.5",
        ];
        let cli = Cli::try_parse_from(line).unwrap();
        let again = Cli::try_parse_from(std::iter::once("oce-risk".to_string()).chain(cli.command.to_args())).unwrap();
        assert_eq!(cli.command.to_args(), again.command.to_args());
        match again.command {
            Command::Oce(o) => {
                assert_eq!(o.slopes, vec![-3.0, -1.0, 0.0]);
                assert_eq!(o.xstar, Some(vec![-0.5, -1.5]));
            }
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn bad_flags_are_validation_errors() {
        assert_eq!(main_with_args(["oce-risk", "hull", "--desc", "nope"]), EXIT_VALIDATION);
        assert_eq!(main_with_args(["oce-risk", "oce"]), EXIT_VALIDATION);
    }
}

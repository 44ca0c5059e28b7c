//! Command-line front end: evaluate second-quantized expressions, verify them
//! numerically, and print the built-in inputs.

use std::env;
use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sqeval_core::oracle::{CheckOptions, OracleError, OrbitalBasis, DEFAULT_BUDGET};
use sqeval_core::parser::{render, Format, SourceExpr};
use sqeval_core::pipeline::{evaluate, PipelineError};
use sqeval_core::{check_equivalence, Expression};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;
pub const EXIT_SCALE: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable overriding the oracle budget.
pub const BUDGET_VAR: &str = "SQ_EVAL_BUDGET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Preset {
    #[value(name = "cis-h1")]
    CisH1,
    #[value(name = "cis-h2")]
    CisH2,
    #[value(name = "cid-h1")]
    CidH1,
    #[value(name = "cid-h2")]
    CidH2,
    #[value(name = "anion-h1")]
    AnionH1,
    #[value(name = "anion-h2")]
    AnionH2,
    #[value(name = "cation-h1")]
    CationH1,
    #[value(name = "cation-h2")]
    CationH2,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::CisH1,
        Preset::CisH2,
        Preset::CidH1,
        Preset::CidH2,
        Preset::AnionH1,
        Preset::AnionH2,
        Preset::CationH1,
        Preset::CationH2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::CisH1 => "cis-h1",
            Preset::CisH2 => "cis-h2",
            Preset::CidH1 => "cid-h1",
            Preset::CidH2 => "cid-h2",
            Preset::AnionH1 => "anion-h1",
            Preset::AnionH2 => "anion-h2",
            Preset::CationH1 => "cation-h1",
            Preset::CationH2 => "cation-h2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// `<bra| H |ket>` with the bra written as the adjoint of the ket.
    pub fn source(self) -> &'static str {
        match self {
            Preset::CisH1 => "t[j=>b] t[i=>a] c(j) a(b) c(p) a(q) c(a) a(i) h[p,q]",
            Preset::CisH2 => "1/2 t[j=>b] t[i=>a] c(j) a(b) c(p) c(q) a(s) a(r) c(a) a(i) V[p,q,r,s]",
            Preset::CidH1 => "t[k,l=>c,d] t[i,j=>a,b] c(l) c(k) a(d) a(c) c(p) a(q) c(a) c(b) a(i) a(j) h[p,q]",
            Preset::CidH2 => {
                "1/2 t[k,l=>c,d] t[i,j=>a,b] c(l) c(k) a(d) a(c) c(p) c(q) a(s) a(r) c(a) c(b) a(i) a(j) V[p,q,r,s]"
            }
            Preset::AnionH1 => "t[=>b] t[=>a] a(b) c(p) a(q) c(a) h[p,q]",
            Preset::AnionH2 => "1/2 t[=>b] t[=>a] a(b) c(p) c(q) a(s) a(r) c(a) V[p,q,r,s]",
            Preset::CationH1 => "t[j=>] t[i=>] c(j) c(p) a(q) a(i) h[p,q]",
            Preset::CationH2 => "1/2 t[j=>] t[i=>] c(j) c(p) c(q) a(s) a(r) a(i) V[p,q,r,s]",
        }
    }

    pub fn expression(self) -> Expression {
        SourceExpr::parse(self.source())
            .expect("built-in presets parse")
            .expr
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum OutputFormat {
    #[default]
    Text,
    Latex,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Text => Format::Text,
            OutputFormat::Latex => Format::Latex,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sqeval", version, about = "Evaluate second-quantized matrix elements against a Hartree-Fock reference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Expression file; standard input if neither this nor --preset is given.
    #[arg(short, long, conflicts_with = "preset")]
    input: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reduce an expression to canonical operator-free form.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
        /// Print term and iteration counts after the result.
        #[arg(long)]
        stats: bool,
    },
    /// Evaluate, then compare against brute-force Fock-space numerics.
    Check {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 2)]
        nocc: usize,
        #[arg(long, default_value_t = 2)]
        nvirt: usize,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Print a built-in input expression.
    Preset {
        #[arg(value_parser = parse_preset)]
        name: Preset,
    },
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    Preset::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        format!("unknown preset '{s}' (expected one of: {})", names.join(", "))
    })
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn read_source(args: &InputArgs, stdin: &mut dyn Read) -> Result<(String, String), Failure> {
    if let Some(p) = args.preset {
        return Ok((p.name().to_string(), p.source().to_string()));
    }
    match &args.input {
        Some(path) => fs::read_to_string(path)
            .map(|s| (path.display().to_string(), s))
            .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read {}: {e}", path.display()))),
        None => {
            let mut s = String::new();
            stdin
                .read_to_string(&mut s)
                .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read standard input: {e}")))?;
            Ok(("<stdin>".to_string(), s))
        }
    }
}

fn parse_input(args: &InputArgs, stdin: &mut dyn Read) -> Result<Expression, Failure> {
    let (origin, text) = read_source(args, stdin)?;
    SourceExpr::parse(&text)
        .map(|s| s.expr)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("{origin}:{e}")))
}

fn reduce(expr: Expression) -> Result<sqeval_core::Evaluation, Failure> {
    evaluate(expr).map_err(|e: PipelineError| Failure::new(EXIT_INTERNAL, format!("internal error: {e}")))
}

fn budget() -> Result<u64, Failure> {
    match env::var(BUDGET_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::new(EXIT_USAGE, format!("{BUDGET_VAR} must be a non-negative integer, got '{v}'"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::new(EXIT_INTERNAL, format!("write failed: {e}"))
}

fn dispatch(cli: Cli, stdin: &mut dyn Read, out: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Evaluate { input, format, stats } => {
            let expr = parse_input(&input, stdin)?;
            let eval = reduce(expr)?;
            writeln!(out, "{}", render(&eval.result, format.into())).map_err(io_failure)?;
            if stats {
                writeln!(out, "# terms: {}", eval.result.len()).map_err(io_failure)?;
                writeln!(out, "# iterations: {}", eval.stats.iterations).map_err(io_failure)?;
            }
            Ok(EXIT_OK)
        }
        Command::Check {
            input,
            nocc,
            nvirt,
            trials,
            seed,
            tol,
        } => {
            let basis = OrbitalBasis::new(nocc, nvirt).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
            if tol.is_nan() || tol < 0.0 {
                return Err(Failure::new(EXIT_USAGE, "--tol must be non-negative"));
            }
            let budget = budget()?;
            let expr = parse_input(&input, stdin)?;
            let started = Instant::now();
            let eval = reduce(expr.clone())?;
            let opts = CheckOptions {
                trials,
                seed,
                tol,
                budget,
            };
            let report = check_equivalence(&expr, &eval.result, basis, opts).map_err(|e| match e {
                OracleError::ScaleExceeded { .. } => Failure::new(EXIT_SCALE, e.to_string()),
                OracleError::InvalidBasis { .. } => Failure::new(EXIT_USAGE, e.to_string()),
                _ => Failure::new(EXIT_INTERNAL, format!("internal error: {e}")),
            })?;
            writeln!(out, "# derived: {}", render(&eval.result, Format::Text)).map_err(io_failure)?;
            writeln!(out, "{report}").map_err(io_failure)?;
            writeln!(out, "# elapsed: {:.3}s", started.elapsed().as_secs_f64()).map_err(io_failure)?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Preset { name } => {
            writeln!(out, "{}", name.source()).map_err(io_failure)?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli, stdin, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

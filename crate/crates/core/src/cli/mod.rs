//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when a fit fails or is degenerate, 2 for
//! usage and I/O problems.

pub mod plot;
pub mod report;

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::corpus::{self, legomena, rank_frequencies, FrequencyTable, MessageCount};
use crate::distributions::{sample_zm_categories, DistError, SampleSpec, ZmParams, DEFAULT_TAIL_EPSILON};
use crate::fitting::{fit_chisq, fit_mle, FitError, FitResult};
use crate::sanitizer::{load_ruleset, sanitize_message, LanguageProfile, RuleSet, SanitizerError};

use report::{params_from_report, ConfigEcho, FitReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Fit(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Fit(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<corpus::CorpusError> for CliError {
    fn from(e: corpus::CorpusError) -> Self {
        match e {
            corpus::CorpusError::DropTooMany { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<SanitizerError> for CliError {
    fn from(e: SanitizerError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::InvalidTolerance(_) => CliError::Usage(e.to_string()),
            _ => CliError::Fit(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "errfreq", version, about = "Canonicalize error-message logs and fit Zipf-Mandelbrot models to their frequencies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map raw messages to canonical classes, one per line.
    Sanitize(SanitizeArgs),
    /// Count identical lines into a `count<TAB>message` file.
    Count(IoArgs),
    /// Print the frequency spectrum of a counts file as `f count` rows.
    Spectrum(SpectrumArgs),
    /// Fit a counts file and write a JSON report.
    Fit(FitArgs),
    /// Draw a seeded Zipf-Mandelbrot sample as a counts file.
    Sample(SampleArgs),
    /// Write shifted log-log rank-frequency data as CSV (and optionally SVG).
    Plot(PlotArgs),
    /// Like `fit`, defaulting to both methods and listing the whole spectrum.
    Report(FitArgs),
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input file; standard input when omitted or `-`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltinRules {
    Python,
    Java,
}

#[derive(Debug, Args)]
pub struct SanitizeArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// JSON rule file.
    #[arg(long, required_unless_present = "builtin_rules", conflicts_with = "builtin_rules")]
    pub rules: Option<PathBuf>,
    /// Use a bundled rule set instead of a file.
    #[arg(long, value_enum)]
    pub builtin_rules: Option<BuiltinRules>,
    /// JSON language profile. Input is then read as tool transcripts
    /// separated by blank lines, and only the first error of each is kept.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Remove the N most frequent messages first.
    #[arg(long, default_value_t = 0)]
    pub drop_top: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mle,
    Chisq,
    Both,
}

impl MethodArg {
    fn as_str(self) -> &'static str {
        match self {
            MethodArg::Mle => "mle",
            MethodArg::Chisq => "chisq",
            MethodArg::Both => "both",
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Estimator; `fit` defaults to mle, `report` to both.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, default_value_t = 0)]
    pub drop_top: usize,
    /// Width of the final bracket in the maximum-likelihood search for alpha.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    /// Tail mass beyond which ranks are never drawn.
    #[arg(long, default_value_t = DEFAULT_TAIL_EPSILON)]
    pub tail_epsilon: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Take gamma and t from a JSON report written by `fit`.
    #[arg(long, conflicts_with_all = ["gamma", "t"])]
    pub fit_report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub drop_top: usize,
    /// Also render an SVG to this path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>, CliError> {
    match path {
        None => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) if p == Path::new("-") => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) => Ok(Box::new(BufReader::new(File::open(p).map_err(|e| io_error(p, e))?))),
    }
}

fn read_input(path: Option<&Path>) -> Result<String, CliError> {
    let mut text = String::new();
    open_input(path)?
        .read_to_string(&mut text)
        .map_err(|e| io_error(path.unwrap_or(Path::new("<stdin>")), e))?;
    Ok(text)
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_error(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("<stdout>: {e}")))
        }
    }
}

fn read_table(path: Option<&Path>, drop: usize) -> Result<FrequencyTable, CliError> {
    let counts = corpus::ingest_counts(open_input(path)?)?;
    let table = rank_frequencies(&counts)?;
    Ok(corpus::drop_top(&table, drop)?)
}

fn shell_word(s: &str) -> String {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_./=:+".contains(c)) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

fn input_name(path: Option<&Path>) -> String {
    path.map(|p| p.display().to_string()).unwrap_or_else(|| "-".to_string())
}

pub fn cmd_sanitize(args: &SanitizeArgs) -> Result<(), CliError> {
    let rules = match (&args.rules, args.builtin_rules) {
        (Some(path), _) => load_ruleset(path)?,
        (None, Some(BuiltinRules::Python)) => RuleSet::python(),
        (None, Some(BuiltinRules::Java)) => RuleSet::java(),
        (None, None) => return Err(CliError::Usage("--rules or --builtin-rules is required".into())),
    };
    let profile = args.profile.as_deref().map(LanguageProfile::load).transpose()?;
    let text = read_input(args.io.input.as_deref())?;

    let mut out = String::new();
    let (mut kept, mut dropped, mut no_error) = (0usize, 0usize, 0usize);
    let mut push = |msg: &str| match sanitize_message(msg, &rules) {
        Some(canonical) => {
            out.push_str(&canonical);
            out.push('\n');
            kept += 1;
        }
        None => dropped += 1,
    };
    match &profile {
        Some(profile) => {
            for transcript in split_transcripts(&text) {
                match profile.first_error(&transcript) {
                    Some(msg) if !msg.trim().is_empty() => push(&msg),
                    _ => no_error += 1,
                }
            }
        }
        None => {
            for line in text.lines() {
                let line = line.strip_suffix('\r').unwrap_or(line);
                if !line.trim().is_empty() {
                    push(line);
                }
            }
        }
    }
    emit(args.io.output.as_deref(), &out)?;
    if profile.is_some() {
        eprintln!("sanitize: kept {kept}, dropped {dropped}, no error found in {no_error}");
    } else {
        eprintln!("sanitize: kept {kept}, dropped {dropped}");
    }
    Ok(())
}

/// Blank-line separated blocks.
fn split_transcripts(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current = String::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
        } else {
            current.push_str(line);
            current.push('\n');
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    blocks
}

fn counts_text(counts: &[MessageCount]) -> String {
    if counts.is_empty() {
        return String::new();
    }
    let table = rank_frequencies(counts).expect("non-empty, positive counts");
    let labels = table.labels().expect("ranked tables carry labels");
    let mut out = String::new();
    for (label, f) in labels.iter().zip(table.freqs()) {
        out.push_str(&format!("{f}\t{label}\n"));
    }
    out
}

pub fn cmd_count(args: &IoArgs) -> Result<(), CliError> {
    let input = open_input(args.input.as_deref())?;
    let counts = corpus::ingest_lines(input).map_err(|e| io_error(args.input.as_deref().unwrap_or(Path::new("<stdin>")), e))?;
    emit(args.output.as_deref(), &counts_text(&counts))
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let table = read_table(args.io.input.as_deref(), args.drop_top)?;
    let out: String = legomena(&table).iter().map(|(f, c)| format!("{f} {c}\n")).collect();
    emit(args.io.output.as_deref(), &out)
}

fn run_fits(table: &FrequencyTable, method: MethodArg, tol: f64) -> Result<Vec<FitResult>, CliError> {
    let mut fits = Vec::new();
    if matches!(method, MethodArg::Mle | MethodArg::Both) {
        fits.push(fit_mle(table, tol)?);
    }
    if matches!(method, MethodArg::Chisq | MethodArg::Both) {
        fits.push(fit_chisq(table, table.n_total())?);
    }
    if let Some(bad) = fits.iter().find(|f| f.is_degenerate()) {
        let warnings = serde_json::to_string(&bad.warnings).unwrap_or_default();
        return Err(CliError::Fit(format!("degenerate {} fit (alpha = {}): {warnings}", bad.method, bad.alpha)));
    }
    Ok(fits)
}

pub fn cmd_fit(args: &FitArgs, command: &str) -> Result<(), CliError> {
    let full = command == "report";
    let method = args.method.unwrap_or(if full { MethodArg::Both } else { MethodArg::Mle });
    let table = read_table(args.io.input.as_deref(), args.drop_top)?;
    let fits = run_fits(&table, method, args.tol)?;
    let input = input_name(args.io.input.as_deref());
    let rerun = format!(
        "errfreq {command} --input {} --method {} --drop-top {} --tol {}",
        shell_word(&input),
        method.as_str(),
        args.drop_top,
        args.tol
    );
    let config = ConfigEcho {
        command: command.to_string(),
        input,
        method: method.as_str().to_string(),
        drop_top: args.drop_top,
        tol: args.tol,
        rerun,
    };
    let report = FitReport::new(config, &table, fits, full);
    emit(args.io.output.as_deref(), &report.to_json())
}

pub fn cmd_sample(args: &SampleArgs) -> Result<(), CliError> {
    let params = ZmParams::new(args.gamma, args.t)?;
    let spec = SampleSpec::new(params, args.n, args.seed).with_tail_epsilon(args.tail_epsilon);
    let sample = sample_zm_categories(&spec)?;
    let width = sample.truncation.to_string().len();

    let mut rows: Vec<(u64, u64)> = sample.counts.into_iter().collect();
    // rank labels are zero-padded, so ties in count fall back to rank order
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out = format!(
        "# errfreq sample gamma={} t={} n={} seed={} tail_epsilon={} truncation={}\n",
        args.gamma, args.t, args.n, args.seed, args.tail_epsilon, sample.truncation
    );
    for (k, count) in rows {
        out.push_str(&format!("{count}\tzm{k:0width$}\n"));
    }
    emit(args.output.as_deref(), &out)
}

pub fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let (gamma, t) = match (&args.fit_report, args.gamma, args.t) {
        (Some(path), _, _) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            params_from_report(&text).map_err(CliError::Usage)?
        }
        (None, Some(g), Some(t)) => (g, t),
        _ => return Err(CliError::Usage("plot needs --gamma and --t, or --fit-report".into())),
    };
    if !(gamma.is_finite() && gamma > 0.0 && t.is_finite() && t >= 0.0) {
        return Err(CliError::Usage(format!("plot needs gamma > 0 and t >= 0, got gamma = {gamma}, t = {t}")));
    }
    let table = read_table(args.io.input.as_deref(), args.drop_top)?;
    let rows = plot::plot_rows(&table, gamma, t);
    if let Some(svg) = &args.svg {
        std::fs::write(svg, plot::to_svg(&rows, gamma, t)).map_err(|e| io_error(svg, e))?;
    }
    emit(args.io.output.as_deref(), &plot::to_csv(&rows))
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Sanitize(a) => cmd_sanitize(a),
        Command::Count(a) => cmd_count(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Fit(a) => cmd_fit(a, "fit"),
        Command::Sample(a) => cmd_sample(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Report(a) => cmd_fit(a, "report"),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("errfreq: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

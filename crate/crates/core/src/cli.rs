//! Command-line front end.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::corpus::{self, CorpusOptions, CorpusResult, RatingsTable};
use crate::engine::{self, parse_reuse_count};
use crate::error::{Error, Result};
use crate::oracle::{self, AuditRow, OracleConstruct};
use crate::report::{self, Format};
use crate::xsd::CoverageTable;

pub const COVERAGE_TABLE_ENV: &str = "BPEL_REUSE_COVERAGE_TABLE";

#[derive(Debug, Parser)]
#[command(
    name = "bpel-reuse",
    version,
    about = "Potential-reusability metrics for BPEL processes"
)]
pub struct Cli {
    /// Coverage table replacing the built-in XSD type weights.
    #[arg(long, global = true, env = COVERAGE_TABLE_ENV, value_name = "PATH")]
    pub coverage_table: Option<PathBuf>,

    /// Increase log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one process against its interface.
    Analyze(AnalyzeArgs),
    /// Score every bundle in a corpus directory.
    Batch(BatchArgs),
    /// Compare brute-force enumerations with the closed-form factors.
    Oracle(OracleArgs),
    /// Spearman correlation of corpus metrics with external ratings.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format; text on a terminal, JSON otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Pin the report timestamp for reproducible output.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub bpel: PathBuf,

    /// Interface WSDL; defaults to the process import or `<stem>.wsdl`.
    #[arg(long)]
    pub wsdl: Option<PathBuf>,

    /// Current reuse count R_c (default 1).
    #[arg(long, value_parser = rc_arg, allow_hyphen_values = true)]
    pub rc: Option<u64>,

    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    pub dir: PathBuf,

    /// R_c for bundles the manifest leaves unset (default 1).
    #[arg(long, value_parser = rc_arg, allow_hyphen_values = true)]
    pub rc: Option<u64>,

    /// Directory receiving corpus_report.json, corpus_report.csv and histogram.tsv.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub construct: Option<OracleConstruct>,

    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Corpus directory or a corpus_report.json from `batch`.
    pub corpus: PathBuf,

    /// CSV with header `process_id,rating[,flip]`.
    #[arg(long)]
    pub ratings: PathBuf,

    /// Significance level of the two-sided test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    #[arg(long, value_parser = rc_arg, allow_hyphen_values = true)]
    pub rc: Option<u64>,

    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,
}

fn rc_arg(s: &str) -> std::result::Result<u64, String> {
    parse_reuse_count(s).map_err(|e| e.to_string())
}

fn resolve_format(requested: Option<Format>, to_file: bool) -> Format {
    requested.unwrap_or(if !to_file && std::io::stdout().is_terminal() {
        Format::Text
    } else {
        Format::Json
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn load_table(path: Option<&Path>) -> Result<CoverageTable> {
    match path {
        Some(p) => CoverageTable::from_path(p),
        None => Ok(CoverageTable::builtin()),
    }
}

/// Parses `args` and runs the selected subcommand.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Error,
        1 => log::LevelFilter::Warn,
        2 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();

    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Analyze(a) => analyze(a, cli.coverage_table.as_deref()),
        Command::Batch(b) => batch(b, cli.coverage_table.as_deref()),
        Command::Oracle(o) => run_oracle(o),
        Command::Correlate(c) => correlate(c, cli.coverage_table.as_deref()),
    }
}

fn analyze(args: &AnalyzeArgs, table: Option<&Path>) -> Result<ExitCode> {
    let table = load_table(table)?;
    if !args.bpel.is_file() {
        return Err(Error::Input {
            path: args.bpel.clone(),
            message: "file not found".into(),
        });
    }
    let mut report = engine::analyze_files(&args.bpel, args.wsdl.as_deref(), args.rc, &table)?;
    if args.output.deterministic {
        report.pin_timestamp();
    }
    let format = resolve_format(args.output.format, args.out.is_some());
    emit(&report::render(&report, format)?, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn corpus_text(result: &CorpusResult) -> String {
    let mut out = format!(
        "processes analyzed: {}\nfailures: {}\n",
        result.n,
        result.failures.len()
    );
    if let Some(d) = &result.summary.r_p {
        out.push_str(&format!(
            "R_p mean {:.4}, std dev {}, variance {}\n",
            d.mean,
            d.std_dev.map_or("n/a".into(), |v| format!("{v:.4}")),
            d.variance.map_or("n/a".into(), |v| format!("{v:.4}")),
        ));
    }
    out.push('\n');
    out.push_str(&report::histogram_tsv(&result.histogram));
    out
}

fn batch(args: &BatchArgs, table: Option<&Path>) -> Result<ExitCode> {
    let table = load_table(table)?;
    let result = corpus::analyze_corpus(
        &args.dir,
        &table,
        CorpusOptions {
            default_r_c: args.rc,
            deterministic: args.output.deterministic,
        },
    )?;
    for f in &result.failures {
        eprintln!("{}: {}", f.path, f.reason);
    }
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let write = |name: &str, text: String| {
                let path = dir.join(name);
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
            };
            write("corpus_report.json", report::to_json(&result)?)?;
            write("corpus_report.csv", report::to_csv(&result.reports)?)?;
            write("histogram.tsv", report::histogram_tsv(&result.histogram))?;
        }
        None => {
            let text = match resolve_format(args.output.format, false) {
                Format::Json => report::to_json(&result)?,
                Format::Csv => report::to_csv(&result.reports)?,
                Format::Text => corpus_text(&result),
            };
            emit(&text, None)?;
        }
    }
    Ok(if result.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run_oracle(args: &OracleArgs) -> Result<ExitCode> {
    let constructs: Vec<OracleConstruct> = match args.construct {
        Some(c) => vec![c],
        None => OracleConstruct::ALL.to_vec(),
    };
    let mut rows: Vec<AuditRow> = Vec::new();
    for c in constructs {
        match args.n {
            Some(n) => rows.push(oracle::audit_row(c, n)?),
            None => rows.extend(
                (1..=c.max_n())
                    .map(|n| oracle::audit_row(c, n))
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }
    let text = match resolve_format(args.format, args.out.is_some()) {
        Format::Json => report::to_json(&rows)?,
        Format::Text => rows.iter().map(|r| r.to_line() + "\n").collect(),
        Format::Csv => {
            let mut out = String::from("construct,n,matches,total,ratio,closed_form,equal\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.result.construct,
                    r.result.n,
                    r.result.match_count,
                    r.result.total_count,
                    crate::rational::format_exact(&r.result.ratio),
                    crate::rational::format_exact(&r.closed_form),
                    r.equal
                ));
            }
            out
        }
    };
    emit(&text, args.out.as_deref())?;
    Ok(if rows.iter().all(|r| r.equal) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn correlate(args: &CorrelateArgs, table: Option<&Path>) -> Result<ExitCode> {
    let result: CorpusResult = if args.corpus.is_dir() {
        let table = load_table(table)?;
        corpus::analyze_corpus(
            &args.corpus,
            &table,
            CorpusOptions {
                default_r_c: args.rc,
                deterministic: args.output.deterministic,
            },
        )?
    } else {
        let text = std::fs::read_to_string(&args.corpus).map_err(|e| Error::io(&args.corpus, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Input {
            path: args.corpus.clone(),
            message: format!("not a corpus report: {e}"),
        })?
    };
    for f in &result.failures {
        eprintln!("{}: {}", f.path, f.reason);
    }
    let ratings = RatingsTable::from_path(&args.ratings)?;
    let report = corpus::correlate_with_ratings(&result.reports, &ratings, args.alpha)?;
    for id in &report.unmatched_ratings {
        eprintln!("warning: rating for `{id}` matches no analyzed process");
    }
    let text = match resolve_format(args.output.format, args.out.is_some()) {
        Format::Text | Format::Csv => {
            let r = &report.r_p_vs_rating;
            let component = |c: &corpus::ComponentCorrelation| match c {
                corpus::ComponentCorrelation::Value(v) => {
                    format!("{:.4} (p = {:.4})", v.r_s, v.p_value)
                }
                corpus::ComponentCorrelation::Undefined { error } => format!("undefined: {error}"),
            };
            format!(
                "n = {}, alpha = {}\nR_p vs rating: r_s = {:.4}, p = {:.4}, {}\nR_p vs MP_SD: {}\nR_p vs MP_SL: {}\nunmatched ratings: {}\nunrated processes: {}\n",
                report.n,
                report.alpha,
                r.r_s,
                r.p_value,
                if r.significant { "significant" } else { "not significant" },
                component(&report.r_p_vs_mp_sd),
                component(&report.r_p_vs_mp_sl),
                report.unmatched_ratings.len(),
                report.unmatched_processes.len(),
            )
        }
        Format::Json => report::to_json(&report)?,
    };
    emit(&text, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

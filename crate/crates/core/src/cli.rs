//! Command-line front end. `main.rs` only forwards to [`run`].
//!
//! Exit codes: 0 success, 1 error or bad usage, 2 infeasible scheme under
//! `--strict`, 3 unknown scheme, 4 invalid or missing scenario.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bitgrid::GstTime;
use crate::feasibility::{self, Figure, Fit};
use crate::sigscheme::{Registry, SchemeError};
use crate::sim::{self, ScenarioConfig, SimError};
use crate::tesla::{ChainDump, HashFunction, MacFunction, TeslaChain, TeslaParams};
use crate::vectors;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_UNKNOWN_SCHEME: i32 = 3;
pub const EXIT_BAD_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "osnma-lab", version, about = "OSNMA codecs, post-quantum fit analysis and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Block counts and BID-mode fit of signature schemes.
    Analyze(AnalyzeArgs),
    /// Run a scenario file.
    Simulate(SimulateArgs),
    /// Generate or verify a TESLA chain dump.
    Chain(ChainArgs),
    /// Check or rewrite the golden vectors.
    Vectors(VectorsArgs),
    /// Size ratios, the claims ledger and figure data.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Scheme name; repeatable.
    #[arg(long = "scheme", required_unless_present = "all", conflicts_with = "all")]
    pub schemes: Vec<String>,
    /// Every characterized scheme.
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = feasibility::DEFAULT_KEY_BITS)]
    pub lk: u64,
    #[arg(long, default_value_t = feasibility::DEFAULT_TAG_BITS)]
    pub lt: u64,
    /// Accept extended BID mode and show its block counts.
    #[arg(long)]
    pub extended: bool,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Exit 2 if a scheme does not fit the accepted mode.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for `events.tsv` and `summary.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 128)]
    pub lk: u32,
    #[arg(long, default_value_t = 10)]
    pub n: u32,
    #[arg(long, default_value = "SHA-256")]
    pub hash: String,
    #[arg(long, default_value_t = 0)]
    pub cid: u8,
    /// Secret seed K_N; defaults to zero bytes.
    #[arg(long)]
    pub seed_hex: Option<String>,
    /// Read a dump from stdin and check every link.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct VectorsArgs {
    /// Defaults to $OSNMA_LAB_VECTORS or the bundled directory.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Regenerate instead of checking.
    #[arg(long)]
    pub write: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Emit the public key and signature size CSVs.
    #[arg(long)]
    pub figures: bool,
    #[arg(long)]
    pub include_sphincs: bool,
    /// Write files here instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Failure {
        Failure {
            code,
            message: message.to_string(),
        }
    }
}

type Outcome = Result<i32, Failure>;

fn io_err(e: std::io::Error) -> Failure {
    Failure::new(EXIT_ERROR, e)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => analyze(&a, out),
        Command::Simulate(a) => simulate(&a, out),
        Command::Chain(a) => chain(&a, stdin, out),
        Command::Vectors(a) => vectors_cmd(&a, out),
        Command::Report(a) => report(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Outcome {
    let registry = Registry::new();
    let reports = feasibility::analyze(&registry, &a.schemes, a.lk, a.lt).map_err(|e| match e {
        SchemeError::UnknownScheme(_) => Failure::new(EXIT_UNKNOWN_SCHEME, e),
        other => Failure::new(EXIT_ERROR, other),
    })?;
    write!(out, "{}", feasibility::analyze_table(&reports, a.extended)).map_err(io_err)?;
    if a.all {
        writeln!(out).map_err(io_err)?;
        write!(out, "{}", feasibility::ratio_table(&feasibility::ratio_report())).map_err(io_err)?;
        writeln!(out).map_err(io_err)?;
        write!(out, "{}", feasibility::claims_table(&feasibility::claims_ledger())).map_err(io_err)?;
    }
    if let Some(path) = &a.csv {
        fs::write(path, feasibility::analyze_csv(&reports, a.extended)).map_err(io_err)?;
    }
    let allowed = if a.extended { Fit::Extended } else { Fit::Nominal };
    let failing: Vec<&str> = reports
        .iter()
        .filter(|r| r.mode() > allowed)
        .map(|r| r.scheme.as_str())
        .collect();
    if a.strict && !failing.is_empty() {
        return Err(Failure::new(
            EXIT_INFEASIBLE,
            format!("does not fit {} mode: {}", allowed.name(), failing.join(", ")),
        ));
    }
    Ok(EXIT_OK)
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Outcome {
    let bad = |e: &dyn std::fmt::Display| Failure::new(EXIT_BAD_CONFIG, format!("{}: {e}", a.scenario.display()));
    let text = fs::read_to_string(&a.scenario).map_err(|e| bad(&e))?;
    let mut cfg = ScenarioConfig::parse(&text).map_err(|e| bad(&e))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let output = sim::run(&cfg).map_err(|e| match e {
        SimError::Config { .. } => bad(&e),
        other => Failure::new(EXIT_ERROR, other),
    })?;
    let csv = output.summary.to_csv();
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(io_err)?;
        fs::write(dir.join("events.tsv"), output.log.to_tsv()).map_err(io_err)?;
        fs::write(dir.join("summary.csv"), &csv).map_err(io_err)?;
    }
    write!(out, "{csv}").map_err(io_err)?;
    Ok(EXIT_OK)
}

fn chain(a: &ChainArgs, stdin: &mut dyn Read, out: &mut dyn Write) -> Outcome {
    if a.verify {
        let mut text = String::new();
        stdin.read_to_string(&mut text).map_err(io_err)?;
        let dump = ChainDump::parse(&text).map_err(|e| Failure::new(EXIT_ERROR, e))?;
        return match dump.first_broken_link() {
            None => {
                writeln!(out, "OK {} keys", dump.keys.len()).map_err(io_err)?;
                Ok(EXIT_OK)
            }
            Some(j) => Err(Failure::new(EXIT_ERROR, format!("key {j} does not derive key {}", j - 1))),
        };
    }
    let hash = HashFunction::from_name(&a.hash).map_err(|e| Failure::new(EXIT_ERROR, e))?;
    let params = TeslaParams::new(a.lk, 40, hash, MacFunction::HmacSha256, a.cid, a.n, GstTime::default())
        .map_err(|e| Failure::new(EXIT_ERROR, e))?;
    let seed = match &a.seed_hex {
        Some(h) => hex::decode(h).map_err(|e| Failure::new(EXIT_ERROR, format!("--seed-hex: {e}")))?,
        None => vec![0; a.lk as usize / 8],
    };
    let chain = TeslaChain::generate(params, &seed).map_err(|e| Failure::new(EXIT_ERROR, e))?;
    write!(out, "{}", chain.dump().to_text()).map_err(io_err)?;
    Ok(EXIT_OK)
}

fn vectors_cmd(a: &VectorsArgs, out: &mut dyn Write) -> Outcome {
    let dir = a.dir.clone().unwrap_or_else(vectors::default_dir);
    if a.write {
        vectors::write(&dir).map_err(|e| Failure::new(EXIT_ERROR, e))?;
        writeln!(out, "wrote {} files to {}", vectors::FILES.len(), dir.display()).map_err(io_err)?;
        return Ok(EXIT_OK);
    }
    let results = vectors::check(&dir).map_err(|e| Failure::new(EXIT_ERROR, e))?;
    let mut ok = true;
    for (name, status) in results {
        ok &= status == vectors::Status::Match;
        writeln!(out, "{name}: {status:?}").map_err(io_err)?;
    }
    if ok {
        Ok(EXIT_OK)
    } else {
        Err(Failure::new(EXIT_ERROR, format!("golden vectors in {} differ", dir.display())))
    }
}

fn report(a: &ReportArgs, out: &mut dyn Write) -> Outcome {
    let mut files: Vec<(&str, String)> = vec![
        ("ratios.csv", feasibility::ratio_csv(&feasibility::ratio_report())),
        ("claims.csv", feasibility::claims_csv(&feasibility::claims_ledger())),
    ];
    if a.figures {
        files.push(("fig8_public_keys.csv", feasibility::figure_csv(Figure::PublicKeys, a.include_sphincs)));
        files.push(("fig9_signatures.csv", feasibility::figure_csv(Figure::Signatures, a.include_sphincs)));
    }
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err)?;
            for (name, text) in &files {
                fs::write(dir.join(name), text).map_err(io_err)?;
                writeln!(out, "{}", dir.join(name).display()).map_err(io_err)?;
            }
        }
        None => {
            for (i, (name, text)) in files.iter().enumerate() {
                if i > 0 {
                    writeln!(out).map_err(io_err)?;
                }
                write!(out, "# {name}\n{text}").map_err(io_err)?;
            }
        }
    }
    Ok(EXIT_OK)
}

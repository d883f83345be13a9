use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use ladder_core::density::{self, parse_rational, Target, TraceDocument};
use ladder_core::phases::{self, extract_sequences, segment_phases};
use ladder_core::records::{self, PairDocument, PairState, RecordEntry, StopCriterion};
use ladder_core::verify::{Suite, SuiteReport};
use ladder_core::{Error, Params, DEFAULT_BIT_CAP};
use num_bigint::BigUint;
use num_rational::BigRational;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "ladder", version, about = "Exact computations on the sets a^(p+d(p))/b^p in [1, a)")]
struct Cli {
    #[arg(long, global = true, default_value_t = 2)]
    a: u64,
    #[arg(long, global = true, default_value_t = 3)]
    b: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write data here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for the record scan. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=1024))]
    parallel: u64,
    /// Largest power, in bits, that may be materialized.
    #[arg(long, global = true, env = "LADDER_BIT_CAP", default_value_t = DEFAULT_BIT_CAP)]
    bit_cap: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Scan,
    Sequence,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimum and maximum record holders with p <= max-p.
    Records {
        #[arg(long)]
        max_p: u64,
        #[arg(long, value_enum, default_value_t = Method::Scan)]
        method: Method,
        #[arg(long, default_value_t = 10)]
        digits: u32,
    },
    /// The pair sequence from its initial state.
    Pairs(PairsArgs),
    /// Phase table and the sequences read off the phase tails.
    Phases(PhasesArgs),
    /// Greedy approximation of a target from below.
    Approx {
        #[arg(long, value_parser = rational)]
        target: BigRational,
        #[arg(long, value_parser = rational)]
        eps: BigRational,
        /// Accept any positive target and work in the coset containing it.
        #[arg(long)]
        positive: bool,
        #[arg(long, default_value_t = density::DEFAULT_MAX_STEPS)]
        max_steps: u64,
    },
    /// Exponents and decimal value of one element.
    Value {
        #[arg(long, value_parser = big)]
        p: BigUint,
        #[arg(long, default_value_t = 10)]
        digits: u32,
    },
    /// Built-in verification suites.
    Verify {
        /// Run only this suite; all of them by default.
        #[arg(long, value_parser = suite)]
        suite: Option<Suite>,
    },
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("stop").required(true).args(["steps", "min_p", "gap"])))]
struct PairsArgs {
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long, value_parser = big)]
    min_p: Option<BigUint>,
    #[arg(long, value_parser = rational)]
    gap: Option<BigRational>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["steps", "from_file"])))]
struct PhasesArgs {
    #[arg(long)]
    steps: Option<u64>,
    /// A JSON pair document as written by `pairs --format json`.
    #[arg(long)]
    from_file: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    digits: u32,
}

fn rational(s: &str) -> Result<BigRational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn big(s: &str) -> Result<BigUint, String> {
    s.parse().map_err(|_| format!("{s:?} is not a non-negative integer"))
}

fn suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

enum Failure {
    Check(String),
    /// Step or chain budget ran out before the tolerance was met.
    Budget(String),
    Core(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Core(Error::ResourceLimit { .. }) | Failure::Budget(_) => 3,
            Failure::Core(_) | Failure::Usage(_) => 2,
        }
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Failure::Usage(e.to_string()))
}

fn json_bytes<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| Failure::Usage(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn emit<T: Serialize>(format: Format, rows: &[T]) -> Result<Vec<u8>, Failure> {
    match format {
        Format::Csv => csv_bytes(rows),
        Format::Json => json_bytes(rows),
    }
}

fn records(cli: &Cli, params: Params, max_p: u64, method: Method, digits: u32) -> Result<Vec<u8>, Failure> {
    let scan = |params| -> Result<Vec<RecordEntry>, Error> {
        match cli.parallel {
            1 => records::scan_records(params, max_p),
            n => records::scan_records_parallel(params, max_p, n as usize),
        }
    };
    let entries = match method {
        Method::Scan => scan(params)?,
        Method::Sequence => records::sequence_records(params, max_p)?,
        Method::Both => {
            let scanned = scan(params)?;
            let report = records::compare_record_lists(&scanned, &records::sequence_records(params, max_p)?);
            if let Some((s, q)) = &report.first_divergence {
                return Err(Failure::Check(format!(
                    "scan and sequence disagree: scan has {s:?}, sequence has {q:?}"
                )));
            }
            eprintln!("scan and sequence agree on {} rows", report.scan_rows);
            scanned
        }
    };
    emit(cli.format, &records::record_rows(params, &entries, digits)?)
}

#[derive(Serialize)]
struct PairRow {
    index: u64,
    #[serde(serialize_with = "decimal_string")]
    u_p: BigUint,
    #[serde(serialize_with = "decimal_string")]
    u_d: BigUint,
    #[serde(serialize_with = "decimal_string")]
    v_p: BigUint,
    #[serde(serialize_with = "decimal_string")]
    v_d: BigUint,
}

fn decimal_string<S: serde::Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(x)
}

fn pairs(cli: &Cli, params: Params, args: &PairsArgs) -> Result<Vec<u8>, Failure> {
    let stop = match (args.steps, &args.min_p, &args.gap) {
        (Some(n), _, _) => StopCriterion::MaxSteps(n),
        (_, Some(p), _) => StopCriterion::MinPReached(p.clone()),
        (_, _, Some(eps)) => StopCriterion::GapBelow(eps.clone()),
        _ => unreachable!("clap requires one stop rule"),
    };
    let states = records::generate_pairs(params, &stop)?;
    match cli.format {
        Format::Json => json_bytes(&PairDocument::from_pairs(params, &states)),
        Format::Csv => csv_bytes(
            &states
                .iter()
                .map(|s| PairRow {
                    index: s.index,
                    u_p: s.u.p().clone(),
                    u_d: s.u.d().clone(),
                    v_p: s.v.p().clone(),
                    v_d: s.v.d().clone(),
                })
                .collect::<Vec<_>>(),
        ),
    }
}

#[derive(Serialize)]
struct PhasesDocument {
    start_case: &'static str,
    phases: Vec<phases::PhaseRow>,
    extracted: Vec<phases::ExtractedRow>,
}

fn load_pairs(cli: &Cli, params: Params, path: &PathBuf) -> Result<Vec<PairState>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let doc: PairDocument =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let (found, states) = doc.into_pairs(cli.bit_cap)?;
    if (found.a(), found.b()) != (params.a(), params.b()) {
        eprintln!("note: using a = {}, b = {} from {}", found.a(), found.b(), path.display());
    }
    Ok(states)
}

fn phases_cmd(cli: &Cli, params: Params, args: &PhasesArgs) -> Result<Vec<u8>, Failure> {
    let states = match (&args.from_file, args.steps) {
        (Some(path), _) => load_pairs(cli, params, path)?,
        (None, Some(n)) => records::generate_pairs(params, &StopCriterion::MaxSteps(n))?,
        _ => unreachable!("clap requires one source"),
    };
    let found = segment_phases(&states)?;
    let rows = phases::phase_rows(&states, &found);
    let extracted = match extract_sequences(&states) {
        Ok(seqs) => phases::extracted_rows(&seqs, args.digits)?,
        Err(Error::TooShort(why)) => {
            eprintln!("no extracted sequences: {why}");
            Vec::new()
        }
        Err(e) => return Err(e.into()),
    };
    let start = phases::StartCase::of(states[0].params())?;
    eprintln!("{} complete phases, start case {start:?}", rows.len());
    match cli.format {
        Format::Json => json_bytes(&PhasesDocument {
            start_case: match start {
                phases::StartCase::VFirst => "v_first",
                phases::StartCase::UFirst => "u_first",
            },
            phases: rows,
            extracted,
        }),
        Format::Csv => {
            let mut out = csv_bytes(&rows)?;
            out.push(b'\n');
            out.extend(csv_bytes(&extracted)?);
            Ok(out)
        }
    }
}

fn approx(
    cli: &Cli,
    params: Params,
    target: &BigRational,
    eps: &BigRational,
    positive: bool,
    max_steps: u64,
) -> Result<Vec<u8>, Failure> {
    let t = Target::new(target.clone())?;
    let doc = if positive {
        TraceDocument::from_scaled(&density::approximate_positive(params, &t, eps, max_steps)?)
    } else {
        match density::approximate(params, &t, eps, max_steps) {
            Ok(trace) => TraceDocument::from_trace(None, &t, &trace),
            Err(Error::TargetInF { p }) => TraceDocument {
                k: None,
                target: t.to_string(),
                steps: Vec::new(),
                converged: true,
                final_gap_bound: None,
                exact_hit: Some(params.phi(p)?.repr()),
                diagnostic: None,
            },
            Err(e) => return Err(e.into()),
        }
    };
    if let Some(hit) = &doc.exact_hit {
        eprintln!("target is the element with p = {}, d = {}", hit.p, hit.d);
    }
    if let Some(bound) = &doc.final_gap_bound {
        eprintln!("{} steps, final gap below {bound}", doc.steps.len());
    }
    let out = match cli.format {
        Format::Json => json_bytes(&doc)?,
        Format::Csv => csv_bytes(&doc.steps)?,
    };
    if !doc.converged {
        // the partial trace is still written
        write_out(cli, &out)?;
        return Err(Failure::Budget(doc.diagnostic.unwrap_or_else(|| "did not converge".into())));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ValueDocument {
    a: u64,
    b: u64,
    #[serde(serialize_with = "decimal_string")]
    p: BigUint,
    #[serde(serialize_with = "decimal_string")]
    d: BigUint,
    fraction: String,
    value_approx: String,
}

fn value(cli: &Cli, params: Params, p: &BigUint, digits: u32) -> Result<Vec<u8>, Failure> {
    let e = params.phi(p.clone())?;
    let approx = e.approx(digits)?;
    match cli.format {
        Format::Csv => Ok(format!("{} ≈ {approx}\n", e.fraction()).into_bytes()),
        Format::Json => json_bytes(&ValueDocument {
            a: params.a(),
            b: params.b(),
            p: p.clone(),
            d: e.d().clone(),
            fraction: e.fraction(),
            value_approx: approx,
        }),
    }
}

#[derive(Serialize)]
struct CheckRow<'a> {
    suite: &'a str,
    check: &'a str,
    passed: bool,
    detail: &'a str,
}

fn verify(cli: &Cli, only: Option<Suite>) -> Result<Vec<u8>, Failure> {
    let suites: Vec<Suite> = only.map_or(Suite::ALL.to_vec(), |s| vec![s]);
    let mut reports: Vec<SuiteReport> = Vec::new();
    for s in suites {
        let r = s.run(cli.bit_cap)?;
        eprintln!("{}: {}", r.suite, if r.passed() { "pass" } else { "FAIL" });
        reports.push(r);
    }
    let out = match cli.format {
        Format::Json => json_bytes(&reports)?,
        Format::Csv => csv_bytes(
            &reports
                .iter()
                .flat_map(|r| {
                    r.checks.iter().map(|c| CheckRow {
                        suite: &r.suite,
                        check: &c.name,
                        passed: c.passed,
                        detail: &c.detail,
                    })
                })
                .collect::<Vec<_>>(),
        )?,
    };
    if reports.iter().all(SuiteReport::passed) {
        Ok(out)
    } else {
        write_out(cli, &out)?;
        let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.suite.as_str()).collect();
        Err(Failure::Check(format!("failed suites: {}", failed.join(", "))))
    }
}

fn write_out(cli: &Cli, bytes: &[u8]) -> Result<(), Failure> {
    let res = match &cli.output {
        Some(path) => fs::write(path, bytes),
        None => io::stdout().lock().write_all(bytes),
    };
    res.map_err(|e| Failure::Usage(format!("cannot write output: {e}")))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let params = || -> Result<Params, Failure> { Ok(Params::new(cli.a, cli.b)?.with_bit_cap(cli.bit_cap)) };
    let out = match &cli.command {
        Command::Records { max_p, method, digits } => records(cli, params()?, *max_p, *method, *digits)?,
        Command::Pairs(args) => pairs(cli, params()?, args)?,
        Command::Phases(args) => phases_cmd(cli, params()?, args)?,
        Command::Approx {
            target,
            eps,
            positive,
            max_steps,
        } => approx(cli, params()?, target, eps, *positive, *max_steps)?,
        Command::Value { p, digits } => value(cli, params()?, p, *digits)?,
        Command::Verify { suite } => verify(cli, *suite)?,
    };
    write_out(cli, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Check(msg) | Failure::Usage(msg) | Failure::Budget(msg) => eprintln!("error: {msg}"),
                Failure::Core(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(f.code())
        }
    }
}

//! Command-line front end. Exit codes: 0 success, 1 usage or parameter
//! error, 2 overflow, 3 I/O or malformed input.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    epsilon_bound, overflow_monte_carlo, per_bucket_bound, predict_costs, Algorithm,
};
use crate::bin_assign::random_bin_assignment;
use crate::element::Element;
use crate::error::{Error, Result};
use crate::orp::{bucket_orp_with, with_retry, OrpOptions};
use crate::osort::{bitonic_baseline, bucket_osort_with, merge_sort_baseline_with, SortResult};
use crate::params::{derive_params, ClientMode, Engine, Params};
use crate::rng::{parse_seed, Purpose, RngStream, StreamTag};
use crate::trace::Trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_OVERFLOW: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const CSV_HEADER: &str =
    "algo,n,Z,mode,measured_accesses,predicted_accesses,comparisons,moves,disks,seed";
pub const OVERFLOW_CSV_HEADER: &str =
    "n,Z,B,levels,trials,any_overflow_rate,max_bucket_rate,final_bucket_rate,bucket_bound,epsilon,seed";

#[derive(Parser, Debug)]
#[command(
    name = "oblisort",
    version,
    about = "Oblivious random permutation and sorting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sort a file of keys with the bucket oblivious sort.
    Sort(FileArgs),
    /// Randomly permute a file of keys.
    Orp(FileArgs),
    /// Print the access trace of one run.
    Trace(TraceArgs),
    /// Measured against predicted costs, as CSV.
    Bench(BenchArgs),
    /// Monte Carlo overflow rates against the analytic bound, as CSV.
    Overflow(OverflowArgs),
    /// Head moves of disk-mode runs, as CSV.
    Locality(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Bucket,
    Const,
}

impl From<Mode> for ClientMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Bucket => ClientMode::BucketClient,
            Mode::Const => ClientMode::ConstClient,
        }
    }
}

fn seed_arg(s: &str) -> std::result::Result<u64, String> {
    parse_seed(s).map_err(|e| format!("invalid seed '{s}': {e}"))
}

fn algo_arg(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Bucket capacity in elements.
    #[arg(long = "z", default_value_t = 512)]
    pub z: usize,
    /// Decimal or 0x-prefixed hex.
    #[arg(long, env = "OBLISORT_SEED", default_value = "0", value_parser = seed_arg)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Bucket)]
    pub mode: Mode,
    /// Run on this many disks and count head moves.
    #[arg(long)]
    pub disks: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FileArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Payload bytes per binary record.
    #[arg(long, default_value_t = 0)]
    pub payload_width: usize,
    /// Rerun with a fresh seed after an overflow, at most this many times.
    #[arg(long, default_value_t = 0)]
    pub retries: u32,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "orp", value_parser = algo_arg)]
    pub algo: Algorithm,
    /// Synthetic input size; ignored with --input.
    #[arg(long)]
    pub n: Option<usize>,
    /// Text key file to run on.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "bucket,bitonic,merge", value_parser = algo_arg)]
    pub algos: Vec<Algorithm>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OverflowArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long = "z", value_delimiter = ',', required = true)]
    pub z: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, env = "OBLISORT_SEED", default_value = "0", value_parser = seed_arg)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "oblisort: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Overflow { .. } => EXIT_OVERFLOW,
        Error::Io(_) | Error::Input(_) | Error::TraceParse { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Sort(a) => file_command(&a, true),
        Command::Orp(a) => file_command(&a, false),
        Command::Trace(a) => trace_command(&a, out),
        Command::Bench(a) => {
            let csv = bench_csv(&a.common, &a.n, &a.algos, false)?;
            emit(a.output.as_deref(), &csv, out)
        }
        Command::Locality(a) => {
            let csv = bench_csv(&a.common, &a.n, &a.algos, true)?;
            emit(a.output.as_deref(), &csv, out)
        }
        Command::Overflow(a) => {
            let csv = overflow_csv(&a)?;
            emit(a.output.as_deref(), &csv, out)
        }
    }
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn params_for(common: &Common, n: usize) -> Result<Params> {
    derive_params(n, common.z, common.mode.into(), common.seed, common.disks)
}

fn file_command(a: &FileArgs, sort: bool) -> Result<()> {
    let bytes = fs::read(&a.input)?;
    let input = match a.format {
        Format::Text => read_text(&bytes)?,
        Format::Binary => read_binary(&bytes, a.payload_width)?,
    };
    let output = if input.is_empty() {
        Vec::new()
    } else {
        let params = params_for(&a.common, input.len())?;
        let options = OrpOptions {
            record: false,
            ..OrpOptions::default()
        };
        let (out, retries) = with_retry(&params, a.retries, |p| {
            if sort {
                bucket_osort_with(&input, p, &options).map(|r| r.output)
            } else {
                bucket_orp_with(&input, p, &options).map(|r| r.output)
            }
        })?;
        if retries > 0 {
            log::info!("finished after {retries} retries");
        }
        out
    };
    let encoded = match a.format {
        Format::Text => write_text(&output),
        Format::Binary => write_binary(&output, a.payload_width),
    };
    fs::write(&a.output, encoded)?;
    Ok(())
}

/// One decimal key per line; blank lines are skipped.
pub fn read_text(bytes: &[u8]) -> Result<Vec<Element>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<u64>()
                .map(Element::real)
                .map_err(|e| Error::Input(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn write_text(elements: &[Element]) -> Vec<u8> {
    let mut s = String::with_capacity(elements.len() * 8);
    for e in elements {
        s.push_str(&e.sort_key.to_string());
        s.push('\n');
    }
    s.into_bytes()
}

/// Little-endian records of an 8-byte key followed by `width` payload bytes.
pub fn read_binary(bytes: &[u8], width: usize) -> Result<Vec<Element>> {
    let record = 8 + width;
    if !bytes.len().is_multiple_of(record) {
        return Err(Error::Input(format!(
            "{} bytes is not a whole number of {record}-byte records",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(record)
        .map(|r| {
            let key = u64::from_le_bytes(r[..8].try_into().expect("8-byte key"));
            Element::with_payload(key, &r[8..])
        })
        .collect())
}

pub fn write_binary(elements: &[Element], width: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(elements.len() * (8 + width));
    for e in elements {
        out.extend_from_slice(&e.sort_key.to_le_bytes());
        let mut payload = e.payload.to_vec();
        payload.resize(width, 0);
        out.extend_from_slice(&payload);
    }
    out
}

/// `n` keys drawn from the input stream of `seed`.
pub fn synthetic_input(n: usize, seed: u64) -> Vec<Element> {
    let mut rng = RngStream::new(seed, StreamTag::new(Purpose::Input, 0));
    (0..n).map(|_| Element::real(rng.below(1 << 32))).collect()
}

fn trace_command(a: &TraceArgs, out: &mut dyn Write) -> Result<()> {
    let input = match (&a.input, a.n) {
        (Some(path), _) => read_text(&fs::read(path)?)?,
        (None, Some(n)) => synthetic_input(n, a.common.seed),
        (None, None) => {
            return Err(Error::InvalidParams("trace needs --n or --input".into()));
        }
    };
    let trace = run_traced(a.algo, &a.common, &input)?;
    match &a.output {
        Some(p) => trace.write_text(io::BufWriter::new(fs::File::create(p)?))?,
        None => trace.write_text(out)?,
    }
    Ok(())
}

fn run_traced(algo: Algorithm, common: &Common, input: &[Element]) -> Result<Trace> {
    let params = || params_for(common, input.len());
    Ok(match algo {
        Algorithm::BinAssignment => random_bin_assignment(input, &params()?)?.trace,
        Algorithm::Orp => bucket_orp_with(input, &params()?, &OrpOptions::default())?.trace,
        Algorithm::BucketSort => {
            bucket_osort_with(input, &params()?, &OrpOptions::default())?.trace
        }
        Algorithm::MergeSort => merge_sort_baseline_with(input, common.disks, true)?.trace,
        Algorithm::Bitonic => bitonic_baseline(input, true)?.trace,
    })
}

/// One measured run of `algo` on the synthetic input of size `n`, as a CSV
/// row. With `locality`, the bucket algorithms use the bitonic MergeSplit.
pub fn bench_row(algo: Algorithm, common: &Common, n: usize, locality: bool) -> Result<String> {
    let input = synthetic_input(n, common.seed);
    let mode: ClientMode = common.mode.into();
    let options = OrpOptions {
        record: false,
        ..OrpOptions::default()
    };
    let bucket_params = || -> Result<Params> {
        let p = params_for(common, n)?;
        if locality && p.engine == Engine::Direct {
            p.with_engine(Engine::Bitonic)
        } else {
            Ok(p)
        }
    };
    let (measured, comparisons, moves): (u64, u64, u64) = match algo {
        Algorithm::BinAssignment => {
            let p = bucket_params()?;
            let mut m = crate::memory::Memory::new(
                crate::memory::MemoryConfig::new(p.z, p.client_mode)
                    .with_disks(p.disks)
                    .counting_only(),
            );
            let x = m.load(input, 0);
            let mut labels = RngStream::new(p.seed, StreamTag::LABELS);
            crate::bin_assign::place(&mut m, x, &p, &mut labels)?;
            let before = m.counters();
            crate::bin_assign::route_levels(&mut m, &p, None)?;
            let c = m.counters();
            (c.since(&before).accesses(), c.comparisons, c.moves)
        }
        Algorithm::Orp => {
            let r = bucket_orp_with(&input, &bucket_params()?, &options)?;
            (
                r.phases.accesses(),
                r.counters.comparisons,
                r.counters.moves,
            )
        }
        Algorithm::BucketSort => {
            let r = bucket_osort_with(&input, &bucket_params()?, &options)?;
            sort_cols(&r)
        }
        Algorithm::MergeSort => sort_cols(&merge_sort_baseline_with(&input, common.disks, false)?),
        Algorithm::Bitonic => sort_cols(&bitonic_baseline(&input, false)?),
    };
    let predicted = predict_costs(algo, n, common.z, mode).total();
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{}",
        algo,
        n,
        common.z,
        mode,
        measured,
        predicted,
        comparisons,
        moves,
        common.disks.unwrap_or(0),
        common.seed
    ))
}

fn sort_cols(r: &SortResult) -> (u64, u64, u64) {
    (r.accesses, r.counters.comparisons, r.counters.moves)
}

/// Rows in grid order: ascending `n`, then algorithms as given.
pub fn bench_csv(
    common: &Common,
    ns: &[usize],
    algos: &[Algorithm],
    locality: bool,
) -> Result<String> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut csv = format!("{CSV_HEADER}\n");
    for &n in &ns {
        for &algo in algos {
            csv.push_str(&bench_row(algo, common, n, locality)?);
            csv.push('\n');
        }
    }
    Ok(csv)
}

pub fn overflow_csv(a: &OverflowArgs) -> Result<String> {
    let mut grid: Vec<(usize, usize)> =
        a.n.iter()
            .flat_map(|&n| a.z.iter().map(move |&z| (n, z)))
            .collect();
    grid.sort_unstable();
    grid.dedup();
    let mut csv = format!("{OVERFLOW_CSV_HEADER}\n");
    for (n, z) in grid {
        let s = overflow_monte_carlo(n, z, a.trials, a.seed)?;
        let e = epsilon_bound(n, z);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            n,
            z,
            s.b,
            e.levels,
            a.trials,
            s.any_rate(),
            s.max_bucket_rate(),
            s.final_bucket_rate(),
            per_bucket_bound(z),
            e.value,
            a.seed
        ));
    }
    Ok(csv)
}

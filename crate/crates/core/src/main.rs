use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use gdc2::archive::{ArchivePaths, ArchiveReader};
use gdc2::codec::decode_descriptor;
use gdc2::fasta::write_fasta;
use gdc2::gen::{generate, write_corpus, GenConfig};
use gdc2::pipeline::{self, CompressOptions, Target};
use gdc2::{Params, RefFraction};

#[derive(Parser)]
#[command(
    name = "gdc2",
    version,
    about = "Two-level referential compressor for genome collections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress FASTA files against a reference.
    Compress(CompressArgs),
    /// Restore every input file.
    Decompress(DecompressArgs),
    /// Decode a single sequence by archive ordinal or id.
    Extract(ExtractArgs),
    /// Show archive header, parameters and per-sequence sizes.
    Info { prefix: PathBuf },
    /// Write a synthetic reference and mutated collection.
    Gen(GenArgs),
}

#[derive(Args)]
struct Threads {
    /// Total threads; one drives level 2, the rest do level 1.
    #[arg(long, env = "GDC2_THREADS", default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,
}

impl Threads {
    fn l1_workers(&self) -> usize {
        (self.threads as usize).saturating_sub(1).max(1)
    }
}

#[derive(Args)]
struct CompressArgs {
    #[arg(short = 'r', long = "reference")]
    reference: PathBuf,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 15)]
    h1m: u32,
    #[arg(long, default_value_t = 4)]
    h1e: u32,
    #[arg(long, default_value_t = 11)]
    h2: u32,
    /// Also try two-symbol insertions and deletions.
    #[arg(long)]
    indel2: bool,
    /// Share of sequences indexed for level 2, e.g. 30%.
    #[arg(long, default_value = "100%")]
    ref_fraction: RefFraction,
    /// Disable second-level factoring.
    #[arg(long)]
    no_level2: bool,
    /// Do not store the reference in the archive.
    #[arg(long)]
    no_ref: bool,
    #[command(flatten)]
    threads: Threads,
}

#[derive(Args)]
struct DecompressArgs {
    #[arg(short = 'o', long = "output", required_unless_present = "stdout")]
    output: Option<PathBuf>,
    prefix: PathBuf,
    /// Write all records to standard output.
    #[arg(long)]
    stdout: bool,
    /// Reference FASTA for archives written with --no-ref.
    #[arg(short = 'r', long = "reference")]
    reference: Option<PathBuf>,
    #[command(flatten)]
    threads: Threads,
}

#[derive(Args)]
struct ExtractArgs {
    /// Archive ordinal (digits) or sequence id.
    #[arg(short = 'n', long = "target")]
    target: Target,
    prefix: PathBuf,
    /// Output FASTA; standard output when absent.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    #[arg(short = 'r', long = "reference")]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Reference length.
    #[arg(short = 'r', long = "ref-len")]
    ref_len: usize,
    /// Number of collection sequences.
    #[arg(short = 'n', long = "count")]
    count: usize,
    #[arg(long, default_value_t = 0.001)]
    snp: f64,
    #[arg(long, default_value_t = 0.0)]
    indel: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Founder haplotypes; 0 mutates every sequence independently.
    #[arg(long, default_value_t = 10)]
    founders: usize,
    /// Mean founder segment length.
    #[arg(long, default_value_t = 50_000)]
    segment_mean: usize,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

fn stats_line(cmd: &str, raw: u64, compressed: u64, elapsed: Duration, extra: &[(&str, String)]) {
    let secs = elapsed.as_secs_f64();
    let ratio = if compressed == 0 {
        0.0
    } else {
        raw as f64 / compressed as f64
    };
    let mbs = raw as f64 / 1e6 / secs.max(1e-9);
    eprintln!("{cmd}: {raw} raw bytes, {compressed} compressed bytes, ratio {ratio:.2}, {secs:.3} s, {mbs:.2} MB/s");
    let mut line = format!(
        "stats cmd={cmd} raw_bytes={raw} compressed_bytes={compressed} ratio={ratio:.4} elapsed_s={secs:.6} mb_per_s={mbs:.4}"
    );
    for (k, v) in extra {
        line.push_str(&format!(" {k}={v}"));
    }
    eprintln!("{line}");
}

fn collection_size(prefix: &std::path::Path) -> anyhow::Result<u64> {
    let paths = ArchivePaths::new(prefix);
    let len = |p: &PathBuf| {
        std::fs::metadata(p)
            .map(|m| m.len())
            .with_context(|| p.display().to_string())
    };
    Ok(len(&paths.desc)? + len(&paths.rc)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Compress(a) => {
            let params = Params {
                h1m: a.h1m,
                h1e: a.h1e,
                h2: a.h2,
                indel2: a.indel2,
                level2: !a.no_level2,
                ref_fraction: a.ref_fraction,
                l1_workers: a.threads.l1_workers(),
                ..Params::default()
            };
            let stats = pipeline::compress(&CompressOptions {
                reference: a.reference,
                inputs: a.inputs,
                output: a.output,
                params,
                store_reference: !a.no_ref,
            })?;
            let r = &stats.report;
            stats_line(
                "compress",
                r.raw_bytes,
                stats.sizes.collection(),
                r.elapsed,
                &[
                    ("sequences", r.sequences.to_string()),
                    ("desc_bytes", stats.sizes.desc.to_string()),
                    ("rc_bytes", stats.sizes.rc.to_string()),
                    ("ref_bytes", stats.sizes.reference.to_string()),
                    ("l1_workers", a.threads.l1_workers().to_string()),
                    ("ref_index_capacity", r.ref_index_capacity.to_string()),
                    (
                        "tuple_index_capacity",
                        r.tuple_index_capacities.last().copied().unwrap_or(0).to_string(),
                    ),
                    ("indexed_streams", r.indexed_streams.to_string()),
                ],
            );
        }
        Command::Decompress(a) => {
            let workers = a.threads.l1_workers();
            let compressed = collection_size(&a.prefix)?;
            let stats = if a.stdout {
                let stdout = io::stdout();
                let mut out = BufWriter::with_capacity(1 << 20, stdout.lock());
                pipeline::decompress_to_writer(&a.prefix, a.reference.as_deref(), &mut out, workers)?
            } else {
                let dir = a.output.expect("clap enforces -o without --stdout");
                pipeline::decompress(&a.prefix, &dir, a.reference.as_deref(), workers)?
            };
            stats_line(
                "decompress",
                stats.raw_bytes,
                compressed,
                stats.elapsed,
                &[
                    ("sequences", stats.sequences.to_string()),
                    ("files", stats.files.to_string()),
                ],
            );
        }
        Command::Extract(a) => {
            let compressed = collection_size(&a.prefix)?;
            let x = pipeline::extract(&a.prefix, &a.target, a.reference.as_deref())?;
            let mut bytes = Vec::new();
            write_fasta(&mut bytes, &x.sequence.id, &x.sequence.symbols, x.sequence.line_width)?;
            match &a.output {
                Some(p) => std::fs::write(p, &bytes).with_context(|| p.display().to_string())?,
                None => io::stdout().lock().write_all(&bytes)?,
            }
            stats_line(
                "extract",
                x.meta.seq_len,
                compressed,
                x.elapsed,
                &[
                    ("ordinal", x.meta.archive_ordinal.to_string()),
                    ("decoded_streams", x.decoded_streams.to_string()),
                ],
            );
        }
        Command::Info { prefix } => {
            let started = Instant::now();
            let reader = ArchiveReader::open(&prefix)?;
            let h = reader.header();
            let metas = decode_descriptor(&reader.descriptor()?)?;
            let mut out = io::stdout().lock();
            writeln!(out, "format version   {}", h.version)?;
            writeln!(out, "sequences        {}", h.sequence_count())?;
            writeln!(
                out,
                "h1m h1e h2       {} {} {}",
                h.params.h1m, h.params.h1e, h.params.h2
            )?;
            writeln!(
                out,
                "weights          literal {} match {}",
                h.params.literal_weight, h.params.match_weight
            )?;
            writeln!(out, "indel2           {}", h.params.indel2)?;
            writeln!(out, "level2           {}", h.params.level2)?;
            writeln!(out, "ref fraction     {}", h.params.ref_fraction)?;
            writeln!(out, "indexed streams  {}", h.ref_limit)?;
            writeln!(
                out,
                "reference        {} symbols, crc32 {:08x}, stored {}",
                h.reference_len, h.reference_crc, h.has_reference
            )?;
            writeln!(out, "ordinal\tbytes\tsymbols\tfile\tid")?;
            let mut by_ordinal: Vec<_> = metas.iter().collect();
            by_ordinal.sort_by_key(|m| m.archive_ordinal);
            let mut raw = 0;
            for m in by_ordinal {
                let (s, e) = h
                    .segment(m.archive_ordinal)
                    .ok_or_else(|| anyhow::anyhow!("descriptor ordinal {} out of range", m.archive_ordinal))?;
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    m.archive_ordinal,
                    e - s,
                    m.seq_len,
                    m.file_name,
                    m.seq_id
                )?;
                raw += m.seq_len;
            }
            stats_line("info", raw, collection_size(&prefix)?, started.elapsed(), &[]);
        }
        Command::Gen(a) => {
            let started = Instant::now();
            let corpus = generate(&GenConfig {
                ref_len: a.ref_len,
                count: a.count,
                snp_rate: a.snp,
                indel_rate: a.indel,
                seed: a.seed,
                founders: a.founders,
                segment_mean: a.segment_mean,
            })?;
            let files = write_corpus(&corpus, &a.output)?;
            eprintln!("wrote {} and {}", files.reference.display(), files.collection.display());
            let raw: u64 = corpus.sequences.iter().map(|s| s.len() as u64).sum();
            stats_line(
                "gen",
                raw,
                0,
                started.elapsed(),
                &[("sequences", corpus.sequences.len().to_string())],
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e)
            if e.chain().any(|c| {
                c.downcast_ref::<io::Error>()
                    .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1).map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

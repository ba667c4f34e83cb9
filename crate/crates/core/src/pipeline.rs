//! Compression, decompression and single-sequence extraction.
//!
//! Compression runs `l1_workers` level-1 threads fed from a bounded input
//! queue; their tuple streams go through a bounded FIFO to the calling
//! thread, which does all level-2 factoring, coding and indexing. The order
//! in which streams leave the FIFO defines the archive ordinals.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::bounded;
use flate2::Crc;

use crate::archive::{
    read_archive, write_archive, Archive, ArchiveHeader, ArchiveReader, ArchiveSizes, FORMAT_VERSION,
};
use crate::codec::{
    decode_descriptor, decode_reference, decode_stream, encode_descriptor, encode_reference, encode_stream,
};
use crate::error::{Error, Result};
use crate::fasta::{count_records, write_fasta, FastaReader, FastaRecordMeta};
use crate::lz2::{StreamStore, TupleIndex};
use crate::model::{L1Tuple, L2Element, Params, Sequence};
use crate::ref_index::RefIndex;
use crate::{lz1, lz2};

/// Largest ordinal a level-2 match can name.
pub const MAX_INDEXED_STREAMS: u64 = 65_535;

fn crc32(bytes: &[u8]) -> u32 {
    let mut c = Crc::new();
    c.update(bytes);
    c.sum()
}

/// What compression produced, besides the archive itself.
#[derive(Clone, Debug, Default)]
pub struct CompressReport {
    pub sequences: usize,
    pub raw_bytes: u64,
    pub ref_index_capacity: usize,
    /// Level-2 table capacity after each sequence, in archive order.
    pub tuple_index_capacities: Vec<usize>,
    pub indexed_streams: usize,
    pub level2_matches: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct CompressStats {
    pub report: CompressReport,
    pub sizes: ArchiveSizes,
}

impl CompressStats {
    /// Raw symbol bytes over descriptor plus collection bytes.
    pub fn ratio(&self) -> f64 {
        self.report.raw_bytes as f64 / self.sizes.collection().max(1) as f64
    }

    pub fn mb_per_s(&self) -> f64 {
        mb_per_s(self.report.raw_bytes, self.report.elapsed)
    }
}

pub(crate) fn mb_per_s(bytes: u64, elapsed: Duration) -> f64 {
    bytes as f64 / 1e6 / elapsed.as_secs_f64().max(1e-9)
}

/// Compresses `sequences` (exactly `count` of them) against `reference`.
pub fn compress_sequences<I>(
    reference: &[u8],
    sequences: I,
    count: usize,
    params: &Params,
    store_reference: bool,
) -> Result<(Archive, CompressReport)>
where
    I: Iterator<Item = Result<Sequence>> + Send,
{
    params.validate()?;
    let started = Instant::now();
    if count == 0 {
        return Err(Error::Config("no input sequences".into()));
    }
    let ref_limit = params.ref_limit(count as u64);
    if ref_limit > MAX_INDEXED_STREAMS {
        return Err(Error::Unsupported(format!(
            "{ref_limit} second-level reference streams requested; at most {MAX_INDEXED_STREAMS} \
             can be addressed (lower the reference fraction)"
        )));
    }
    let stored_reference = store_reference.then(|| encode_reference(reference)).transpose()?;
    let idx = RefIndex::build(reference.to_vec(), params.h1m)?;

    let workers = params.l1_workers;
    let (in_tx, in_rx) = bounded::<(usize, Sequence)>(2 * workers);
    let (fifo_tx, fifo_rx) = bounded::<(usize, FastaRecordMeta, Vec<L1Tuple>)>(2 * workers);
    let input_error: Mutex<Option<Error>> = Mutex::new(None);

    let level2 = thread::scope(|s| {
        let input_error = &input_error;
        s.spawn(move || {
            for (i, item) in sequences.enumerate() {
                match item {
                    Ok(seq) => {
                        if in_tx.send((i, seq)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        *input_error.lock().unwrap() = Some(e);
                        break;
                    }
                }
            }
        });
        for _ in 0..workers {
            let rx = in_rx.clone();
            let tx = fifo_tx.clone();
            let idx = &idx;
            s.spawn(move || {
                for (i, seq) in rx {
                    let tuples = lz1::factor(&seq.symbols, idx, params);
                    if tx.send((i, FastaRecordMeta::of(&seq), tuples)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(in_rx);
        drop(fifo_tx);
        encode_level2(fifo_rx, count, ref_limit, params)
    });
    if let Some(e) = input_error.into_inner().unwrap() {
        return Err(e);
    }
    let (metas, offsets, body, mut report) = level2?;

    let archive = Archive {
        header: ArchiveHeader {
            version: FORMAT_VERSION,
            params: params.clone(),
            ref_limit,
            reference_len: reference.len() as u64,
            reference_crc: crc32(reference),
            has_reference: stored_reference.is_some(),
            offsets,
        },
        descriptor: encode_descriptor(&metas)?,
        body,
        reference: stored_reference,
    };
    report.ref_index_capacity = idx.table_size();
    report.elapsed = started.elapsed();
    Ok((archive, report))
}

type Level2Output = (Vec<FastaRecordMeta>, Vec<u64>, Vec<u8>, CompressReport);

fn encode_level2(
    fifo: crossbeam_channel::Receiver<(usize, FastaRecordMeta, Vec<L1Tuple>)>,
    count: usize,
    ref_limit: u64,
    params: &Params,
) -> Result<Level2Output> {
    let mut tuple_index = TupleIndex::new(params, ref_limit);
    let mut metas: Vec<Option<FastaRecordMeta>> = vec![None; count];
    let mut offsets = vec![0u64];
    let mut body = Vec::new();
    let mut report = CompressReport::default();
    let mut ordinal = 0u32;
    for (input_pos, mut meta, tuples) in fifo {
        ordinal += 1;
        let slot = metas
            .get_mut(input_pos)
            .ok_or_else(|| Error::Internal(format!("more than the {count} counted input sequences")))?;
        let elems: Vec<L2Element> = if params.level2 {
            tuple_index.factor(&tuples)
        } else {
            tuples.iter().copied().map(L2Element::Tuple).collect()
        };
        report.level2_matches += elems.iter().filter(|e| matches!(e, L2Element::Match2 { .. })).count();
        body.extend(encode_stream(&elems, tuple_index.store())?);
        offsets.push(body.len() as u64);
        if ordinal as u64 <= ref_limit {
            tuple_index.add_reference(ordinal, tuples)?;
        }
        report.tuple_index_capacities.push(tuple_index.capacity());
        report.raw_bytes += meta.seq_len;
        meta.archive_ordinal = ordinal;
        *slot = Some(meta);
    }
    report.sequences = ordinal as usize;
    report.indexed_streams = tuple_index.store().len();
    let metas = metas
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Internal(format!("fewer than the {count} counted input sequences")))?;
    Ok((metas, offsets, body, report))
}

/// Reads a reference FASTA; multiple records are concatenated.
pub fn read_reference_fasta(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut symbols = Vec::new();
    for rec in FastaReader::new(BufReader::new(file), path.display().to_string()) {
        symbols.extend(rec?.symbols);
    }
    Ok(symbols)
}

#[derive(Clone, Debug)]
pub struct CompressOptions {
    pub reference: PathBuf,
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
    pub params: Params,
    pub store_reference: bool,
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Compresses FASTA files into `<output>.gdc2_{desc,rc,ref}`.
pub fn compress(opts: &CompressOptions) -> Result<CompressStats> {
    if opts.inputs.is_empty() {
        return Err(Error::Config("no input files".into()));
    }
    let mut names = HashSet::new();
    for p in &opts.inputs {
        if !names.insert(display_name(p)) {
            return Err(Error::Config(format!(
                "two inputs share the file name '{}'",
                display_name(p)
            )));
        }
    }
    let started = Instant::now();
    let reference = read_reference_fasta(&opts.reference)?;
    let mut count = 0;
    for p in &opts.inputs {
        let f = File::open(p).map_err(|e| Error::io(p, e))?;
        count += count_records(BufReader::new(f)).map_err(|e| Error::io(p, e))?;
    }
    let inputs = opts.inputs.clone();
    let sequences = inputs.into_iter().flat_map(|p| {
        let name = display_name(&p);
        let reader: Box<dyn Iterator<Item = Result<Sequence>> + Send> = match File::open(&p) {
            Ok(f) => Box::new(FastaReader::new(BufReader::with_capacity(1 << 20, f), name)),
            Err(e) => Box::new(std::iter::once(Err(Error::io(&p, e)))),
        };
        reader
    });
    let (archive, mut report) = compress_sequences(&reference, sequences, count, &opts.params, opts.store_reference)?;
    let sizes = write_archive(&opts.output, &archive)?;
    report.elapsed = started.elapsed();
    Ok(CompressStats { report, sizes })
}

/// Decoded tuple streams of a whole archive.
pub struct DecodedCollection {
    pub header: ArchiveHeader,
    /// Records in original input order.
    pub metas: Vec<FastaRecordMeta>,
    pub reference: Vec<u8>,
    /// Level-1 stream of every sequence, indexed by `ordinal - 1`.
    pub streams: Vec<Vec<L1Tuple>>,
}

impl DecodedCollection {
    pub fn expand(&self, ordinal: u32) -> Result<Vec<u8>> {
        let tuples = self
            .streams
            .get((ordinal as usize).wrapping_sub(1))
            .ok_or_else(|| Error::UnknownTarget(format!("ordinal {ordinal}")))?;
        lz1::expand(tuples, &self.reference)
    }
}

fn resolve_reference(header: &ArchiveHeader, stored: Option<&[u8]>, external: Option<&[u8]>) -> Result<Vec<u8>> {
    let reference = match (external, stored) {
        (Some(r), _) => r.to_vec(),
        (None, Some(bytes)) => decode_reference(bytes)?,
        (None, None) => {
            return Err(Error::ReferenceAbsent(
                "archive was written without its reference; supply it explicitly".into(),
            ))
        }
    };
    if reference.len() as u64 != header.reference_len || crc32(&reference) != header.reference_crc {
        return Err(Error::Config(
            "reference does not match the one used for compression".into(),
        ));
    }
    Ok(reference)
}

/// Checks that descriptor records and header agree, returning the record
/// index for every archive ordinal.
fn ordinal_map(metas: &[FastaRecordMeta], header: &ArchiveHeader) -> Result<Vec<usize>> {
    let n = header.sequence_count();
    if metas.len() != n {
        return Err(Error::corrupt(format!(
            "descriptor lists {} records, collection holds {n}",
            metas.len()
        )));
    }
    let mut by_ordinal = vec![usize::MAX; n];
    for (i, m) in metas.iter().enumerate() {
        let k = m.archive_ordinal as usize;
        if k == 0 || k > n || by_ordinal[k - 1] != usize::MAX {
            return Err(Error::corrupt(format!("bad archive ordinal {k} in descriptor")));
        }
        if m.line_width == 0 {
            return Err(Error::corrupt("zero line width in descriptor"));
        }
        by_ordinal[k - 1] = i;
    }
    Ok(by_ordinal)
}

/// Decodes one coded segment into its level-1 stream, checking that it
/// covers exactly `expected_len` symbols.
fn decode_segment(segment: &[u8], store: &StreamStore, expected_len: u64) -> Result<Vec<L1Tuple>> {
    let elems = decode_stream(segment, store)?;
    let tuples = lz2::expand(&elems, store)?;
    let covered: u64 = tuples.iter().map(L1Tuple::coverage).sum();
    if covered != expected_len {
        return Err(Error::corrupt(format!(
            "segment decodes to {covered} symbols, descriptor says {expected_len}"
        )));
    }
    Ok(tuples)
}

pub fn decode_collection(archive: &Archive, external_reference: Option<&[u8]>) -> Result<DecodedCollection> {
    let header = &archive.header;
    let metas = decode_descriptor(&archive.descriptor)?;
    let by_ordinal = ordinal_map(&metas, header)?;
    let reference = resolve_reference(header, archive.reference.as_deref(), external_reference)?;
    let mut store = StreamStore::new();
    let mut streams = Vec::with_capacity(by_ordinal.len());
    for (k, &rec) in by_ordinal.iter().enumerate() {
        let ordinal = k as u32 + 1;
        let (start, end) = header.segment(ordinal).expect("ordinal in range");
        let seg = &archive.body[start as usize..end as usize];
        let tuples = decode_segment(seg, &store, metas[rec].seq_len)?;
        if ordinal as u64 <= header.ref_limit {
            store.push(ordinal, tuples.clone())?;
        }
        streams.push(tuples);
    }
    Ok(DecodedCollection {
        header: header.clone(),
        metas,
        reference,
        streams,
    })
}

#[derive(Clone, Debug, Default)]
pub struct DecompressStats {
    pub sequences: usize,
    pub raw_bytes: u64,
    pub files: usize,
    pub elapsed: Duration,
}

impl DecompressStats {
    pub fn mb_per_s(&self) -> f64 {
        mb_per_s(self.raw_bytes, self.elapsed)
    }
}

/// Expands every record in input order with `workers` threads, handing
/// each formatted FASTA record to `sink` in order.
pub fn emit_records(
    decoded: &DecodedCollection,
    workers: usize,
    mut sink: impl FnMut(&FastaRecordMeta, &[u8]) -> Result<()>,
) -> Result<u64> {
    let workers = workers.max(1);
    let mut raw = 0u64;
    for batch in decoded.metas.chunks(workers) {
        let formatted: Vec<Result<Vec<u8>>> = thread::scope(|s| {
            let handles: Vec<_> = batch
                .iter()
                .map(|m| {
                    s.spawn(move || {
                        let symbols = decoded.expand(m.archive_ordinal)?;
                        let mut out = Vec::with_capacity(symbols.len() + symbols.len() / 60 + 64);
                        write_fasta(&mut out, &m.seq_id, &symbols, m.line_width as usize).expect("writing to a Vec");
                        Ok(out)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("expander panicked"))
                .collect()
        });
        for (m, rec) in batch.iter().zip(formatted) {
            sink(m, &rec?)?;
            raw += m.seq_len;
        }
    }
    Ok(raw)
}

fn load_external_reference(path: Option<&Path>) -> Result<Option<Vec<u8>>> {
    path.map(read_reference_fasta).transpose()
}

/// Decompresses into `out_dir`, recreating every input file.
pub fn decompress(prefix: &Path, out_dir: &Path, reference: Option<&Path>, workers: usize) -> Result<DecompressStats> {
    let started = Instant::now();
    let archive = read_archive(prefix)?;
    let external = load_external_reference(reference)?;
    let decoded = decode_collection(&archive, external.as_deref())?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut current: Option<(String, BufWriter<File>)> = None;
    let mut seen_files = HashSet::new();
    let raw = emit_records(&decoded, workers, |m, rec| {
        if current.as_ref().map(|(name, _)| name) != Some(&m.file_name) {
            if let Some((name, mut w)) = current.take() {
                w.flush().map_err(|e| Error::io(out_dir.join(&name), e))?;
            }
            let safe = Path::new(&m.file_name)
                .file_name()
                .ok_or_else(|| Error::corrupt(format!("unusable file name '{}'", m.file_name)))?;
            let path = out_dir.join(safe);
            let file = if seen_files.insert(m.file_name.clone()) {
                File::create(&path)
            } else {
                File::options().append(true).open(&path)
            }
            .map_err(|e| Error::io(&path, e))?;
            current = Some((m.file_name.clone(), BufWriter::with_capacity(1 << 20, file)));
        }
        let (name, w) = current.as_mut().expect("writer open");
        w.write_all(rec).map_err(|e| Error::io(out_dir.join(name.as_str()), e))
    })?;
    if let Some((name, mut w)) = current.take() {
        w.flush().map_err(|e| Error::io(out_dir.join(name), e))?;
    }
    Ok(DecompressStats {
        sequences: decoded.metas.len(),
        raw_bytes: raw,
        files: seen_files.len(),
        elapsed: started.elapsed(),
    })
}

/// Decompresses every record, in input order, into one writer.
pub fn decompress_to_writer<W: Write>(
    prefix: &Path,
    reference: Option<&Path>,
    out: &mut W,
    workers: usize,
) -> Result<DecompressStats> {
    let started = Instant::now();
    let archive = read_archive(prefix)?;
    let external = load_external_reference(reference)?;
    let decoded = decode_collection(&archive, external.as_deref())?;
    let mut files = HashSet::new();
    let raw = emit_records(&decoded, workers, |m, rec| {
        files.insert(m.file_name.clone());
        out.write_all(rec).map_err(|e| Error::io("<output>", e))
    })?;
    out.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(DecompressStats {
        sequences: decoded.metas.len(),
        raw_bytes: raw,
        files: files.len(),
        elapsed: started.elapsed(),
    })
}

/// Sequence selector for [`extract`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Ordinal(u32),
    Id(String),
}

impl std::str::FromStr for Target {
    type Err = std::convert::Infallible;

    /// All-digit text is an archive ordinal; anything else is a sequence id.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<u32>() {
            Ok(n) if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) => Target::Ordinal(n),
            _ => Target::Id(s.to_string()),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Extracted {
    pub meta: FastaRecordMeta,
    pub sequence: Sequence,
    /// Number of coded segments that had to be decoded.
    pub decoded_streams: usize,
    pub elapsed: Duration,
}

/// Decodes one sequence, touching only the indexed streams before it.
pub fn extract(prefix: &Path, target: &Target, reference: Option<&Path>) -> Result<Extracted> {
    let started = Instant::now();
    let mut reader = ArchiveReader::open(prefix)?;
    let header = reader.header().clone();
    let metas = decode_descriptor(&reader.descriptor()?)?;
    let by_ordinal = ordinal_map(&metas, &header)?;
    let rec = match target {
        Target::Ordinal(k) => by_ordinal
            .get((*k as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::UnknownTarget(format!("ordinal {k} (archive holds {})", metas.len())))?,
        Target::Id(id) => metas
            .iter()
            .position(|m| &m.seq_id == id)
            .ok_or_else(|| Error::UnknownTarget(format!("id '{id}'")))?,
    };
    let meta = metas[rec].clone();
    let m = meta.archive_ordinal;

    let external = load_external_reference(reference)?;
    let stored = if external.is_none() { reader.reference()? } else { None };
    let reference = resolve_reference(&header, stored.as_deref(), external.as_deref())?;

    let mut store = StreamStore::new();
    let mut decoded = 0;
    let prior = (m as u64 - 1).min(header.ref_limit) as u32;
    for j in 1..=prior {
        let seg = reader.segment(j)?;
        let tuples = decode_segment(&seg, &store, metas[by_ordinal[j as usize - 1]].seq_len)?;
        store.push(j, tuples)?;
        decoded += 1;
    }
    let tuples = decode_segment(&reader.segment(m)?, &store, meta.seq_len)?;
    decoded += 1;
    let symbols = lz1::expand(&tuples, &reference)?;
    let sequence = Sequence {
        id: meta.seq_id.clone(),
        ordinal: m,
        symbols,
        source_file: meta.file_name.clone(),
        line_width: meta.line_width as usize,
    };
    Ok(Extracted {
        meta,
        sequence,
        decoded_streams: decoded,
        elapsed: started.elapsed(),
    })
}

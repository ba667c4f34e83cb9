//! Seeded synthetic collections: a random ACGT reference plus mutated copies.
//!
//! With `founders == 0` every sequence carries its own independent SNPs and
//! indels. With `founders > 0` a pool of founder haplotypes is mutated once
//! and every sequence is a mosaic of founder segments, so sequences share
//! variants with each other the way individuals of one population do.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fasta::{write_fasta, DEFAULT_LINE_WIDTH};

const BASES: &[u8; 4] = b"ACGT";

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub ref_len: usize,
    pub count: usize,
    pub snp_rate: f64,
    pub indel_rate: f64,
    pub seed: u64,
    pub founders: usize,
    /// Mean mosaic segment length; segment lengths are uniform on `1..=2*mean`.
    pub segment_mean: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            ref_len: 1_000_000,
            count: 100,
            snp_rate: 0.001,
            indel_rate: 0.0,
            seed: 0,
            founders: 10,
            segment_mean: 50_000,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("snp", self.snp_rate), ("indel", self.indel_rate)] {
            if !(0.0..=0.5).contains(&r) {
                return Err(Error::Config(format!("{name} rate {r} outside [0, 0.5]")));
            }
        }
        if self.ref_len == 0 || self.segment_mean == 0 {
            return Err(Error::Config(
                "reference length and segment mean must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A variant anchored at a reference position.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Event {
    Snp(u8),
    /// Symbols inserted before the anchor.
    Insert(Vec<u8>),
    /// Reference symbols skipped from the anchor on.
    Delete(usize),
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub reference: Vec<u8>,
    pub sequences: Vec<Vec<u8>>,
    /// SNP events applied to each sequence.
    pub substitutions: Vec<usize>,
}

fn geometric_half(rng: &mut ChaCha8Rng) -> usize {
    let mut n = 1;
    while rng.gen_bool(0.5) {
        n += 1;
    }
    n
}

/// Events sorted by anchor, one per position at most.
fn draw_events(rng: &mut ChaCha8Rng, reference: &[u8], snp: f64, indel: f64) -> Vec<(usize, Event)> {
    let p = snp + indel;
    let mut events = Vec::new();
    if p <= 0.0 {
        return events;
    }
    let log_q = (1.0 - p).ln();
    let mut pos = 0usize;
    loop {
        // gap to the next event is geometric with success probability p
        let gap = if p >= 1.0 {
            0
        } else {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            (u.ln() / log_q).floor().min(reference.len() as f64) as usize
        };
        pos = match pos.checked_add(gap) {
            Some(p) if p < reference.len() => p,
            _ => break,
        };
        let event = if rng.gen_bool(snp / p) {
            let old = reference[pos];
            let choices: Vec<u8> = BASES.iter().copied().filter(|&b| b != old).collect();
            Event::Snp(choices[rng.gen_range(0..choices.len())])
        } else if rng.gen_bool(0.5) {
            let n = geometric_half(rng);
            Event::Insert((0..n).map(|_| BASES[rng.gen_range(0..4)]).collect())
        } else {
            Event::Delete(geometric_half(rng))
        };
        events.push((pos, event));
        pos += 1;
    }
    events
}

/// Appends `reference[start..end]` with `events` applied; `cursor` tracks the
/// next unconsumed reference position across calls.
fn apply(reference: &[u8], events: &[(usize, Event)], end: usize, cursor: &mut usize, out: &mut Vec<u8>) -> usize {
    let from = events.partition_point(|(p, _)| *p < *cursor);
    let to = events.partition_point(|(p, _)| *p < end);
    let mut snps = 0;
    for (p, e) in &events[from.min(to)..to] {
        if *p < *cursor {
            continue;
        }
        out.extend_from_slice(&reference[*cursor..*p]);
        *cursor = *p;
        match e {
            Event::Snp(b) => {
                out.push(*b);
                *cursor += 1;
                snps += 1;
            }
            Event::Insert(bytes) => out.extend_from_slice(bytes),
            Event::Delete(n) => *cursor = (*cursor + n).min(reference.len()),
        }
    }
    if *cursor < end {
        out.extend_from_slice(&reference[*cursor..end]);
        *cursor = end;
    }
    snps
}

pub fn generate(cfg: &GenConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let reference: Vec<u8> = (0..cfg.ref_len).map(|_| BASES[rng.gen_range(0..4)]).collect();
    let founders: Vec<Vec<(usize, Event)>> = (0..cfg.founders)
        .map(|_| draw_events(&mut rng, &reference, cfg.snp_rate, cfg.indel_rate))
        .collect();
    let mut sequences = Vec::with_capacity(cfg.count);
    let mut substitutions = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        let mut out = Vec::with_capacity(reference.len() + reference.len() / 100);
        let mut cursor = 0;
        let mut snps = 0;
        if founders.is_empty() {
            let events = draw_events(&mut rng, &reference, cfg.snp_rate, cfg.indel_rate);
            snps += apply(&reference, &events, reference.len(), &mut cursor, &mut out);
        } else {
            let mut start = 0;
            while start < reference.len() {
                let end = (start + rng.gen_range(1..=2 * cfg.segment_mean)).min(reference.len());
                let f = &founders[rng.gen_range(0..founders.len())];
                snps += apply(&reference, f, end, &mut cursor, &mut out);
                start = end;
            }
        }
        sequences.push(out);
        substitutions.push(snps);
    }
    Ok(Corpus {
        reference,
        sequences,
        substitutions,
    })
}

#[derive(Clone, Debug)]
pub struct CorpusFiles {
    pub reference: PathBuf,
    pub collection: PathBuf,
}

/// Writes `reference.fa` and a multi-record `collection.fa` into `dir`.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<CorpusFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = CorpusFiles {
        reference: dir.join("reference.fa"),
        collection: dir.join("collection.fa"),
    };
    let write = |path: &Path, records: &mut dyn Iterator<Item = (String, &[u8])>| -> Result<()> {
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::with_capacity(1 << 20, f);
        for (id, s) in records {
            write_fasta(&mut w, &id, s, DEFAULT_LINE_WIDTH).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    };
    write(
        &files.reference,
        &mut std::iter::once(("ref".to_string(), &corpus.reference[..])),
    )?;
    write(
        &files.collection,
        &mut corpus
            .sequences
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("sample{}", i + 1), &s[..])),
    )?;
    Ok(files)
}

#![allow(dead_code)]

use std::path::Path;

use gdc2::fasta::write_fasta;
use gdc2::lz1::{Step, Variant};
use gdc2::{L1Tuple, Sequence};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const ACGT: &[u8; 4] = b"ACGT";

pub fn random_dna(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| ACGT[rng.gen_range(0..4)]).collect()
}

/// Copy of `src` with per-position substitutions and 1..=4 symbol indels.
pub fn mutate(rng: &mut ChaCha8Rng, src: &[u8], snp: f64, indel: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(src.len() + src.len() / 50 + 8);
    let mut i = 0;
    while i < src.len() {
        let x: f64 = rng.gen();
        if x < snp {
            let b = src[i].to_ascii_uppercase();
            let alt = ACGT.iter().copied().filter(|&c| c != b).collect::<Vec<_>>();
            out.push(alt[rng.gen_range(0..alt.len())]);
            i += 1;
        } else if x < snp + indel {
            let n = rng.gen_range(1..=4);
            if rng.gen_bool(0.5) {
                out.extend(random_dna(rng, n));
            } else {
                i += n;
            }
        } else {
            out.push(src[i]);
            i += 1;
        }
    }
    out
}

/// Overwrites random stretches with N runs, lowercase and rarer IUPAC codes.
pub fn sprinkle(rng: &mut ChaCha8Rng, s: &mut [u8]) {
    if s.is_empty() {
        return;
    }
    if rng.gen_bool(0.4) {
        let len = rng.gen_range(1..=1000).min(s.len());
        let at = rng.gen_range(0..=s.len() - len);
        s[at..at + len].fill(b'N');
    }
    if rng.gen_bool(0.4) {
        let len = rng.gen_range(1..=2000).min(s.len());
        let at = rng.gen_range(0..=s.len() - len);
        s[at..at + len].make_ascii_lowercase();
    }
    if rng.gen_bool(0.2) {
        for _ in 0..rng.gen_range(1..10) {
            let at = rng.gen_range(0..s.len());
            s[at] = *b"RYKMSWn".get(rng.gen_range(0..7)).unwrap();
        }
    }
}

/// Collection where each sequence derives from the reference or from an
/// earlier sequence, so both factoring levels find work.
pub fn collection(rng: &mut ChaCha8Rng, reference: &[u8], count: usize, snp: f64, indel: f64) -> Vec<Sequence> {
    let mut seqs: Vec<Sequence> = Vec::with_capacity(count);
    for k in 0..count {
        let src = if k == 0 || rng.gen_bool(0.5) {
            reference
        } else {
            &seqs[rng.gen_range(0..k)].symbols
        };
        let mut s = mutate(rng, src, snp, indel);
        sprinkle(rng, &mut s);
        if s.is_empty() {
            s.push(b'A');
        }
        let mut q = Sequence::new(format!("s{k} sample"), s);
        q.source_file = "c.fa".into();
        q.line_width = [60, 70, 80][k % 3];
        seqs.push(q);
    }
    seqs
}

pub fn write_records(path: &Path, records: &[(&str, &[u8])], width: usize) {
    let mut out = Vec::new();
    for (id, s) in records {
        write_fasta(&mut out, id, s, width).unwrap();
    }
    std::fs::write(path, out).unwrap();
}

fn lcp(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Longest prefix of `s[i..]` occurring in `r`, smallest 1-based position on
/// ties, by exhaustive scan.
pub fn brute_longest(r: &[u8], s: &[u8], i: usize) -> (u32, usize) {
    let mut best = (0u32, 0usize);
    for p in 0..r.len() {
        let l = lcp(&r[p..], &s[i..]);
        if l > best.1 {
            best = (p as u32 + 1, l);
        }
    }
    best
}

/// Checks a traced level-1 factoring step by step. Indexed and unmatched
/// steps must agree with the exhaustive oracle; resumed steps must be the
/// first variant, in order, whose continuation reaches `h1e`; fresh lookups
/// may only happen when every variant fails.
pub fn check_trace(
    r: &[u8],
    s: &[u8],
    tuples: &[L1Tuple],
    steps: &[Step],
    h1m: usize,
    h1e: usize,
    variants: &[Variant],
) -> Result<usize, String> {
    let resume_len = |c: usize, at: usize, v: Variant| -> Option<usize> {
        let (lits, skip) = v.shape();
        let (si, ri) = (at + lits, c + skip);
        (si < s.len() && ri < r.len()).then(|| lcp(&r[ri..], &s[si..]))
    };
    let mut t = 0;
    let mut cursor: Option<usize> = None;
    let mut checked = 0;
    for step in steps {
        match *step {
            Step::Indexed { at } | Step::Unmatched { at } => {
                if let Some(c) = cursor {
                    for &v in variants {
                        if resume_len(c, at, v).is_some_and(|l| l >= h1e) {
                            return Err(format!("step at {at}: variant {v:?} was viable but skipped"));
                        }
                    }
                }
                let (pos, len) = brute_longest(r, s, at);
                let want = if len >= h1m {
                    L1Tuple::Match { pos, len: len as u32 }
                } else {
                    L1Tuple::Literal(gdc2::Symbol::new(s[at]).unwrap())
                };
                if tuples.get(t) != Some(&want) {
                    return Err(format!("step at {at}: got {:?}, oracle {want:?}", tuples.get(t)));
                }
                cursor = match want {
                    L1Tuple::Match { pos, len } => Some(pos as usize - 1 + len as usize),
                    L1Tuple::Literal(_) => None,
                };
                t += 1;
                checked += 1;
            }
            Step::Resumed { at, variant } => {
                let c = cursor.ok_or_else(|| format!("resumed at {at} without a previous match"))?;
                for &v in variants.iter().take_while(|&&v| v != variant) {
                    if resume_len(c, at, v).is_some_and(|l| l >= h1e) {
                        return Err(format!("resumed at {at} with {variant:?} but {v:?} comes first"));
                    }
                }
                let (lits, skip) = variant.shape();
                let len = resume_len(c, at, variant).ok_or("resume out of range")?;
                if len < h1e {
                    return Err(format!("resumed at {at} with length {len}"));
                }
                for k in 0..lits {
                    let want = L1Tuple::Literal(gdc2::Symbol::new(s[at + k]).unwrap());
                    if tuples.get(t + k) != Some(&want) {
                        return Err(format!("resumed at {at}: literal {k} mismatch"));
                    }
                }
                let want = L1Tuple::Match {
                    pos: (c + skip) as u32 + 1,
                    len: len as u32,
                };
                if tuples.get(t + lits) != Some(&want) {
                    return Err(format!(
                        "resumed at {at}: got {:?}, want {want:?}",
                        tuples.get(t + lits)
                    ));
                }
                cursor = Some(c + skip + len);
                t += lits + 1;
            }
        }
    }
    if t != tuples.len() {
        return Err(format!("{} tuples but steps account for {t}", tuples.len()));
    }
    Ok(checked)
}

/// Query sequence built from mutated pieces of `r` and random filler.
pub fn patchwork(rng: &mut ChaCha8Rng, r: &[u8], max_len: usize) -> Vec<u8> {
    let target = rng.gen_range(1..=max_len);
    let mut s = Vec::with_capacity(target + 64);
    while s.len() < target {
        if rng.gen_bool(0.8) && !r.is_empty() {
            let len = rng.gen_range(1..=r.len().min(300));
            let at = rng.gen_range(0..=r.len() - len);
            s.extend(mutate(rng, &r[at..at + len], 0.05, 0.03));
        } else {
            let n = rng.gen_range(1..20);
            s.extend(random_dna(rng, n));
        }
    }
    s.truncate(target);
    s
}

//! First-level factoring of a sequence against the reference.
//!
//! Greedy left to right. Right after a match, the variant checks below are
//! tried before the hash index is consulted; a resumed match only needs
//! `h1e` symbols instead of `h1m`.

use crate::error::{Error, Result};
use crate::model::{L1Tuple, Params, Symbol};
use crate::ref_index::{common_prefix_len, RefIndex};

/// A variant between two matches: how many sequence symbols become literals
/// and how many reference symbols are skipped before the match resumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Snp,
    Insertion1,
    Deletion1,
    Insertion2,
    Deletion2,
}

impl Variant {
    /// (literals emitted, reference symbols skipped)
    pub fn shape(self) -> (usize, usize) {
        match self {
            Variant::Snp => (1, 1),
            Variant::Insertion1 => (1, 0),
            Variant::Deletion1 => (0, 1),
            Variant::Insertion2 => (2, 0),
            Variant::Deletion2 => (0, 2),
        }
    }
}

const SINGLE: [Variant; 3] = [Variant::Snp, Variant::Insertion1, Variant::Deletion1];
const DOUBLE: [Variant; 5] = [
    Variant::Snp,
    Variant::Insertion1,
    Variant::Deletion1,
    Variant::Insertion2,
    Variant::Deletion2,
];

/// How one factoring step was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// Match found through the reference index, starting at this sequence offset.
    Indexed { at: usize },
    /// Index query at this offset found nothing; one literal emitted.
    Unmatched { at: usize },
    /// Continuation after a variant; the literals (if any) and the short
    /// match were emitted together.
    Resumed { at: usize, variant: Variant },
}

pub fn factor(seq: &[u8], idx: &RefIndex, params: &Params) -> Vec<L1Tuple> {
    factor_inner(seq, idx, params, &mut |_| {})
}

/// Like [`factor`], also reporting the decision taken at every step.
pub fn factor_traced(seq: &[u8], idx: &RefIndex, params: &Params) -> (Vec<L1Tuple>, Vec<Step>) {
    let mut steps = Vec::new();
    let tuples = factor_inner(seq, idx, params, &mut |s| steps.push(s));
    (tuples, steps)
}

fn factor_inner(seq: &[u8], idx: &RefIndex, params: &Params, trace: &mut dyn FnMut(Step)) -> Vec<L1Tuple> {
    let reference = idx.reference();
    let variants: &[Variant] = if params.indel2 { &DOUBLE } else { &SINGLE };
    let min_resume = params.h1e as usize;
    let mut out = Vec::new();
    let mut i = 0;
    // reference offset just past the previous match, while continuation is live
    let mut cursor: Option<usize> = None;

    while i < seq.len() {
        if let Some(c) = cursor {
            let resumed = variants.iter().find_map(|&v| {
                let (lits, skip) = v.shape();
                let (s, r) = (i + lits, c + skip);
                if s >= seq.len() || r >= reference.len() {
                    return None;
                }
                let len = common_prefix_len(&reference[r..], &seq[s..]);
                (len >= min_resume).then_some((v, r, len))
            });
            if let Some((variant, r, len)) = resumed {
                let lits = variant.shape().0;
                out.extend(seq[i..i + lits].iter().map(|&b| L1Tuple::Literal(Symbol(b))));
                out.push(L1Tuple::Match {
                    pos: r as u32 + 1,
                    len: len as u32,
                });
                trace(Step::Resumed { at: i, variant });
                i += lits + len;
                cursor = Some(r + len);
                continue;
            }
        }
        match idx.longest_match(seq, i, params.max_candidates) {
            Some((pos, len)) => {
                out.push(L1Tuple::Match { pos, len: len as u32 });
                trace(Step::Indexed { at: i });
                cursor = Some(pos as usize - 1 + len);
                i += len;
            }
            None => {
                out.push(L1Tuple::Literal(Symbol(seq[i])));
                trace(Step::Unmatched { at: i });
                cursor = None;
                i += 1;
            }
        }
    }
    out
}

/// Rebuilds a sequence from its level-1 tuples.
pub fn expand(tuples: &[L1Tuple], reference: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    expand_into(tuples, reference, &mut out)?;
    Ok(out)
}

pub fn expand_into(tuples: &[L1Tuple], reference: &[u8], out: &mut Vec<u8>) -> Result<()> {
    let total: u64 = tuples.iter().map(L1Tuple::coverage).sum();
    out.reserve(total as usize);
    for t in tuples {
        match *t {
            L1Tuple::Literal(s) => out.push(s.byte()),
            L1Tuple::Match { pos, len } => {
                let span = (pos as usize)
                    .checked_sub(1)
                    .and_then(|start| reference.get(start..start + len as usize))
                    .filter(|_| len > 0)
                    .ok_or_else(|| {
                        Error::corrupt(format!(
                            "match {pos}+{len} outside reference of length {}",
                            reference.len()
                        ))
                    })?;
                out.extend_from_slice(span);
            }
        }
    }
    Ok(())
}

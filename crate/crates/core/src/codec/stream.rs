//! Entropy coding of one level-2 element stream.
//!
//! Every sequence is coded by a fresh range coder with fresh models, so a
//! reader can decode any sequence given only the streams it references.

use std::collections::HashMap;

use super::adaptive::{AdaptiveModel, ContextModels};
use super::fields::{l1_len, l1_pos, l2_id, l2_len, l2_pos, Classified};
use super::range_coder::{RangeDecoder, RangeEncoder};
use super::{read_varint, write_varint};
use crate::error::{Error, Result};
use crate::lz2::StreamStore;
use crate::model::{Flag, L1Tuple, L2Element, StreamResolver, Symbol};

/// Everything both coder directions derive from already-coded elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionState {
    /// Two most recent flags, oldest first.
    pub prev_flags: [Flag; 2],
    pub last_literal: u8,
    pub last_l1_pos: u64,
    pub last_l1_len: u64,
    /// Symbols coded since the last explicit level-1 match, as literals or
    /// inside level-2 matches.
    pub since_l1_match: u64,
    /// Symbols of the current sequence processed so far.
    pub processed: u64,
    /// Per referenced stream: last match position there and the symbols
    /// processed before that match.
    pub aux: HashMap<u32, (u32, u64)>,
}

impl Default for PredictionState {
    fn default() -> Self {
        PredictionState {
            prev_flags: [Flag::Literal; 2],
            last_literal: 0,
            last_l1_pos: 1,
            last_l1_len: 0,
            since_l1_match: 0,
            processed: 0,
            aux: HashMap::new(),
        }
    }
}

impl PredictionState {
    pub fn flag_context(&self) -> usize {
        self.prev_flags[0] as usize * 3 + self.prev_flags[1] as usize
    }

    pub fn predict_l1_pos(&self) -> u64 {
        self.last_l1_pos + self.last_l1_len + self.since_l1_match
    }

    /// Expected tuple position of the next match into stream `seq`: walk
    /// forward from the last match there while the covered symbols do not
    /// exceed those processed since.
    pub fn predict_l2_pos(&self, seq: u32, store: &StreamStore) -> Option<u64> {
        let stream = store.get(seq)?;
        let (last_pos, last_processed) = self.aux.get(&seq).copied().unwrap_or((1, 0));
        let d = self.processed - last_processed;
        let prefix = &stream.prefix_coverage()[last_pos as usize - 1..];
        let limit = prefix[0] + d;
        let consumed = prefix.partition_point(|&c| c <= limit);
        Some(last_pos as u64 + consumed as u64 - 1)
    }

    fn record(&mut self, e: &L2Element, coverage: u64) {
        match *e {
            L2Element::Tuple(L1Tuple::Literal(s)) => {
                self.last_literal = s.byte();
                self.since_l1_match += 1;
            }
            L2Element::Tuple(L1Tuple::Match { pos, len }) => {
                self.last_l1_pos = pos as u64;
                self.last_l1_len = len as u64;
                self.since_l1_match = 0;
            }
            L2Element::Match2 { seq, pos, .. } => {
                self.aux.insert(seq, (pos, self.processed));
                self.since_l1_match += coverage;
            }
        }
        self.processed += coverage;
        self.prev_flags = [self.prev_flags[1], e.flag()];
    }
}

const BYTE_CONTEXTS: usize = 4;

struct Models {
    flags: Vec<AdaptiveModel>,
    literals: ContextModels,
    l1_pos_class: AdaptiveModel,
    l1_pos_bytes: ContextModels,
    l1_len_class: AdaptiveModel,
    l1_len_bytes: ContextModels,
    l2_id_prefix: AdaptiveModel,
    l2_id_suffix: ContextModels,
    l2_pos_class: AdaptiveModel,
    l2_pos_bytes: ContextModels,
    l2_len_class: AdaptiveModel,
    l2_len_bytes: ContextModels,
}

impl Models {
    fn new() -> Self {
        Models {
            flags: vec![AdaptiveModel::new(3); 9],
            literals: ContextModels::new(256, 256),
            l1_pos_class: AdaptiveModel::new(l1_pos::CLASSES),
            l1_pos_bytes: ContextModels::new(l1_pos::CLASSES * BYTE_CONTEXTS, 256),
            l1_len_class: AdaptiveModel::new(l1_len::CLASSES),
            l1_len_bytes: ContextModels::new(l1_len::CLASSES * BYTE_CONTEXTS, 256),
            l2_id_prefix: AdaptiveModel::new(256),
            l2_id_suffix: ContextModels::new(256, 256),
            l2_pos_class: AdaptiveModel::new(l2_pos::CLASSES),
            l2_pos_bytes: ContextModels::new(l2_pos::CLASSES * BYTE_CONTEXTS, 256),
            l2_len_class: AdaptiveModel::new(l2_len::CLASSES),
            l2_len_bytes: ContextModels::new(l2_len::CLASSES * BYTE_CONTEXTS, 256),
        }
    }
}

fn put_classified(rc: &mut RangeEncoder, class_model: &mut AdaptiveModel, bytes: &mut ContextModels, c: Classified) {
    class_model.encode(rc, c.class);
    for (i, &b) in c.payload().iter().enumerate() {
        bytes.get(c.class * BYTE_CONTEXTS + i).encode(rc, b as usize);
    }
}

fn get_classified(
    rc: &mut RangeDecoder<'_>,
    class_model: &mut AdaptiveModel,
    bytes: &mut ContextModels,
    payload_len: &[usize],
) -> (usize, [u8; 4], usize) {
    let class = class_model.decode(rc);
    let n = payload_len[class];
    let mut out = [0u8; 4];
    for (i, slot) in out.iter_mut().enumerate().take(n) {
        *slot = bytes.get(class * BYTE_CONTEXTS + i).decode(rc) as u8;
    }
    (class, out, n)
}

pub struct SequenceEncoder<'a> {
    store: &'a StreamStore,
    state: PredictionState,
    models: Models,
    rc: RangeEncoder,
}

impl<'a> SequenceEncoder<'a> {
    pub fn new(store: &'a StreamStore) -> Self {
        SequenceEncoder {
            store,
            state: PredictionState::default(),
            models: Models::new(),
            rc: RangeEncoder::new(),
        }
    }

    pub fn state(&self) -> &PredictionState {
        &self.state
    }

    pub fn encode(&mut self, e: &L2Element) -> Result<()> {
        let m = &mut self.models;
        let rc = &mut self.rc;
        m.flags[self.state.flag_context()].encode(rc, e.flag() as usize);
        let coverage = match *e {
            L2Element::Tuple(L1Tuple::Literal(s)) => {
                m.literals
                    .get(self.state.last_literal as usize)
                    .encode(rc, s.byte() as usize);
                1
            }
            L2Element::Tuple(L1Tuple::Match { pos, len }) => {
                let rel = self.state.predict_l1_pos() as i64 - pos as i64;
                put_classified(rc, &mut m.l1_pos_class, &mut m.l1_pos_bytes, l1_pos::classify(rel)?);
                put_classified(
                    rc,
                    &mut m.l1_len_class,
                    &mut m.l1_len_bytes,
                    l1_len::classify(len as u64)?,
                );
                len as u64
            }
            L2Element::Match2 { seq, pos, len } => {
                let (prefix, suffix) = l2_id::split(seq)?;
                m.l2_id_prefix.encode(rc, prefix as usize);
                m.l2_id_suffix.get(prefix as usize).encode(rc, suffix as usize);
                let unresolved = || Error::Internal(format!("level-2 match into unknown stream {seq}"));
                let expected = self.state.predict_l2_pos(seq, self.store).ok_or_else(unresolved)?;
                let diff = expected as i64 - pos as i64;
                put_classified(rc, &mut m.l2_pos_class, &mut m.l2_pos_bytes, l2_pos::classify(diff)?);
                put_classified(
                    rc,
                    &mut m.l2_len_class,
                    &mut m.l2_len_bytes,
                    l2_len::classify(len as u64)?,
                );
                self.store.span_coverage(seq, pos, len).ok_or_else(unresolved)?
            }
        };
        self.state.record(e, coverage);
        Ok(())
    }

    pub fn finish(self) -> Vec<u8> {
        self.rc.finish()
    }
}

pub struct SequenceDecoder<'a> {
    store: &'a StreamStore,
    state: PredictionState,
    models: Models,
    rc: RangeDecoder<'a>,
}

impl<'a> SequenceDecoder<'a> {
    pub fn new(bytes: &'a [u8], store: &'a StreamStore) -> Self {
        SequenceDecoder {
            store,
            state: PredictionState::default(),
            models: Models::new(),
            rc: RangeDecoder::new(bytes),
        }
    }

    pub fn state(&self) -> &PredictionState {
        &self.state
    }

    pub fn decode(&mut self) -> Result<L2Element> {
        let m = &mut self.models;
        let rc = &mut self.rc;
        let flag = Flag::from_index(m.flags[self.state.flag_context()].decode(rc));
        let (e, coverage) = match flag {
            Flag::Literal => {
                let b = m.literals.get(self.state.last_literal as usize).decode(rc) as u8;
                let s = Symbol::new(b).ok_or_else(|| Error::corrupt(format!("literal byte {b:#04x}")))?;
                (L2Element::Tuple(L1Tuple::Literal(s)), 1)
            }
            Flag::Match1 => {
                let (c, b, n) = get_classified(rc, &mut m.l1_pos_class, &mut m.l1_pos_bytes, &l1_pos::PAYLOAD);
                let rel = l1_pos::restore(c, &b[..n]);
                let (c, b, n) = get_classified(rc, &mut m.l1_len_class, &mut m.l1_len_bytes, &l1_len::PAYLOAD);
                let len = l1_len::restore(c, &b[..n]);
                let pos = self.state.predict_l1_pos() as i64 - rel;
                if pos < 1 || pos > u32::MAX as i64 || len > u32::MAX as u64 {
                    return Err(Error::corrupt(format!("level-1 match {pos}+{len}")));
                }
                let t = L1Tuple::Match {
                    pos: pos as u32,
                    len: len as u32,
                };
                (L2Element::Tuple(t), len)
            }
            Flag::Match2 => {
                let prefix = m.l2_id_prefix.decode(rc) as u8;
                let suffix = m.l2_id_suffix.get(prefix as usize).decode(rc) as u8;
                let seq = l2_id::join(prefix, suffix);
                let expected = self
                    .state
                    .predict_l2_pos(seq, self.store)
                    .ok_or_else(|| Error::corrupt(format!("level-2 match into unknown stream {seq}")))?;
                let (c, b, n) = get_classified(rc, &mut m.l2_pos_class, &mut m.l2_pos_bytes, &l2_pos::PAYLOAD);
                let pos = expected as i64 - l2_pos::restore(c, &b[..n]);
                let (c, b, n) = get_classified(rc, &mut m.l2_len_class, &mut m.l2_len_bytes, &l2_len::PAYLOAD);
                let len = l2_len::restore(c, &b[..n]);
                let coverage = (1..=u32::MAX as i64)
                    .contains(&pos)
                    .then(|| {
                        self.store
                            .span_coverage(seq, pos as u32, len.min(u32::MAX as u64) as u32)
                    })
                    .flatten()
                    .filter(|&c| c > 0)
                    .ok_or_else(|| Error::corrupt(format!("level-2 match {seq}:{pos}+{len} out of range")))?;
                let e = L2Element::Match2 {
                    seq,
                    pos: pos as u32,
                    len: len as u32,
                };
                (e, coverage)
            }
        };
        self.state.record(&e, coverage);
        Ok(e)
    }

    pub fn overran(&self) -> bool {
        self.rc.overran()
    }
}

/// Codes one sequence: element count as a varint, then the range-coded elements.
pub fn encode_stream(elems: &[L2Element], store: &StreamStore) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_varint(&mut out, elems.len() as u64);
    let mut enc = SequenceEncoder::new(store);
    for e in elems {
        enc.encode(e)?;
    }
    out.extend(enc.finish());
    Ok(out)
}

pub fn decode_stream(bytes: &[u8], store: &StreamStore) -> Result<Vec<L2Element>> {
    let (count, used) = read_varint(bytes).ok_or_else(|| Error::corrupt("truncated element count"))?;
    let body = &bytes[used..];
    let mut dec = SequenceDecoder::new(body, store);
    let mut out = Vec::with_capacity(count.min(body.len() as u64 * 8) as usize);
    for _ in 0..count {
        out.push(dec.decode()?);
        if dec.overran() {
            return Err(Error::corrupt("coded stream ended early"));
        }
    }
    Ok(out)
}

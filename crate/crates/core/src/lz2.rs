//! Second-level factoring: tuple streams matched against the streams of
//! earlier sequences.

use crate::error::{Error, Result};
use crate::model::{L1Tuple, L2Element, Params, StreamResolver};
use crate::ref_index::table_capacity;

const HASH_MUL: u64 = 0x9E37_79B9_7F4A_7C15;
const INITIAL_CAPACITY: usize = 1 << 10;

/// A retained tuple stream with the running symbol coverage of its prefixes.
#[derive(Clone, Debug)]
pub struct IndexedStream {
    tuples: Vec<L1Tuple>,
    /// `prefix[j]` = symbols covered by the first `j` tuples.
    prefix: Vec<u64>,
}

impl IndexedStream {
    pub fn new(tuples: Vec<L1Tuple>) -> Self {
        let mut prefix = Vec::with_capacity(tuples.len() + 1);
        let mut acc = 0u64;
        prefix.push(0);
        for t in &tuples {
            acc += t.coverage();
            prefix.push(acc);
        }
        IndexedStream { tuples, prefix }
    }

    pub fn tuples(&self) -> &[L1Tuple] {
        &self.tuples
    }

    pub fn prefix_coverage(&self) -> &[u64] {
        &self.prefix
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Second-level reference streams, addressed by archive ordinal 1, 2, ...
#[derive(Clone, Debug, Default)]
pub struct StreamStore {
    streams: Vec<IndexedStream>,
}

impl StreamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    pub fn get(&self, seq: u32) -> Option<&IndexedStream> {
        self.streams.get((seq as usize).checked_sub(1)?)
    }

    /// Appends stream `seq`, which must be the next ordinal.
    pub fn push(&mut self, seq: u32, tuples: Vec<L1Tuple>) -> Result<()> {
        if seq as usize != self.streams.len() + 1 {
            return Err(Error::Internal(format!(
                "stream {seq} added out of order (have {})",
                self.streams.len()
            )));
        }
        self.streams.push(IndexedStream::new(tuples));
        Ok(())
    }
}

impl StreamResolver for StreamStore {
    fn tuples(&self, seq: u32) -> Option<&[L1Tuple]> {
        self.get(seq).map(IndexedStream::tuples)
    }

    fn span_coverage(&self, seq: u32, pos: u32, len: u32) -> Option<u64> {
        let s = self.get(seq)?;
        let start = (pos as usize).checked_sub(1)?;
        let end = start.checked_add(len as usize)?;
        if end > s.len() {
            return None;
        }
        Some(s.prefix[end] - s.prefix[start])
    }
}

/// Hash of the canonical byte encoding of a tuple run: per tuple a kind
/// byte, then the symbol, or the position (8 bytes LE) and length (4 bytes LE).
pub(crate) fn hash_tuples(tuples: &[L1Tuple]) -> u64 {
    let mut h = 0u64;
    let mut feed = |b: u8| h = (h ^ b as u64).wrapping_mul(HASH_MUL);
    for t in tuples {
        match *t {
            L1Tuple::Literal(s) => {
                feed(0);
                feed(s.byte());
            }
            L1Tuple::Match { pos, len } => {
                feed(1);
                (pos as u64).to_le_bytes().into_iter().for_each(&mut feed);
                len.to_le_bytes().into_iter().for_each(&mut feed);
            }
        }
    }
    h ^ (h >> 29)
}

/// For every start position, the tuple count of the shortest run whose
/// weight reaches `h2`, or `None` if the remaining suffix never does.
pub fn key_lengths(tuples: &[L1Tuple], params: &Params) -> Vec<Option<usize>> {
    let h2 = params.h2 as u64;
    let mut out = Vec::with_capacity(tuples.len());
    let mut end = 0;
    let mut w = 0u64;
    for start in 0..tuples.len() {
        while w < h2 && end < tuples.len() {
            w += params.tuple_weight(&tuples[end]);
            end += 1;
        }
        out.push((w >= h2).then_some(end - start));
        w -= params.tuple_weight(&tuples[start]);
    }
    out
}

/// The level-2 search structure: retained streams plus a linear-probing
/// table of `(ordinal, tuple position)` entries keyed by weight-`h2` runs.
pub struct TupleIndex {
    store: StreamStore,
    /// `ordinal << 32 | zero-based tuple position`; 0 is empty.
    table: Vec<u64>,
    entries: usize,
    params: Params,
    ref_limit: u64,
}

impl TupleIndex {
    pub fn new(params: &Params, ref_limit: u64) -> Self {
        TupleIndex {
            store: StreamStore::new(),
            table: vec![0; INITIAL_CAPACITY],
            entries: 0,
            params: params.clone(),
            ref_limit,
        }
    }

    pub fn store(&self) -> &StreamStore {
        &self.store
    }

    pub fn capacity(&self) -> usize {
        self.table.len()
    }

    pub fn entries(&self) -> usize {
        self.entries
    }

    pub fn ref_limit(&self) -> u64 {
        self.ref_limit
    }

    pub fn add_reference(&mut self, seq: u32, tuples: Vec<L1Tuple>) -> Result<()> {
        if seq == 0 || seq as u64 > self.ref_limit {
            return Err(Error::Internal(format!(
                "stream {seq} is beyond the reference limit {}",
                self.ref_limit
            )));
        }
        let keys = key_lengths(&tuples, &self.params);
        self.store.push(seq, tuples)?;
        let fresh = keys.iter().flatten().count();
        let needed = table_capacity(self.entries + fresh);
        if needed > self.table.len() {
            self.rehash(needed);
        }
        let tuples = self.store.get(seq).expect("just pushed").tuples();
        let mask = self.table.len() - 1;
        for (p, k) in keys.iter().enumerate() {
            if let Some(k) = *k {
                let h = hash_tuples(&tuples[p..p + k]);
                insert(&mut self.table, mask, h, (seq as u64) << 32 | p as u64);
            }
        }
        self.entries += fresh;
        Ok(())
    }

    fn rehash(&mut self, size: usize) {
        let mut table = vec![0u64; size];
        let mask = size - 1;
        for &e in self.table.iter().filter(|&&e| e != 0) {
            let (seq, p) = unpack(e);
            let tuples = self.store.get(seq).expect("indexed stream").tuples();
            let k = key_len_at(tuples, p, &self.params).expect("indexed position has a key");
            insert(&mut table, mask, hash_tuples(&tuples[p..p + k]), e);
        }
        self.table = table;
    }

    /// Greedy factoring of `tuples` against the indexed streams.
    pub fn factor(&self, tuples: &[L1Tuple]) -> Vec<L2Element> {
        let params = &self.params;
        let h2 = params.h2 as u64;
        let keys = key_lengths(tuples, params);
        let mut wprefix = Vec::with_capacity(tuples.len() + 1);
        wprefix.push(0u64);
        for t in tuples {
            wprefix.push(wprefix.last().unwrap() + params.tuple_weight(t));
        }

        if self.entries == 0 {
            return tuples.iter().copied().map(L2Element::Tuple).collect();
        }
        let mask = self.table.len() - 1;
        let mut out = Vec::with_capacity(tuples.len());
        let mut i = 0;
        while i < tuples.len() {
            let Some(k) = keys[i] else {
                out.extend(tuples[i..].iter().copied().map(L2Element::Tuple));
                break;
            };
            let key = &tuples[i..i + k];
            let mut slot = hash_tuples(key) as usize & mask;
            let mut hits = 0;
            // (weight, seq, zero-based pos, tuple count)
            let mut best: Option<(u64, u32, usize, usize)> = None;
            loop {
                let e = self.table[slot];
                if e == 0 {
                    break;
                }
                let (seq, p) = unpack(e);
                let cand = self.store.get(seq).expect("indexed stream").tuples();
                if cand.get(p..p + k) == Some(key) {
                    let ext = cand[p + k..]
                        .iter()
                        .zip(&tuples[i + k..])
                        .take_while(|(a, b)| a == b)
                        .count();
                    let len = k + ext;
                    let w = wprefix[i + len] - wprefix[i];
                    let better = match best {
                        None => true,
                        Some((bw, bs, bp, _)) => {
                            (w, std::cmp::Reverse(seq), std::cmp::Reverse(p))
                                > (bw, std::cmp::Reverse(bs), std::cmp::Reverse(bp))
                        }
                    };
                    if better {
                        best = Some((w, seq, p, len));
                    }
                    hits += 1;
                    if hits >= params.max_candidates {
                        break;
                    }
                }
                slot = (slot + 1) & mask;
            }
            match best {
                Some((w, seq, p, len)) if w >= h2 => {
                    out.push(L2Element::Match2 {
                        seq,
                        pos: p as u32 + 1,
                        len: len as u32,
                    });
                    i += len;
                }
                _ => {
                    out.push(L2Element::Tuple(tuples[i]));
                    i += 1;
                }
            }
        }
        out
    }
}

fn key_len_at(tuples: &[L1Tuple], p: usize, params: &Params) -> Option<usize> {
    let mut w = 0u64;
    for (n, t) in tuples[p..].iter().enumerate() {
        w += params.tuple_weight(t);
        if w >= params.h2 as u64 {
            return Some(n + 1);
        }
    }
    None
}

#[inline]
fn unpack(e: u64) -> (u32, usize) {
    ((e >> 32) as u32, (e & 0xFFFF_FFFF) as usize)
}

fn insert(table: &mut [u64], mask: usize, h: u64, entry: u64) {
    let mut slot = h as usize & mask;
    while table[slot] != 0 {
        slot = (slot + 1) & mask;
    }
    table[slot] = entry;
}

/// Resolves a level-2 stream back into level-1 tuples.
pub fn expand<R: StreamResolver + ?Sized>(elems: &[L2Element], resolver: &R) -> Result<Vec<L1Tuple>> {
    let mut out = Vec::with_capacity(elems.len());
    for e in elems {
        match *e {
            L2Element::Tuple(t) => out.push(t),
            L2Element::Match2 { seq, pos, len } => {
                let span = resolver
                    .tuples(seq)
                    .and_then(|s| {
                        let start = (pos as usize).checked_sub(1)?;
                        s.get(start..start.checked_add(len as usize)?)
                    })
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| Error::corrupt(format!("unresolvable level-2 match {seq}:{pos}+{len}")))?;
                out.extend_from_slice(span);
            }
        }
    }
    Ok(out)
}

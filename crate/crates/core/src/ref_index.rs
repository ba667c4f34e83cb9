//! Hash index over all fixed-length substrings of the reference.

use crate::error::{Error, Result};

const HASH_MUL: u64 = 0x9E37_79B9_7F4A_7C15;

/// Multiplicative 64-bit hash of a byte string.
#[inline]
pub(crate) fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h = 0u64;
    for &b in bytes {
        h = (h ^ b as u64).wrapping_mul(HASH_MUL);
    }
    h ^ (h >> 29)
}

/// Smallest power of two that holds `entries` at load factor <= 0.7.
pub(crate) fn table_capacity(entries: usize) -> usize {
    let mut size = 2usize;
    while entries * 10 > size * 7 {
        size *= 2;
    }
    size
}

/// Length of the common prefix of two byte slices.
#[inline]
pub(crate) fn common_prefix_len(a: &[u8], b: &[u8]) -> usize {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut i = 0;
    while i + 8 <= n {
        let x = u64::from_le_bytes(a[i..i + 8].try_into().unwrap());
        let y = u64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        let diff = x ^ y;
        if diff != 0 {
            return i + (diff.trailing_zeros() / 8) as usize;
        }
        i += 8;
    }
    while i < n && a[i] == b[i] {
        i += 1;
    }
    i
}

/// Open-addressed table with linear probing. Each slot holds a 1-based
/// reference position, or 0 when empty.
pub struct RefIndex {
    table: Vec<u32>,
    mask: usize,
    kmer: usize,
    entries: usize,
    reference: Vec<u8>,
}

impl RefIndex {
    pub fn build(reference: Vec<u8>, h1m: u32) -> Result<Self> {
        let kmer = h1m as usize;
        if kmer == 0 || reference.len() < kmer {
            return Err(Error::Config(format!(
                "reference of length {} is shorter than h1m = {h1m}",
                reference.len()
            )));
        }
        if reference.len() > u32::MAX as usize {
            return Err(Error::Unsupported("reference longer than 2^32 - 1 symbols".into()));
        }
        let entries = reference.len() - kmer + 1;
        let size = table_capacity(entries);
        let mask = size - 1;
        let mut table = vec![0u32; size];
        for (i, window) in reference.windows(kmer).enumerate() {
            let mut slot = hash_bytes(window) as usize & mask;
            while table[slot] != 0 {
                slot = (slot + 1) & mask;
            }
            table[slot] = i as u32 + 1;
        }
        Ok(RefIndex {
            table,
            mask,
            kmer,
            entries,
            reference,
        })
    }

    pub fn reference(&self) -> &[u8] {
        &self.reference
    }

    pub fn kmer_len(&self) -> usize {
        self.kmer
    }

    pub fn table_size(&self) -> usize {
        self.table.len()
    }

    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    /// All 1-based positions whose k-mer equals `kmer`, in insertion order.
    pub fn positions(&self, kmer: &[u8]) -> Vec<u32> {
        let mut out = Vec::new();
        if kmer.len() == self.kmer {
            self.probe(kmer, usize::MAX, |p| out.push(p));
        }
        out
    }

    /// Walks the probe chain of `kmer`, calling `hit` with every stored
    /// position whose k-mer matches, up to `max_hits` of them.
    #[inline]
    fn probe(&self, kmer: &[u8], max_hits: usize, mut hit: impl FnMut(u32)) {
        let mut slot = hash_bytes(kmer) as usize & self.mask;
        let mut hits = 0;
        loop {
            let pos = self.table[slot];
            if pos == 0 {
                return;
            }
            let start = pos as usize - 1;
            if &self.reference[start..start + self.kmer] == kmer {
                hit(pos);
                hits += 1;
                if hits == max_hits {
                    return;
                }
            }
            slot = (slot + 1) & self.mask;
        }
    }

    /// Longest forward match of `seq[i..]` (0-based `i`) against the
    /// reference, among up to `max_candidates` positions sharing the
    /// leading k-mer. Returns the 1-based reference position and the match
    /// length; ties go to the smallest position.
    pub fn longest_match(&self, seq: &[u8], i: usize, max_candidates: usize) -> Option<(u32, usize)> {
        let kmer = seq.get(i..i + self.kmer)?;
        let tail = &seq[i + self.kmer..];
        let mut best: Option<(u32, usize)> = None;
        self.probe(kmer, max_candidates, |pos| {
            let r = pos as usize - 1 + self.kmer;
            let len = self.kmer + common_prefix_len(&self.reference[r..], tail);
            match best {
                Some((bp, bl)) if bl > len || (bl == len && bp < pos) => {}
                _ => best = Some((pos, len)),
            }
        });
        best
    }
}

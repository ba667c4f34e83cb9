//! Adaptive frequency model over a finite alphabet.

use super::range_coder::{RangeDecoder, RangeEncoder};

pub const INCREMENT: u32 = 32;
pub const MAX_TOTAL: u32 = 1 << 16;
/// Largest alphabet whose halved counts still fit under `MAX_TOTAL`.
pub const MAX_ALPHABET: usize = 64_000;

const BLOCK: usize = 64;

/// Per-symbol counts, all >= 1, kept with per-block sums so cumulative
/// lookups stay cheap for large alphabets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptiveModel {
    freq: Vec<u32>,
    blocks: Vec<u32>,
    total: u32,
}

impl AdaptiveModel {
    pub fn new(alphabet: usize) -> Self {
        assert!((1..=MAX_ALPHABET).contains(&alphabet), "alphabet size {alphabet}");
        let freq = vec![1; alphabet];
        let blocks = freq.chunks(BLOCK).map(|c| c.len() as u32).collect();
        AdaptiveModel {
            freq,
            blocks,
            total: alphabet as u32,
        }
    }

    pub fn alphabet(&self) -> usize {
        self.freq.len()
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn freq(&self, sym: usize) -> u32 {
        self.freq[sym]
    }

    fn cum(&self, sym: usize) -> u32 {
        let b = sym / BLOCK;
        let before: u32 = self.blocks[..b].iter().sum();
        before + self.freq[b * BLOCK..sym].iter().sum::<u32>()
    }

    /// Symbol whose interval contains `target`, with its cumulative count.
    fn find(&self, mut target: u32) -> (usize, u32) {
        let mut cum = 0;
        let mut b = 0;
        while target >= self.blocks[b] {
            target -= self.blocks[b];
            cum += self.blocks[b];
            b += 1;
        }
        let mut s = b * BLOCK;
        while target >= self.freq[s] {
            target -= self.freq[s];
            cum += self.freq[s];
            s += 1;
        }
        (s, cum)
    }

    pub fn update(&mut self, sym: usize) {
        self.freq[sym] += INCREMENT;
        self.blocks[sym / BLOCK] += INCREMENT;
        self.total += INCREMENT;
        if self.total >= MAX_TOTAL {
            self.rescale();
        }
    }

    fn rescale(&mut self) {
        for f in &mut self.freq {
            *f = (*f / 2).max(1);
        }
        for (b, chunk) in self.blocks.iter_mut().zip(self.freq.chunks(BLOCK)) {
            *b = chunk.iter().sum();
        }
        self.total = self.blocks.iter().sum();
    }

    pub fn encode(&mut self, enc: &mut RangeEncoder, sym: usize) {
        enc.encode(self.cum(sym), self.freq[sym], self.total);
        self.update(sym);
    }

    pub fn decode(&mut self, dec: &mut RangeDecoder<'_>) -> usize {
        let target = dec.decode_target(self.total);
        let (sym, cum) = self.find(target);
        dec.consume(cum, self.freq[sym]);
        self.update(sym);
        sym
    }
}

/// A family of models selected by a small integer context, created on first use.
#[derive(Clone, Debug)]
pub struct ContextModels {
    alphabet: usize,
    models: Vec<Option<AdaptiveModel>>,
}

impl ContextModels {
    pub fn new(contexts: usize, alphabet: usize) -> Self {
        ContextModels {
            alphabet,
            models: vec![None; contexts],
        }
    }

    pub fn get(&mut self, ctx: usize) -> &mut AdaptiveModel {
        let alphabet = self.alphabet;
        self.models[ctx].get_or_insert_with(|| AdaptiveModel::new(alphabet))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_stay_positive_and_bounded() {
        let mut m = AdaptiveModel::new(256);
        for i in 0..100_000usize {
            m.update((i * i) % 7);
            assert!(m.total() < MAX_TOTAL);
        }
        assert!((0..256).all(|s| m.freq(s) >= 1));
        assert_eq!(m.total(), (0..256).map(|s| m.freq(s)).sum::<u32>());
    }

    #[test]
    fn largest_alphabet_rescales_under_limit() {
        let mut m = AdaptiveModel::new(MAX_ALPHABET);
        for i in 0..5_000usize {
            m.update(i % 3);
            assert!(m.total() < MAX_TOTAL);
        }
    }

    #[test]
    fn find_inverts_cum() {
        let mut m = AdaptiveModel::new(300);
        for s in [0usize, 5, 5, 64, 128, 299, 299, 299] {
            m.update(s);
        }
        for s in 0..300 {
            let c = m.cum(s);
            assert_eq!(m.find(c), (s, c));
            assert_eq!(m.find(c + m.freq(s) - 1), (s, c));
        }
    }

    #[test]
    fn model_round_trip() {
        let data: Vec<usize> = (0..20_000usize).map(|i| (i / 3 + i % 5) % 40).collect();
        let mut enc = RangeEncoder::new();
        let mut m = AdaptiveModel::new(40);
        for &s in &data {
            m.encode(&mut enc, s);
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes);
        let mut m2 = AdaptiveModel::new(40);
        let back: Vec<usize> = (0..data.len()).map(|_| m2.decode(&mut dec)).collect();
        assert_eq!(back, data);
        assert_eq!(m, m2);
    }

    #[test]
    fn repeated_symbol_gets_cheaper() {
        let mut enc = RangeEncoder::new();
        let mut m = AdaptiveModel::new(256);
        for _ in 0..1000 {
            m.encode(&mut enc, b'A' as usize);
        }
        // 1000 symbols of a fresh 256-ary model cost far less than 1000 bytes
        assert!(enc.finish().len() < 100);
    }
}

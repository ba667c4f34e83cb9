//! Value types shared by every stage: symbols, sequences, factoring
//! tuples and the compression parameters.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One sequence symbol. Only ASCII letters are admitted; case is significant.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub(crate) u8);

impl Symbol {
    pub fn new(byte: u8) -> Option<Self> {
        is_symbol(byte).then_some(Symbol(byte))
    }

    #[inline]
    pub fn byte(self) -> u8 {
        self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0 as char)
    }
}

#[inline]
pub fn is_symbol(byte: u8) -> bool {
    byte.is_ascii_alphabetic()
}

/// A genomic sequence with the formatting needed to re-emit it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    pub id: String,
    /// Position in archive encode order, starting at 1. Zero until assigned
    /// (and always zero for the reference).
    pub ordinal: u32,
    pub symbols: Vec<u8>,
    pub source_file: String,
    pub line_width: usize,
}

impl Sequence {
    pub fn new(id: impl Into<String>, symbols: Vec<u8>) -> Self {
        Sequence {
            id: id.into(),
            ordinal: 0,
            symbols,
            source_file: String::new(),
            line_width: 60,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Fraction of the collection whose tuple streams may serve as
/// second-level references, kept as an exact ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefFraction {
    num: u32,
    den: u32,
}

impl RefFraction {
    pub const ALL: RefFraction = RefFraction { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::Config(format!(
                "reference fraction {num}/{den} must lie in (0, 1]"
            )));
        }
        let g = gcd(num, den);
        Ok(RefFraction {
            num: num / g,
            den: den / g,
        })
    }

    pub fn from_percent(percent: u32) -> Result<Self> {
        Self::new(percent, 100)
    }

    pub fn numerator(self) -> u32 {
        self.num
    }

    pub fn denominator(self) -> u32 {
        self.den
    }

    /// Number of leading archive ordinals eligible for indexing: ceil(f * n).
    pub fn limit(self, n: u64) -> u64 {
        (n * self.num as u64).div_ceil(self.den as u64)
    }
}

impl Default for RefFraction {
    fn default() -> Self {
        RefFraction::ALL
    }
}

/// Parses a percentage such as `30%`, `30` or `12.5%`.
impl FromStr for RefFraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid reference fraction '{s}'"));
        let body = s.trim().trim_end_matches('%');
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty()
            || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit())
            || frac.len() > 6
        {
            return Err(bad());
        }
        let scale = 10u64.pow(frac.len() as u32);
        let digits = format!("{int}{frac}");
        let num: u64 = digits.parse().map_err(|_| bad())?;
        let den = 100 * scale;
        if num > den {
            return Err(bad());
        }
        let g = gcd64(num, den);
        RefFraction::new((num / g) as u32, (den / g) as u32)
    }
}

impl fmt::Display for RefFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", 100.0 * self.num as f64 / self.den as f64)
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    gcd64(a as u64, b as u64) as u32
}

fn gcd64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Params {
    /// Minimum length of a level-1 match found through the reference index.
    pub h1m: u32,
    /// Minimum length of a level-1 match resumed after a SNP or short indel.
    pub h1e: u32,
    /// Minimum weight of a level-2 match.
    pub h2: u32,
    pub literal_weight: u32,
    pub match_weight: u32,
    /// Also try double-symbol insertions and deletions after a match.
    pub indel2: bool,
    /// Second-level factoring on or off. Off is the same as indexing no stream.
    pub level2: bool,
    pub ref_fraction: RefFraction,
    pub l1_workers: usize,
    /// Verified candidates examined per hash probe, at both levels.
    pub max_candidates: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            h1m: 15,
            h1e: 4,
            h2: 11,
            literal_weight: 1,
            match_weight: 7,
            indel2: false,
            level2: true,
            ref_fraction: RefFraction::ALL,
            l1_workers: 3,
            max_candidates: 64,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.h1m == 0 || self.h1e == 0 || self.h2 == 0 {
            return fail("h1m, h1e and h2 must be positive");
        }
        if self.h1e > self.h1m {
            return fail("h1e must not exceed h1m");
        }
        if self.literal_weight == 0 || self.literal_weight > self.match_weight {
            return fail("weights must satisfy 0 < literal_weight <= match_weight");
        }
        if self.l1_workers == 0 || self.max_candidates == 0 {
            return fail("worker count and candidate cap must be positive");
        }
        Ok(())
    }

    /// Highest archive ordinal whose tuple stream is indexed for level 2.
    pub fn ref_limit(&self, n: u64) -> u64 {
        if self.level2 {
            self.ref_fraction.limit(n)
        } else {
            0
        }
    }

    #[inline]
    pub fn tuple_weight(&self, t: &L1Tuple) -> u64 {
        match t {
            L1Tuple::Literal(_) => self.literal_weight as u64,
            L1Tuple::Match { .. } => self.match_weight as u64,
        }
    }
}

/// Element of a level-1 factoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum L1Tuple {
    Literal(Symbol),
    /// `pos` is 1-based in the reference; `len` counts symbols.
    Match {
        pos: u32,
        len: u32,
    },
}

impl L1Tuple {
    #[inline]
    pub fn coverage(&self) -> u64 {
        match *self {
            L1Tuple::Literal(_) => 1,
            L1Tuple::Match { len, .. } => len as u64,
        }
    }

    pub fn flag(&self) -> Flag {
        match self {
            L1Tuple::Literal(_) => Flag::Literal,
            L1Tuple::Match { .. } => Flag::Match1,
        }
    }
}

/// Element of a level-2 factoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum L2Element {
    Tuple(L1Tuple),
    /// Copy of `len` tuples starting at tuple `pos` (1-based) of the stream
    /// with archive ordinal `seq`.
    Match2 {
        seq: u32,
        pos: u32,
        len: u32,
    },
}

impl L2Element {
    pub fn flag(&self) -> Flag {
        match self {
            L2Element::Tuple(t) => t.flag(),
            L2Element::Match2 { .. } => Flag::Match2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flag {
    Literal = 0,
    Match1 = 1,
    Match2 = 2,
}

impl Flag {
    pub(crate) fn from_index(i: usize) -> Flag {
        match i {
            0 => Flag::Literal,
            1 => Flag::Match1,
            _ => Flag::Match2,
        }
    }
}

/// Read access to previously decoded tuple streams by archive ordinal.
pub trait StreamResolver {
    fn tuples(&self, seq: u32) -> Option<&[L1Tuple]>;

    /// Symbols covered by tuples `pos .. pos + len` (1-based `pos`) of stream `seq`.
    fn span_coverage(&self, seq: u32, pos: u32, len: u32) -> Option<u64> {
        let tuples = self.tuples(seq)?;
        let start = (pos as usize).checked_sub(1)?;
        let span = tuples.get(start..start.checked_add(len as usize)?)?;
        Some(span.iter().map(L1Tuple::coverage).sum())
    }
}

/// Total weight of a tuple substring.
pub fn weight(tuples: &[L1Tuple], params: &Params) -> u64 {
    tuples.iter().map(|t| params.tuple_weight(t)).sum()
}

/// Number of sequence symbols a level-2 stream decodes to.
pub fn symbol_coverage<R: StreamResolver + ?Sized>(elems: &[L2Element], resolver: &R) -> Result<u64> {
    let mut total = 0u64;
    for e in elems {
        total += match *e {
            L2Element::Tuple(t) => t.coverage(),
            L2Element::Match2 { seq, pos, len } => resolver
                .span_coverage(seq, pos, len)
                .ok_or_else(|| Error::corrupt(format!("unresolved level-2 reference {seq}:{pos}+{len}")))?,
        };
    }
    Ok(total)
}

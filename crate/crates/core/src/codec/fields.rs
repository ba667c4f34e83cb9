//! Classification of coded integers and their byte payloads.
//!
//! Each field is split into a class (coded without context) and a fixed
//! number of payload bytes for that class (coded under `(class, byte index)`).

use crate::error::{Error, Result};

/// A class index plus its little-endian payload bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classified {
    pub class: usize,
    bytes: [u8; 4],
    len: usize,
}

impl Classified {
    fn new(class: usize, value: u32, len: usize) -> Self {
        Classified {
            class,
            bytes: value.to_le_bytes(),
            len,
        }
    }

    pub fn payload(&self) -> &[u8] {
        &self.bytes[..self.len]
    }

    /// Payload interpreted as a little-endian integer.
    pub fn value(&self) -> u32 {
        let mut b = [0u8; 4];
        b[..self.len].copy_from_slice(self.payload());
        u32::from_le_bytes(b)
    }
}

fn le_value(bytes: &[u8]) -> u32 {
    let mut b = [0u8; 4];
    b[..bytes.len()].copy_from_slice(bytes);
    u32::from_le_bytes(b)
}

#[inline]
pub fn zigzag(v: i32) -> u32 {
    ((v << 1) ^ (v >> 31)) as u32
}

#[inline]
pub fn unzigzag(v: u32) -> i32 {
    ((v >> 1) as i32) ^ -((v & 1) as i32)
}

fn narrow(v: i64, what: &str) -> Result<i32> {
    if v.unsigned_abs() >= 1 << 31 {
        return Err(Error::Unsupported(format!("{what} {v} does not fit in 31 bits")));
    }
    Ok(v as i32)
}

pub mod l1_pos {
    use super::*;

    pub const PERFECT: usize = 0;
    pub const GOOD: usize = 1;
    pub const POOR: usize = 2;
    pub const CLASSES: usize = 3;
    pub const PAYLOAD: [usize; CLASSES] = [0, 1, 4];

    /// `rel = expected - actual`.
    pub fn classify(rel: i64) -> Result<Classified> {
        let rel = narrow(rel, "relative position")?;
        Ok(match rel.unsigned_abs() {
            0 => Classified::new(PERFECT, 0, 0),
            1..=63 => Classified::new(GOOD, (rel + 64) as u32, 1),
            _ => Classified::new(POOR, zigzag(rel), 4),
        })
    }

    pub fn restore(class: usize, payload: &[u8]) -> i64 {
        let v = le_value(payload);
        match class {
            PERFECT => 0,
            GOOD => v as i64 - 64,
            _ => unzigzag(v) as i64,
        }
    }
}

pub mod l1_len {
    use super::*;

    pub const SHORT: usize = 0;
    pub const LONG: usize = 1;
    pub const VERY_LONG: usize = 2;
    pub const CLASSES: usize = 3;
    pub const PAYLOAD: [usize; CLASSES] = [1, 2, 4];

    const SHORT_MAX: u64 = 1 << 8;
    const LONG_MAX: u64 = (1 << 16) + (1 << 8);

    pub fn classify(len: u64) -> Result<Classified> {
        Ok(match len {
            0 => return Err(Error::Internal("zero-length level-1 match".into())),
            1..=SHORT_MAX => Classified::new(SHORT, (len - 1) as u32, 1),
            l if l <= LONG_MAX => Classified::new(LONG, (l - SHORT_MAX - 1) as u32, 2),
            l if l <= u32::MAX as u64 => Classified::new(VERY_LONG, (l - 1) as u32, 4),
            l => return Err(Error::Unsupported(format!("match length {l}"))),
        })
    }

    pub fn restore(class: usize, payload: &[u8]) -> u64 {
        let v = le_value(payload) as u64;
        match class {
            SHORT => v + 1,
            LONG => v + SHORT_MAX + 1,
            _ => v + 1,
        }
    }
}

pub mod l2_id {
    use super::*;

    /// Splits an ordinal into `(u / 256, u % 256)`.
    pub fn split(seq: u32) -> Result<(u8, u8)> {
        if seq == 0 || seq >= 1 << 16 {
            return Err(Error::Unsupported(format!(
                "second-level reference ordinal {seq} outside 1..65535"
            )));
        }
        Ok(((seq >> 8) as u8, seq as u8))
    }

    pub fn join(prefix: u8, suffix: u8) -> u32 {
        (prefix as u32) << 8 | suffix as u32
    }
}

pub mod l2_pos {
    use super::*;

    pub const PERFECT: usize = 0;
    pub const GOOD: usize = 1;
    pub const MODERATE: usize = 2;
    pub const POOR: usize = 3;
    pub const CLASSES: usize = 4;
    pub const PAYLOAD: [usize; CLASSES] = [0, 1, 2, 4];

    /// `diff = expected - actual`.
    pub fn classify(diff: i64) -> Result<Classified> {
        let diff = narrow(diff, "level-2 position difference")?;
        let mag = diff.unsigned_abs();
        Ok(match mag {
            0 => Classified::new(PERFECT, 0, 0),
            1..=15 => Classified::new(GOOD, (diff + 16) as u32, 1),
            16..=255 => Classified::new(MODERATE, (mag - 16) * 2 + (diff < 0) as u32, 2),
            _ => Classified::new(POOR, zigzag(diff), 4),
        })
    }

    pub fn restore(class: usize, payload: &[u8]) -> i64 {
        let v = le_value(payload);
        match class {
            PERFECT => 0,
            GOOD => v as i64 - 16,
            MODERATE => {
                let mag = (v / 2) as i64 + 16;
                if v & 1 == 1 {
                    -mag
                } else {
                    mag
                }
            }
            _ => unzigzag(v) as i64,
        }
    }
}

pub mod l2_len {
    use super::*;

    pub const SHORT: usize = 0;
    pub const MEDIUM: usize = 1;
    pub const LONG: usize = 2;
    pub const VERY_LONG: usize = 3;
    pub const EXTREME: usize = 4;
    pub const CLASSES: usize = 5;
    pub const PAYLOAD: [usize; CLASSES] = [1, 1, 1, 1, 4];

    /// Exclusive lower bound of each class.
    const BASE: [u64; CLASSES] = [0, 16, 48, 176, 432];

    pub fn classify(len: u64) -> Result<Classified> {
        if len == 0 {
            return Err(Error::Internal("zero-length level-2 match".into()));
        }
        if len > u32::MAX as u64 {
            return Err(Error::Unsupported(format!("level-2 match of {len} tuples")));
        }
        let class = BASE.iter().rposition(|&b| len > b).expect("len >= 1");
        Ok(Classified::new(class, (len - BASE[class] - 1) as u32, PAYLOAD[class]))
    }

    pub fn restore(class: usize, payload: &[u8]) -> u64 {
        le_value(payload) as u64 + BASE[class] + 1
    }
}

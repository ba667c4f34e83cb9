//! Entropy coding: range coder, adaptive models, the per-sequence element
//! coder, the reference coder and the descriptor stream.

pub mod adaptive;
pub mod descriptor;
pub mod fields;
pub mod range_coder;
pub mod reference;
pub mod stream;

pub use descriptor::{decode_descriptor, encode_descriptor};
pub use reference::{decode_reference, encode_reference};
pub use stream::{decode_stream, encode_stream, PredictionState, SequenceDecoder, SequenceEncoder};

pub(crate) fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push(v as u8 | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Returns the value and the number of bytes read.
pub(crate) fn read_varint(bytes: &[u8]) -> Option<(u64, usize)> {
    let mut v = 0u64;
    for (i, &b) in bytes.iter().enumerate().take(10) {
        v |= ((b & 0x7F) as u64) << (7 * i);
        if b & 0x80 == 0 {
            return Some((v, i + 1));
        }
    }
    None
}

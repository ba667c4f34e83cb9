//! Reference coding: symbols mapped to small codes, gathered in triples,
//! each triple coded as one token of an adaptive model.

use super::adaptive::AdaptiveModel;
use super::range_coder::{RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};

pub const MAX_SYMBOLS: usize = 40;

/// Distinct symbols in order of first appearance.
pub fn symbol_table(reference: &[u8]) -> Result<Vec<u8>> {
    let mut seen = [false; 256];
    let mut table = Vec::new();
    for &b in reference {
        if !seen[b as usize] {
            seen[b as usize] = true;
            table.push(b);
            if table.len() > MAX_SYMBOLS {
                return Err(Error::Unsupported(format!(
                    "reference uses more than {MAX_SYMBOLS} distinct symbols"
                )));
            }
        }
    }
    Ok(table)
}

/// Token values for consecutive symbol triples, zero-padded at the end.
pub fn triple_tokens(reference: &[u8], table: &[u8]) -> Vec<usize> {
    let mut code = [0usize; 256];
    for (i, &b) in table.iter().enumerate() {
        code[b as usize] = i;
    }
    let m = table.len().max(1);
    reference
        .chunks(3)
        .map(|c| {
            let get = |k: usize| c.get(k).map_or(0, |&b| code[b as usize]);
            get(0) * m * m + get(1) * m + get(2)
        })
        .collect()
}

/// Layout: symbol count (1 byte), symbol table, length (8 bytes LE), coded tokens.
pub fn encode_reference(reference: &[u8]) -> Result<Vec<u8>> {
    let table = symbol_table(reference)?;
    let m = table.len().max(1);
    let mut out = Vec::with_capacity(reference.len() / 4 + 16);
    out.push(table.len() as u8);
    out.extend_from_slice(&table);
    out.extend_from_slice(&(reference.len() as u64).to_le_bytes());
    let mut model = AdaptiveModel::new(m * m * m);
    let mut rc = RangeEncoder::new();
    for t in triple_tokens(reference, &table) {
        model.encode(&mut rc, t);
    }
    out.extend(rc.finish());
    Ok(out)
}

pub fn decode_reference(bytes: &[u8]) -> Result<Vec<u8>> {
    let truncated = || Error::corrupt("reference stream truncated");
    let (&count, rest) = bytes.split_first().ok_or_else(truncated)?;
    let count = count as usize;
    if count > MAX_SYMBOLS {
        return Err(Error::corrupt(format!("reference symbol table of size {count}")));
    }
    let table = rest.get(..count).ok_or_else(truncated)?;
    let len_bytes = rest.get(count..count + 8).ok_or_else(truncated)?;
    let len = u64::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
    if len > 0 && count == 0 {
        return Err(Error::corrupt("empty symbol table for a non-empty reference"));
    }
    let body = &rest[count + 8..];
    let m = count.max(1);
    let mut model = AdaptiveModel::new(m * m * m);
    let mut rc = RangeDecoder::new(body);
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let t = model.decode(&mut rc);
        if rc.overran() {
            return Err(truncated());
        }
        for sym in [t / (m * m), (t / m) % m, t % m] {
            if out.len() < len {
                out.push(table[sym]);
            }
        }
    }
    Ok(out)
}

//! Descriptor stream: per-record file name, id, length, line width and
//! archive ordinal, DEFLATE-compressed.

use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::fasta::FastaRecordMeta;

fn put_text(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn encode_descriptor(metas: &[FastaRecordMeta]) -> Result<Vec<u8>> {
    if metas.is_empty() {
        return Err(Error::Config("descriptor needs at least one record".into()));
    }
    let mut raw = Vec::new();
    raw.extend_from_slice(&(metas.len() as u64).to_le_bytes());
    for m in metas {
        put_text(&mut raw, &m.file_name);
        put_text(&mut raw, &m.seq_id);
        raw.extend_from_slice(&m.seq_len.to_le_bytes());
        raw.extend_from_slice(&m.line_width.to_le_bytes());
        raw.extend_from_slice(&m.archive_ordinal.to_le_bytes());
    }
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::best());
    enc.write_all(&raw).expect("writing to a Vec");
    Ok(enc.finish().expect("writing to a Vec"))
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(Error::corrupt("descriptor truncated"));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn text(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::corrupt("descriptor text is not UTF-8"))
    }
}

pub fn decode_descriptor(bytes: &[u8]) -> Result<Vec<FastaRecordMeta>> {
    let mut raw = Vec::new();
    DeflateDecoder::new(bytes)
        .read_to_end(&mut raw)
        .map_err(|e| Error::corrupt(format!("descriptor stream: {e}")))?;
    let mut c = Cursor(&raw);
    let n = c.u64()?;
    if n == 0 {
        return Err(Error::corrupt("descriptor lists no records"));
    }
    // each record takes at least 28 bytes
    if n > raw.len() as u64 / 28 {
        return Err(Error::corrupt(format!("descriptor claims {n} records")));
    }
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        out.push(FastaRecordMeta {
            file_name: c.text()?,
            seq_id: c.text()?,
            seq_len: c.u64()?,
            line_width: c.u64()?,
            archive_ordinal: c.u32()?,
        });
    }
    if !c.0.is_empty() {
        return Err(Error::corrupt("trailing bytes after descriptor records"));
    }
    Ok(out)
}

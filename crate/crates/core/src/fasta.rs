//! Multi-FASTA reading and writing.

use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::model::{is_symbol, Sequence};

/// Width recorded for a record whose sequence sits on a single line.
pub const DEFAULT_LINE_WIDTH: usize = 60;

/// Per-record metadata kept in the descriptor stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FastaRecordMeta {
    pub file_name: String,
    pub seq_id: String,
    pub seq_len: u64,
    pub line_width: u64,
    pub archive_ordinal: u32,
}

impl FastaRecordMeta {
    pub fn of(seq: &Sequence) -> Self {
        FastaRecordMeta {
            file_name: seq.source_file.clone(),
            seq_id: seq.id.clone(),
            seq_len: seq.len() as u64,
            line_width: seq.line_width as u64,
            archive_ordinal: seq.ordinal,
        }
    }
}

/// Streaming record reader. Yields one [`Sequence`] per `>` header.
pub struct FastaReader<R> {
    inner: R,
    origin: String,
    offset: u64,
    line: Vec<u8>,
    header: Option<(String, u64)>,
    seen_record: bool,
    done: bool,
}

impl<R: BufRead> FastaReader<R> {
    pub fn new(inner: R, origin: impl Into<String>) -> Self {
        FastaReader {
            inner,
            origin: origin.into(),
            offset: 0,
            line: Vec::new(),
            header: None,
            seen_record: false,
            done: false,
        }
    }

    fn parse_error(&self, offset: u64, message: impl Into<String>) -> Error {
        Error::Parse {
            origin: self.origin.clone(),
            offset,
            message: message.into(),
        }
    }

    /// Reads the next line into `self.line` without its terminator.
    /// Returns the line's starting offset, or `None` at end of input.
    fn next_line(&mut self) -> Result<Option<u64>> {
        self.line.clear();
        let n = self
            .inner
            .read_until(b'\n', &mut self.line)
            .map_err(|e| Error::io(&self.origin, e))?;
        if n == 0 {
            return Ok(None);
        }
        let start = self.offset;
        self.offset += n as u64;
        if self.line.last() == Some(&b'\n') {
            self.line.pop();
        }
        if self.line.last() == Some(&b'\r') {
            self.line.pop();
        }
        Ok(Some(start))
    }

    fn read_record(&mut self) -> Result<Option<Sequence>> {
        let (id, header_at) = match self.header.take() {
            Some(h) => h,
            None => loop {
                match self.next_line()? {
                    None if !self.seen_record => {
                        return Err(self.parse_error(self.offset, "empty input"));
                    }
                    None => return Ok(None),
                    Some(_) if self.line.is_empty() => continue,
                    Some(at) if self.line[0] == b'>' => {
                        break (String::from_utf8_lossy(&self.line[1..]).into_owned(), at);
                    }
                    Some(at) => return Err(self.parse_error(at, "missing '>' header line")),
                }
            },
        };
        self.seen_record = true;

        let mut symbols = Vec::new();
        let mut first_line = 0usize;
        let mut lines = 0usize;
        while let Some(at) = self.next_line()? {
            if self.line.first() == Some(&b'>') {
                self.header = Some((String::from_utf8_lossy(&self.line[1..]).into_owned(), at));
                break;
            }
            if self.line.is_empty() {
                continue;
            }
            if let Some(bad) = self.line.iter().position(|&b| !is_symbol(b)) {
                let c = self.line[bad];
                return Err(self.parse_error(
                    at + bad as u64,
                    format!("symbol {:?} is not an ASCII letter", c as char),
                ));
            }
            if lines == 0 {
                first_line = self.line.len();
            }
            lines += 1;
            symbols.extend_from_slice(&self.line);
        }
        if symbols.is_empty() {
            return Err(self.parse_error(header_at, format!("record '{id}' has no sequence")));
        }
        let line_width = if lines == 1 {
            first_line.max(DEFAULT_LINE_WIDTH)
        } else {
            first_line
        };
        Ok(Some(Sequence {
            id,
            ordinal: 0,
            symbols,
            source_file: self.origin.clone(),
            line_width,
        }))
    }
}

impl<R: BufRead> Iterator for FastaReader<R> {
    type Item = Result<Sequence>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_record() {
            Ok(Some(s)) => Some(Ok(s)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Parses a complete in-memory FASTA file.
pub fn parse_fasta(bytes: &[u8], origin: &str) -> Result<Vec<Sequence>> {
    FastaReader::new(bytes, origin).collect()
}

/// Counts header lines without validating sequence content.
pub fn count_records<R: BufRead>(mut r: R) -> io::Result<usize> {
    let mut count = 0;
    let mut at_line_start = true;
    loop {
        let buf = r.fill_buf()?;
        if buf.is_empty() {
            return Ok(count);
        }
        for &b in buf {
            if at_line_start && b == b'>' {
                count += 1;
            }
            at_line_start = b == b'\n';
        }
        let n = buf.len();
        r.consume(n);
    }
}

/// Writes one record: header line, then symbols wrapped at `line_width`.
pub fn write_fasta<W: Write>(w: &mut W, id: &str, symbols: &[u8], line_width: usize) -> io::Result<()> {
    w.write_all(b">")?;
    w.write_all(id.as_bytes())?;
    w.write_all(b"\n")?;
    for chunk in symbols.chunks(line_width.max(1)) {
        w.write_all(chunk)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn emit_fasta(seq: &Sequence, meta: &FastaRecordMeta) -> Vec<u8> {
    let width = meta.line_width as usize;
    let mut out = Vec::with_capacity(meta.seq_id.len() + 2 + seq.len() + seq.len() / width.max(1) + 1);
    write_fasta(&mut out, &meta.seq_id, &seq.symbols, width).expect("writing to a Vec");
    out
}

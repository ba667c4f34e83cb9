//! Three-file archive: `<prefix>.gdc2_desc`, `<prefix>.gdc2_rc`, `<prefix>.gdc2_ref`.
//!
//! The collection file starts with a header holding the parameters and the
//! byte offset of every sequence's coded segment, so single sequences can be
//! read without scanning the whole file.

use std::fs::{self, File};
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Params, RefFraction};

pub const MAGIC: &[u8; 4] = b"GDC2";
pub const FORMAT_VERSION: u8 = 1;

const FLAG_INDEL2: u8 = 1;
const FLAG_LEVEL2: u8 = 2;
const FLAG_HAS_REF: u8 = 4;

/// Fixed-size part of the header, before the offset table.
const FIXED_HEADER: usize = 4 + 1 + 5 * 4 + 1 + 2 * 4 + 8 + 8 + 4 + 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchiveHeader {
    pub version: u8,
    pub params: Params,
    /// Highest ordinal whose stream serves as a second-level reference.
    pub ref_limit: u64,
    pub reference_len: u64,
    pub reference_crc: u32,
    pub has_reference: bool,
    /// `n + 1` offsets into the body; segment `k` (1-based) spans
    /// `offsets[k - 1] .. offsets[k]`.
    pub offsets: Vec<u64>,
}

impl ArchiveHeader {
    pub fn sequence_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn segment(&self, ordinal: u32) -> Option<(u64, u64)> {
        let k = ordinal as usize;
        if k == 0 || k > self.sequence_count() {
            return None;
        }
        Some((self.offsets[k - 1], self.offsets[k]))
    }

    pub fn encoded_len(&self) -> usize {
        FIXED_HEADER + 8 * self.offsets.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        out.push(self.version);
        for v in [p.h1m, p.h1e, p.h2, p.literal_weight, p.match_weight] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let mut flags = 0;
        if p.indel2 {
            flags |= FLAG_INDEL2;
        }
        if p.level2 {
            flags |= FLAG_LEVEL2;
        }
        if self.has_reference {
            flags |= FLAG_HAS_REF;
        }
        out.push(flags);
        out.extend_from_slice(&p.ref_fraction.numerator().to_le_bytes());
        out.extend_from_slice(&p.ref_fraction.denominator().to_le_bytes());
        out.extend_from_slice(&self.ref_limit.to_le_bytes());
        out.extend_from_slice(&self.reference_len.to_le_bytes());
        out.extend_from_slice(&self.reference_crc.to_le_bytes());
        out.extend_from_slice(&(self.sequence_count() as u64).to_le_bytes());
        for o in &self.offsets {
            out.extend_from_slice(&o.to_le_bytes());
        }
        out
    }

    /// Parses a header from the start of `bytes`; the offset table is
    /// checked for monotonicity but not against the body length.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::corrupt("bad magic; not a gdc2 archive"));
        }
        let version = r.take(1)?[0];
        if version != FORMAT_VERSION {
            return Err(Error::corrupt(format!(
                "archive format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let h1m = r.u32()?;
        let h1e = r.u32()?;
        let h2 = r.u32()?;
        let literal_weight = r.u32()?;
        let match_weight = r.u32()?;
        let flags = r.take(1)?[0];
        let ref_fraction =
            RefFraction::new(r.u32()?, r.u32()?).map_err(|_| Error::corrupt("invalid reference fraction in header"))?;
        let ref_limit = r.u64()?;
        let reference_len = r.u64()?;
        let reference_crc = r.u32()?;
        let n = r.u64()?;
        if n == 0 {
            return Err(Error::corrupt("archive holds no sequences"));
        }
        if n > (bytes.len() as u64) / 8 {
            return Err(Error::corrupt("header truncated"));
        }
        let offsets = (0..=n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::corrupt("segment offsets are not strictly increasing"));
        }
        if ref_limit > n {
            return Err(Error::corrupt("reference limit exceeds sequence count"));
        }
        let params = Params {
            h1m,
            h1e,
            h2,
            literal_weight,
            match_weight,
            indel2: flags & FLAG_INDEL2 != 0,
            level2: flags & FLAG_LEVEL2 != 0,
            ref_fraction,
            ..Params::default()
        };
        params
            .validate()
            .map_err(|e| Error::corrupt(format!("header parameters: {e}")))?;
        Ok(ArchiveHeader {
            version,
            params,
            ref_limit,
            reference_len,
            reference_crc,
            has_reference: flags & FLAG_HAS_REF != 0,
            offsets,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.at..self.at + n)
            .ok_or_else(|| Error::corrupt("header truncated"))?;
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// All parts of an archive held in memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Archive {
    pub header: ArchiveHeader,
    pub descriptor: Vec<u8>,
    /// Concatenated coded segments (the collection file after its header).
    pub body: Vec<u8>,
    pub reference: Option<Vec<u8>>,
}

#[derive(Clone, Debug)]
pub struct ArchivePaths {
    pub desc: PathBuf,
    pub rc: PathBuf,
    pub reference: PathBuf,
}

impl ArchivePaths {
    pub fn new(prefix: &Path) -> Self {
        let with = |ext: &str| {
            let mut s = prefix.as_os_str().to_owned();
            s.push(".");
            s.push(ext);
            PathBuf::from(s)
        };
        ArchivePaths {
            desc: with("gdc2_desc"),
            rc: with("gdc2_rc"),
            reference: with("gdc2_ref"),
        }
    }
}

/// File sizes of a written archive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ArchiveSizes {
    pub desc: u64,
    pub rc: u64,
    pub reference: u64,
}

impl ArchiveSizes {
    /// Bytes counted against the collection; the reference file is excluded.
    pub fn collection(&self) -> u64 {
        self.desc + self.rc
    }
}

pub fn write_archive(prefix: &Path, archive: &Archive) -> Result<ArchiveSizes> {
    let paths = ArchivePaths::new(prefix);
    if archive.header.has_reference != archive.reference.is_some() {
        return Err(Error::Internal(
            "reference flag disagrees with reference payload".into(),
        ));
    }
    let mut rc = archive.header.to_bytes();
    rc.extend_from_slice(&archive.body);
    fs::write(&paths.desc, &archive.descriptor).map_err(|e| Error::io(&paths.desc, e))?;
    fs::write(&paths.rc, &rc).map_err(|e| Error::io(&paths.rc, e))?;
    let mut sizes = ArchiveSizes {
        desc: archive.descriptor.len() as u64,
        rc: rc.len() as u64,
        reference: 0,
    };
    match &archive.reference {
        Some(r) => {
            fs::write(&paths.reference, r).map_err(|e| Error::io(&paths.reference, e))?;
            sizes.reference = r.len() as u64;
        }
        None => {
            // a stale reference file from an earlier run would be misleading
            if paths.reference.exists() {
                fs::remove_file(&paths.reference).map_err(|e| Error::io(&paths.reference, e))?;
            }
        }
    }
    Ok(sizes)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_reference(paths: &ArchivePaths, header: &ArchiveHeader) -> Result<Option<Vec<u8>>> {
    if !header.has_reference {
        return Ok(None);
    }
    match fs::read(&paths.reference) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::ReferenceAbsent(format!(
            "{} does not exist",
            paths.reference.display()
        ))),
        Err(e) => Err(Error::io(&paths.reference, e)),
    }
}

pub fn read_archive(prefix: &Path) -> Result<Archive> {
    let paths = ArchivePaths::new(prefix);
    let rc = read_file(&paths.rc)?;
    let header = ArchiveHeader::parse(&rc)?;
    let body = rc[header.encoded_len()..].to_vec();
    if *header.offsets.last().unwrap() != body.len() as u64 {
        return Err(Error::corrupt(format!(
            "collection body is {} bytes, header expects {}",
            body.len(),
            header.offsets.last().unwrap()
        )));
    }
    let descriptor = read_file(&paths.desc)?;
    let reference = read_reference(&paths, &header)?;
    Ok(Archive {
        header,
        descriptor,
        body,
        reference,
    })
}

/// Random-access reader over the collection file.
pub struct ArchiveReader {
    paths: ArchivePaths,
    header: ArchiveHeader,
    rc: File,
}

impl ArchiveReader {
    pub fn open(prefix: &Path) -> Result<Self> {
        let paths = ArchivePaths::new(prefix);
        let mut rc = File::open(&paths.rc).map_err(|e| Error::io(&paths.rc, e))?;
        let file_len = rc.metadata().map_err(|e| Error::io(&paths.rc, e))?.len();
        let mut fixed = vec![0u8; FIXED_HEADER];
        rc.read_exact(&mut fixed)
            .map_err(|_| Error::corrupt("collection file shorter than its header"))?;
        let n = u64::from_le_bytes(fixed[FIXED_HEADER - 8..].try_into().unwrap());
        if n == 0 || n.saturating_add(1).saturating_mul(8) > file_len {
            // let the full parser report the precise problem
            ArchiveHeader::parse(&fixed)?;
            return Err(Error::corrupt("header truncated"));
        }
        let mut head = fixed;
        head.resize(FIXED_HEADER + 8 * (n as usize + 1), 0);
        rc.read_exact(&mut head[FIXED_HEADER..])
            .map_err(|_| Error::corrupt("header truncated"))?;
        let header = ArchiveHeader::parse(&head)?;
        if header.encoded_len() as u64 + header.offsets.last().unwrap() != file_len {
            return Err(Error::corrupt("collection file length disagrees with its header"));
        }
        Ok(ArchiveReader { paths, header, rc })
    }

    pub fn header(&self) -> &ArchiveHeader {
        &self.header
    }

    pub fn paths(&self) -> &ArchivePaths {
        &self.paths
    }

    /// Coded bytes of the sequence with archive ordinal `ordinal`.
    pub fn segment(&mut self, ordinal: u32) -> Result<Vec<u8>> {
        let (start, end) = self
            .header
            .segment(ordinal)
            .ok_or_else(|| Error::UnknownTarget(format!("ordinal {ordinal}")))?;
        let mut buf = vec![0u8; (end - start) as usize];
        self.rc
            .seek(SeekFrom::Start(self.header.encoded_len() as u64 + start))
            .and_then(|_| self.rc.read_exact(&mut buf))
            .map_err(|e| Error::io(&self.paths.rc, e))?;
        Ok(buf)
    }

    pub fn descriptor(&self) -> Result<Vec<u8>> {
        read_file(&self.paths.desc)
    }

    pub fn reference(&self) -> Result<Option<Vec<u8>>> {
        read_reference(&self.paths, &self.header)
    }
}

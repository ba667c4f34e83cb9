//! Two-level referential compression of genome sequence collections.
//!
//! Level 1 factors each sequence against a shared reference into literals
//! and reference matches. Level 2 factors those tuple streams against
//! earlier streams of the collection. Both are range coded per sequence,
//! so any single sequence can be decoded on its own.

pub mod archive;
pub mod codec;
pub mod error;
pub mod fasta;
pub mod gen;
pub mod lz1;
pub mod lz2;
pub mod model;
pub mod pipeline;
pub mod ref_index;

pub use error::{Error, Result};
pub use model::{Flag, L1Tuple, L2Element, Params, RefFraction, Sequence, Symbol};
pub use pipeline::{compress, decompress, extract, CompressOptions, CompressStats, Target};

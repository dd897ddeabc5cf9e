//! `G2LD1` dataset files.
//!
//! Layout: the 6-byte magic `G2LD1\n`, a little-endian `u64` header length,
//! a UTF-8 JSON header (config echo, counts, integer metadata), then the
//! moment rows followed by the query rows as little-endian `f64`.

use std::fs;
use std::path::Path;

use g2l_core::numcore::EmbeddingMatrix;
use g2l_core::synthdata::{SynthConfig, SynthDataset};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATASET_MAGIC: &[u8; 6] = b"G2LD1\n";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfigRecord {
    pub videos: usize,
    pub moments_per_video: usize,
    pub queries_per_video: usize,
    pub dim: usize,
    pub topics: usize,
    pub overlap: f64,
    pub annotated_fraction: f64,
    pub noise: f64,
    pub orthogonal_topics: bool,
    pub seed: u64,
}

impl From<&SynthConfig> for SynthConfigRecord {
    fn from(c: &SynthConfig) -> Self {
        SynthConfigRecord {
            videos: c.videos,
            moments_per_video: c.moments_per_video,
            queries_per_video: c.queries_per_video,
            dim: c.dim,
            topics: c.topics,
            overlap: c.overlap,
            annotated_fraction: c.annotated_fraction,
            noise: c.noise,
            orthogonal_topics: c.orthogonal_topics,
            seed: c.seed,
        }
    }
}

impl From<SynthConfigRecord> for SynthConfig {
    fn from(r: SynthConfigRecord) -> Self {
        SynthConfig {
            videos: r.videos,
            moments_per_video: r.moments_per_video,
            queries_per_video: r.queries_per_video,
            dim: r.dim,
            topics: r.topics,
            overlap: r.overlap,
            annotated_fraction: r.annotated_fraction,
            noise: r.noise,
            orthogonal_topics: r.orthogonal_topics,
            seed: r.seed,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    config: SynthConfigRecord,
    moments: usize,
    queries: usize,
    dim: usize,
    moment_topics: Vec<u32>,
    annotated: Vec<bool>,
    query_video: Vec<usize>,
    query_target: Vec<usize>,
}

pub fn encode(ds: &SynthDataset) -> Result<Vec<u8>> {
    let header = Header {
        version: DATASET_VERSION,
        config: (&ds.config).into(),
        moments: ds.moments.rows(),
        queries: ds.queries.rows(),
        dim: ds.config.dim,
        moment_topics: ds.moment_topics.clone(),
        annotated: ds.annotated.clone(),
        query_video: ds.query_video.clone(),
        query_target: ds.query_target.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let floats = ds.moments.data().len() + ds.queries.data().len();
    let mut out = Vec::with_capacity(DATASET_MAGIC.len() + 8 + json.len() + 8 * floats);
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in ds.moments.data().iter().chain(ds.queries.data()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Byte cursor that reports the offset of the first short read.
pub(crate) struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        Reader {
            path,
            bytes,
            pos: 0,
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            location: format!("byte offset {}", self.pos),
            message: message.into(),
        }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                self.error(format!(
                    "unexpected end of file reading {what} ({n} bytes needed, {} left)",
                    self.bytes.len() - self.pos
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn expect_magic(&mut self, magic: &[u8]) -> Result<()> {
        let got = self.take(magic.len(), "magic")?;
        if got != magic {
            self.pos -= magic.len();
            return Err(self.error(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(())
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub(crate) fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = count
            .checked_mul(8)
            .ok_or_else(|| self.error(format!("{what} size overflows")))?;
        let b = self.take(bytes, what)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.error(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }
}

pub fn decode(path: &Path, bytes: &[u8]) -> Result<SynthDataset> {
    let mut r = Reader::new(path, bytes);
    r.expect_magic(DATASET_MAGIC)?;
    let len = r.u64("header length")?;
    let header_start = r.pos();
    let json = r.take(len as usize, "header")?;
    let header: Header = serde_json::from_slice(json).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        location: format!(
            "header line {} column {} (header starts at byte {header_start})",
            e.line(),
            e.column()
        ),
        message: e.to_string(),
    })?;
    if header.version != DATASET_VERSION {
        return Err(r.error(format!("unsupported dataset version {}", header.version)));
    }
    let count = |rows: usize, r: &Reader| {
        rows.checked_mul(header.dim)
            .ok_or_else(|| r.error("embedding payload size overflows"))
    };
    let moments = r.f64s(count(header.moments, &r)?, "moment embeddings")?;
    let queries = r.f64s(count(header.queries, &r)?, "query embeddings")?;
    r.finish()?;

    let bad = |e: g2l_core::Error| Error::Parse {
        path: path.to_path_buf(),
        location: "payload".into(),
        message: e.to_string(),
    };
    let ds = SynthDataset {
        config: header.config.into(),
        moments: EmbeddingMatrix::unit(
            g2l_core::numcore::Matrix::from_vec(header.moments, header.dim, moments).map_err(bad)?,
        )
        .map_err(bad)?,
        moment_topics: header.moment_topics,
        annotated: header.annotated,
        queries: EmbeddingMatrix::unit(
            g2l_core::numcore::Matrix::from_vec(header.queries, header.dim, queries).map_err(bad)?,
        )
        .map_err(bad)?,
        query_video: header.query_video,
        query_target: header.query_target,
    };
    ds.validate().map_err(bad)?;
    Ok(ds)
}

/// Writes atomically: the file appears complete or not at all.
pub fn save(ds: &SynthDataset, path: &Path) -> Result<()> {
    crate::write_atomic(path, &encode(ds)?)
}

pub fn load(path: &Path) -> Result<SynthDataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use g2l_core::synthdata::generate;

    fn small() -> SynthDataset {
        generate(&SynthConfig {
            videos: 3,
            moments_per_video: 5,
            queries_per_video: 2,
            annotated_fraction: 0.4,
            dim: 6,
            topics: 4,
            seed: 5,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = small();
        let bytes = encode(&ds).unwrap();
        assert_eq!(&bytes[..6], DATASET_MAGIC);
        let back = decode(Path::new("mem"), &bytes).unwrap();
        assert_eq!(back, ds);
        assert_eq!(encode(&back).unwrap(), bytes);
    }

    #[test]
    fn truncation_is_reported_with_offset() {
        let bytes = encode(&small()).unwrap();
        for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
            match decode(Path::new("mem"), &bytes[..cut]) {
                Err(Error::Parse { location, .. }) => {
                    assert!(location.contains("offset") || location.contains("line"), "{location}")
                }
                other => panic!("cut {cut}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn corrupt_header_and_magic() {
        let mut bytes = encode(&small()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode(Path::new("mem"), &bytes), Err(Error::Parse { .. })));
        let mut bytes = encode(&small()).unwrap();
        bytes[20] = b'}';
        assert!(matches!(decode(Path::new("mem"), &bytes), Err(Error::Parse { .. })));
        let mut bytes = encode(&small()).unwrap();
        bytes.push(0);
        assert!(matches!(decode(Path::new("mem"), &bytes), Err(Error::Parse { .. })));
    }

    #[test]
    fn empty_dataset_round_trips() {
        let ds = generate(&SynthConfig {
            videos: 0,
            ..SynthConfig::default()
        })
        .unwrap();
        let back = decode(Path::new("mem"), &encode(&ds).unwrap()).unwrap();
        assert_eq!(back, ds);
    }
}

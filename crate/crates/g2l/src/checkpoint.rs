//! `G2LE1` encoder checkpoints.
//!
//! Layout: magic `G2LE1\n`, then little-endian `u64` input, hidden (0 when
//! absent) and output widths, then the video projection's weights followed by
//! the query projection's, each hidden layer first. Weights are row-major
//! little-endian `f64`.

use std::fs;
use std::path::Path;

use g2l_core::numcore::Matrix;
use g2l_core::trainer::{Encoder, Projection};

use crate::dataset_io::Reader;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"G2LE1\n";

pub fn encode(encoder: &Encoder) -> Result<Vec<u8>> {
    encoder.validate()?;
    let hidden = encoder.video.hidden.as_ref().map_or(0, |h| h.cols());
    if encoder.query.hidden.as_ref().map_or(0, |h| h.cols()) != hidden {
        return Err(Error::Data("modalities use different hidden widths".into()));
    }
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    for d in [encoder.input_dim(), hidden, encoder.output_dim()] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for p in [&encoder.video, &encoder.query] {
        for m in p.hidden.iter().chain(std::iter::once(&p.output)) {
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode(path: &Path, bytes: &[u8]) -> Result<Encoder> {
    let mut r = Reader::new(path, bytes);
    r.expect_magic(CHECKPOINT_MAGIC)?;
    let input = r.u64("input width")? as usize;
    let hidden = r.u64("hidden width")? as usize;
    let output = r.u64("output width")? as usize;
    if input == 0 || output == 0 {
        return Err(r.error("layer widths must be positive"));
    }
    let matrix = |r: &mut Reader, rows: usize, cols: usize, what: &str| -> Result<Matrix> {
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| r.error(format!("{what} size overflows")))?;
        let data = r.f64s(count, what)?;
        Ok(Matrix::from_vec(rows, cols, data).expect("length checked"))
    };
    let projection = |r: &mut Reader, name: &str| -> Result<Projection> {
        if hidden == 0 {
            Ok(Projection {
                hidden: None,
                output: matrix(r, input, output, name)?,
            })
        } else {
            Ok(Projection {
                hidden: Some(matrix(r, input, hidden, name)?),
                output: matrix(r, hidden, output, name)?,
            })
        }
    };
    let video = projection(&mut r, "video weights")?;
    let query = projection(&mut r, "query weights")?;
    r.finish()?;
    let encoder = Encoder { video, query };
    encoder.validate().map_err(|e| r.error(e.to_string()))?;
    Ok(encoder)
}

pub fn save(encoder: &Encoder, path: &Path) -> Result<()> {
    crate::write_atomic(path, &encode(encoder)?)
}

pub fn load(path: &Path) -> Result<Encoder> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_and_without_hidden() {
        for hidden in [None, Some(3)] {
            let enc = Encoder::random(4, hidden, 5, 9);
            let bytes = encode(&enc).unwrap();
            assert_eq!(decode(Path::new("mem"), &bytes).unwrap(), enc);
        }
    }

    #[test]
    fn truncated_checkpoint_fails() {
        let bytes = encode(&Encoder::random(4, None, 4, 1)).unwrap();
        for cut in [2, 10, 30, bytes.len() - 8] {
            assert!(matches!(
                decode(Path::new("mem"), &bytes[..cut]),
                Err(Error::Parse { .. })
            ));
        }
    }
}

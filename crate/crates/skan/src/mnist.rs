//! IDX image/label parsing (raw or gzip), digit filtering, and the
//! corrupted-pixel map for the feature-learning experiment.

use std::fmt;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSet {
    pub rows: u32,
    pub cols: u32,
    /// Row-major intensities, `rows * cols` bytes per image.
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
    /// SHA-256 of the raw input files (images, labels), hex.
    pub source_checksum: (String, String),
}

#[derive(Debug, PartialEq, Eq)]
pub enum IdxError {
    WrongMagic { expected: u32, actual: u32 },
    Truncated { expected: usize, actual: usize },
    CountMismatch { images: usize, labels: usize },
}

impl fmt::Display for IdxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdxError::WrongMagic { expected, actual } => {
                write!(f, "wrong IDX magic: expected {expected:#010x}, got {actual:#010x}")
            }
            IdxError::Truncated { expected, actual } => {
                write!(f, "truncated IDX payload: expected {expected} bytes, got {actual}")
            }
            IdxError::CountMismatch { images, labels } => {
                write!(f, "{images} images but {labels} labels")
            }
        }
    }
}

impl std::error::Error for IdxError {}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32, IdxError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or(IdxError::Truncated {
            expected: at + 4,
            actual: bytes.len(),
        })
}

/// Transparently gunzip if the stream carries the gzip magic.
pub fn maybe_gunzip(bytes: &[u8]) -> std::io::Result<Vec<u8>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(bytes).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(bytes.to_vec())
    }
}

/// Parse an IDX image file into (rows, cols, images).
pub fn parse_idx_images(bytes: &[u8]) -> Result<(u32, u32, Vec<Vec<u8>>), IdxError> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(IdxError::WrongMagic {
            expected: IMAGE_MAGIC,
            actual: magic,
        });
    }
    let n = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)?;
    let cols = be_u32(bytes, 12)?;
    let pixel_count = rows as usize * cols as usize;
    let expected = 16 + n * pixel_count;
    if bytes.len() < expected {
        return Err(IdxError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    let images = (0..n)
        .map(|i| bytes[16 + i * pixel_count..16 + (i + 1) * pixel_count].to_vec())
        .collect();
    Ok((rows, cols, images))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, IdxError> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(IdxError::WrongMagic {
            expected: LABEL_MAGIC,
            actual: magic,
        });
    }
    let n = be_u32(bytes, 4)? as usize;
    let expected = 8 + n;
    if bytes.len() < expected {
        return Err(IdxError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    Ok(bytes[8..8 + n].to_vec())
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

/// Parse a matching image/label pair from raw bytes.
pub fn parse_pair(image_bytes: &[u8], label_bytes: &[u8]) -> anyhow::Result<ImageSet> {
    let checksum = (sha256_hex(image_bytes), sha256_hex(label_bytes));
    let (rows, cols, images) = parse_idx_images(&maybe_gunzip(image_bytes)?)?;
    let labels = parse_idx_labels(&maybe_gunzip(label_bytes)?)?;
    if images.len() != labels.len() {
        return Err(IdxError::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        }
        .into());
    }
    Ok(ImageSet {
        rows,
        cols,
        images,
        labels,
        source_checksum: checksum,
    })
}

/// Load an image/label pair from disk (raw or gzip).
pub fn load_pair(images: &Path, labels: &Path) -> anyhow::Result<ImageSet> {
    let ib = std::fs::read(images)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", images.display()))?;
    let lb = std::fs::read(labels)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", labels.display()))?;
    parse_pair(&ib, &lb)
}

/// Keep only images with the given label, order preserved.
pub fn filter_label(set: &ImageSet, digit: u8) -> ImageSet {
    let keep: Vec<usize> = set
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == digit)
        .map(|(i, _)| i)
        .collect();
    ImageSet {
        rows: set.rows,
        cols: set.cols,
        images: keep.iter().map(|&i| set.images[i].clone()).collect(),
        labels: keep.iter().map(|&i| set.labels[i]).collect(),
        source_checksum: set.source_checksum.clone(),
    }
}

/// Find the standard training pair under `dir`, raw or gzipped.
pub fn locate(dir: &Path) -> Option<(std::path::PathBuf, std::path::PathBuf)> {
    let pick = |stem: &str| {
        [format!("{stem}"), format!("{stem}.gz")]
            .iter()
            .map(|n| dir.join(n))
            .find(|p| p.exists())
    };
    Some((pick("train-images-idx3-ubyte")?, pick("train-labels-idx1-ubyte")?))
}

/// Seeded corrupted-pixel set with per-pixel noise rates from a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionMap {
    pub pixels: Vec<usize>,
    pub lambdas: Vec<f64>,
}

impl CorruptionMap {
    pub fn random(n_pixels: usize, count: usize, band: (f64, f64), seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pixels: Vec<usize> = Vec::with_capacity(count);
        while pixels.len() < count.min(n_pixels) {
            let p = rng.gen_range(0..n_pixels);
            if !pixels.contains(&p) {
                pixels.push(p);
            }
        }
        let lambdas = (0..pixels.len()).map(|_| rng.gen_range(band.0..band.1)).collect();
        CorruptionMap { pixels, lambdas }
    }

    pub fn empty() -> Self {
        CorruptionMap {
            pixels: Vec::new(),
            lambdas: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_images(n: u32, rows: u32, cols: u32) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
        b.extend_from_slice(&n.to_be_bytes());
        b.extend_from_slice(&rows.to_be_bytes());
        b.extend_from_slice(&cols.to_be_bytes());
        for i in 0..(n * rows * cols) {
            b.push((i % 251) as u8);
        }
        b
    }

    fn idx_labels(labels: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        b.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        b.extend_from_slice(labels);
        b
    }

    #[test]
    fn parses_valid_pair() {
        let set = parse_pair(&idx_images(3, 4, 5), &idx_labels(&[0, 1, 0])).unwrap();
        assert_eq!(set.images.len(), 3);
        assert_eq!(set.images[0].len(), 20);
        assert_eq!(set.labels, [0, 1, 0]);
    }

    #[test]
    fn label_magic_fed_to_image_parser_errors() {
        let err = parse_idx_images(&idx_labels(&[1, 2])).unwrap_err();
        assert_eq!(
            err,
            IdxError::WrongMagic {
                expected: IMAGE_MAGIC,
                actual: LABEL_MAGIC
            }
        );
    }

    #[test]
    fn truncation_names_expected_and_actual_length() {
        let mut b = idx_images(2, 4, 4);
        b.truncate(30);
        match parse_idx_images(&b).unwrap_err() {
            IdxError::Truncated { expected, actual } => {
                assert_eq!(expected, 16 + 2 * 16);
                assert_eq!(actual, 30);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_rejected() {
        let err = parse_pair(&idx_images(3, 2, 2), &idx_labels(&[0, 1])).unwrap_err();
        assert!(err.to_string().contains("3 images but 2 labels"));
    }

    #[test]
    fn gzip_round_trip() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let raw = idx_images(2, 3, 3);
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(&raw).unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(maybe_gunzip(&gz).unwrap(), raw);
        assert_eq!(maybe_gunzip(&raw).unwrap(), raw);
    }

    #[test]
    fn filter_keeps_order_and_is_idempotent() {
        let set = parse_pair(&idx_images(4, 2, 2), &idx_labels(&[1, 0, 1, 1])).unwrap();
        let ones = filter_label(&set, 1);
        assert_eq!(ones.images.len(), 3);
        assert_eq!(ones.images[0], set.images[0]);
        assert_eq!(ones.images[1], set.images[2]);
        assert_eq!(filter_label(&ones, 1), ones);
        assert!(filter_label(&set, 11).images.is_empty());
    }

    #[test]
    fn corruption_map_is_seeded_and_in_band() {
        let a = CorruptionMap::random(784, 40, (1.0, 3.0), 7);
        let b = CorruptionMap::random(784, 40, (1.0, 3.0), 7);
        assert_eq!(a, b);
        assert_eq!(a.pixels.len(), 40);
        let mut sorted = a.pixels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 40);
        assert!(a.lambdas.iter().all(|&l| (1.0..3.0).contains(&l)));
    }
}

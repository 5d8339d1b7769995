//! Binary PGM (P5) grayscale output for receptive-field maps.

use std::path::Path;

/// Write 8-bit grayscale data as binary PGM.
pub fn write_pgm(path: &Path, width: usize, height: usize, data: &[u8]) -> anyhow::Result<()> {
    anyhow::ensure!(
        data.len() == width * height,
        "pgm: {} bytes for {width}x{height}",
        data.len()
    );
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(data);
    std::fs::write(path, bytes).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
}

/// Scale arbitrary values into the full 0..255 range (constant input maps
/// to 0).
pub fn scale_to_u8(values: &[f64]) -> Vec<u8> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|&v| {
            if max > min {
                ((v - min) / (max - min) * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect()
}

use std::fmt::Write as _;
use std::path::Path;

use crate::nn::{write_atomic, Tensor};
use crate::Error;

/// A jacobian together with its 0–255 rendering.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatMap {
    pub raw: Tensor<f64>,
    pub scaled: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
}

/// Scale `|raw|` so the largest magnitude maps to 255.
pub fn to_heatmap(raw: Tensor<f64>) -> Result<HeatMap, Error> {
    let max = raw.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 || !max.is_finite() {
        return Err(Error::Unsupported("heat map of an all-zero or non-finite matrix".into()));
    }
    let scaled = raw
        .data()
        .iter()
        .map(|v| (255.0 * v.abs() / max).round() as u8)
        .collect();
    let (rows, cols) = (raw.rows(), raw.cols());
    Ok(HeatMap {
        raw,
        scaled,
        rows,
        cols,
    })
}

/// Mean of `|a − b|` over scaled entries, in 0–255 units.
pub fn heatmap_mean_abs_diff(a: &HeatMap, b: &HeatMap) -> Result<f64, Error> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::Config(format!(
            "heat maps differ in size: {}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let total: f64 = a
        .scaled
        .iter()
        .zip(&b.scaled)
        .map(|(&x, &y)| (x as f64 - y as f64).abs())
        .sum();
    Ok(total / a.scaled.len() as f64)
}

impl HeatMap {
    /// Scaled bytes as comma-separated rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.scaled.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }

    /// Binary 8-bit grayscale PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        out.extend_from_slice(&self.scaled);
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), Error> {
        Ok(write_atomic(path, self.to_csv().as_bytes())?)
    }

    pub fn write_pgm(&self, path: &Path) -> Result<(), Error> {
        Ok(write_atomic(path, &self.to_pgm())?)
    }
}

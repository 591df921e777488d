//! Zero-forcing equalisation and post-detection SNRs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernel::{pseudo_inverse, CMatrix, Cholesky};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSnrs {
    pub values: Vec<f64>,
    pub min_index: usize,
    pub min_value: f64,
}

impl StreamSnrs {
    pub fn from_values(values: Vec<f64>) -> StreamSnrs {
        let (min_index, min_value) = values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
        StreamSnrs {
            values,
            min_index,
            min_value,
        }
    }
}

/// `gamma_i = (p / noise_scale) / [(H^H H)^-1]_{ii}`.
pub fn zf_snrs(h: &CMatrix, p: f64, noise_scale: f64) -> Result<StreamSnrs> {
    if h.rows() < h.cols() {
        return Err(Error::SingularChannel(format!(
            "{}x{} channel has fewer rows than streams",
            h.rows(),
            h.cols()
        )));
    }
    let ch = Cholesky::new(&h.gram()).map_err(|e| Error::SingularChannel(e.to_string()))?;
    let snr = p / noise_scale;
    Ok(StreamSnrs::from_values(
        ch.inverse_diagonal().into_iter().map(|d| snr / d).collect(),
    ))
}

/// ZF filter `W = H^+`.
pub fn zf_filter(h: &CMatrix) -> Result<CMatrix> {
    pseudo_inverse(h)
}

//! Adaptive compensation of light attenuation.
//!
//! Each A-scan is raised to the contrast exponent `n` and divided by twice
//! its remaining energy below the current depth:
//!
//! ```text
//! s(d) = I(d)^n
//! E(d) = s(d) + s(d+1) + ... + s(nd-1)
//! O(d) = s(d) / (2 * max(E(d), 10^-t))
//! ```
//!
//! Shadows cast by superficial absorbers scale numerator and tail energy by
//! the same factor and cancel. The floor `10^-t` (threshold exponent `t`)
//! bounds the gain at depths where only noise is left. The floor sits in the
//! denominator, so the output is continuous across it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::volume::IntensityVolume;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensationParams {
    /// Contrast exponent `n`.
    pub contrast_exp: f64,
    /// Threshold exponent `t`; the energy floor is `10^-t`.
    pub threshold_exp: f64,
    /// Map each compensated B-scan onto `[0, 1]` by its own maximum.
    pub rescale_per_bscan: bool,
}

impl Default for CompensationParams {
    fn default() -> Self {
        CompensationParams {
            contrast_exp: 2.0,
            threshold_exp: 12.0,
            rescale_per_bscan: true,
        }
    }
}

impl CompensationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.contrast_exp.is_finite() && self.contrast_exp > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "contrast exponent must be positive, got {}",
                self.contrast_exp
            )));
        }
        if !(self.threshold_exp.is_finite() && self.threshold_exp > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold exponent must be positive, got {}",
                self.threshold_exp
            )));
        }
        Ok(())
    }

    pub fn energy_floor(&self) -> f64 {
        10f64.powf(-self.threshold_exp)
    }
}

/// Tail energies `E(d)` of an already exponentiated A-scan, accumulated from
/// the deepest sample upwards.
pub fn tail_energy(powered: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; powered.len()];
    let mut acc = 0.0;
    for (e, &s) in out.iter_mut().zip(powered).rev() {
        acc += s;
        *e = acc;
    }
    out
}

/// On a bad sample returns its position within the A-scan and its value.
fn compensate_into(
    ascan: &[f64],
    params: &CompensationParams,
    out: &mut [f64],
) -> std::result::Result<(), (usize, f64)> {
    let n = params.contrast_exp;
    let floor = params.energy_floor();
    for (d, (o, &v)) in out.iter_mut().zip(ascan).enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            return Err((d, v));
        }
        *o = if n == 1.0 { v } else { v.powf(n) };
    }
    let mut acc = 0.0;
    for o in out.iter_mut().rev() {
        let s = *o;
        acc += s;
        *o = s / (2.0 * acc.max(floor));
    }
    Ok(())
}

/// Compensate one A-scan. Input is expected in `[0, 1]` (run
/// [`normalize_intensity`](crate::volume::normalize_intensity) first).
pub fn compensate_ascan(ascan: &[f64], params: &CompensationParams) -> Result<Vec<f64>> {
    params.validate()?;
    let mut out = vec![0.0; ascan.len()];
    compensate_into(ascan, params, &mut out)
        .map_err(|(index, value)| Error::InvalidIntensity { value, index })?;
    Ok(out)
}

/// Compensate every A-scan of a normalized volume independently.
///
/// B-scans are processed in parallel; each column only reads its own
/// samples, so the result does not depend on the thread count.
pub fn compensate_volume(
    vol: &IntensityVolume,
    params: &CompensationParams,
) -> Result<IntensityVolume> {
    params.validate()?;
    let max = vol.max_value();
    if max > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "compensation expects a normalized volume, maximum is {max}"
        )));
    }
    let dims = vol.dims();
    let per_bscan = dims.na * dims.nd;
    let mut data = vol.data().to_vec();

    data.par_chunks_mut(per_bscan)
        .enumerate()
        .try_for_each(|(b, bscan)| -> Result<()> {
            let mut src = vec![0.0f64; dims.nd];
            let mut dst = vec![0.0f64; dims.nd];
            for (a, column) in bscan.chunks_mut(dims.nd).enumerate() {
                for (s, &v) in src.iter_mut().zip(column.iter()) {
                    *s = v as f64;
                }
                compensate_into(&src, params, &mut dst).map_err(|(d, value)| {
                    Error::InvalidIntensity {
                        value,
                        index: dims.index(b, a, d),
                    }
                })?;
                for (c, &o) in column.iter_mut().zip(&dst) {
                    *c = o as f32;
                }
            }
            if params.rescale_per_bscan {
                let peak = bscan.iter().copied().fold(0.0f32, f32::max);
                if peak > 0.0 {
                    for v in bscan.iter_mut() {
                        *v /= peak;
                    }
                }
            }
            Ok(())
        })?;

    IntensityVolume::new(dims, vol.spacing(), data)
}

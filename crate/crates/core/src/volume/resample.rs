use crate::error::{Error, Result};

use super::{Dims, VoxelSpacing};

/// Segmentation grid size, `(A-scans, depth samples)`.
pub const BSCAN_TARGET: (usize, usize) = (256, 256);

/// One B-scan: `width` A-scans of `height` depth samples, stored A-scan by
/// A-scan (depth fastest) like the parent volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy> Plane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "plane {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, a: usize, d: usize) -> T {
        self.data[a * self.height + d]
    }

    #[inline]
    pub fn set(&mut self, a: usize, d: usize, v: T) {
        self.data[a * self.height + d] = v;
    }
}

fn check_source<T>(src: &Plane<T>, target: (usize, usize)) -> Result<()> {
    if src.width < 2 || src.height < 2 {
        return Err(Error::ShapeMismatch(format!(
            "resize source {}x{} must be at least 2x2",
            src.width, src.height
        )));
    }
    if target.0 == 0 || target.1 == 0 {
        return Err(Error::ShapeMismatch(
            "resize target must be non-empty".into(),
        ));
    }
    Ok(())
}

// Pixel-centre mapping: destination sample i covers source coordinate
// (i + 0.5) * n_src / n_dst - 0.5.
#[inline]
fn source_coord(i: usize, n_src: usize, n_dst: usize) -> f64 {
    (i as f64 + 0.5) * n_src as f64 / n_dst as f64 - 0.5
}

fn nearest_index(i: usize, n_src: usize, n_dst: usize) -> usize {
    // floor((i + 0.5) * n_src / n_dst), computed in integers
    ((2 * i + 1) * n_src / (2 * n_dst)).min(n_src - 1)
}

/// Nearest-neighbour resize. Used for label planes: every output value is
/// copied from some input sample.
pub fn resize_nearest<T: Copy>(src: &Plane<T>, target: (usize, usize)) -> Result<Plane<T>> {
    check_source(src, target)?;
    let (w, h) = target;
    let rows: Vec<usize> = (0..h).map(|d| nearest_index(d, src.height, h)).collect();
    let mut data = Vec::with_capacity(w * h);
    for a in 0..w {
        let sa = nearest_index(a, src.width, w);
        data.extend(rows.iter().map(|&sd| src.get(sa, sd)));
    }
    Plane::new(w, h, data)
}

fn bilinear_taps(i: usize, n_src: usize, n_dst: usize) -> (usize, usize, f64) {
    let x = source_coord(i, n_src, n_dst).clamp(0.0, (n_src - 1) as f64);
    let lo = (x.floor() as usize).min(n_src - 1);
    let hi = (lo + 1).min(n_src - 1);
    (lo, hi, x - lo as f64)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Bilinear resize for intensity planes. Edges are clamped.
pub fn resize_bilinear(src: &Plane<f32>, target: (usize, usize)) -> Result<Plane<f32>> {
    check_source(src, target)?;
    let (w, h) = target;
    let rows: Vec<_> = (0..h).map(|d| bilinear_taps(d, src.height, h)).collect();
    let mut data = Vec::with_capacity(w * h);
    for a in 0..w {
        let (a0, a1, ta) = bilinear_taps(a, src.width, w);
        for &(d0, d1, td) in &rows {
            let top = lerp(src.get(a0, d0) as f64, src.get(a0, d1) as f64, td);
            let bottom = lerp(src.get(a1, d0) as f64, src.get(a1, d1) as f64, td);
            data.push(lerp(top, bottom, ta) as f32);
        }
    }
    Plane::new(w, h, data)
}

/// Spacing after resampling every B-scan of `dims` to [`BSCAN_TARGET`].
pub(crate) fn rescaled_spacing(s: VoxelSpacing, dims: Dims) -> VoxelSpacing {
    let (na, nd) = BSCAN_TARGET;
    VoxelSpacing {
        dz_mm: s.dz_mm,
        dx_mm: s.dx_mm * dims.na as f64 / na as f64,
        dy_mm: s.dy_mm * dims.nd as f64 / nd as f64,
    }
}

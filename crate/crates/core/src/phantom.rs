//! Synthetic optic nerve heads with closed-form tissue volumes.
//!
//! Geometry, in millimetres, with `z` along B-scans, `x` along A-scans and
//! `y` the depth (growing downwards). Voxel `(b, a, d)` has its centre at
//! `((b + ½)·dz, (a + ½)·dx, (d + ½)·dy)`.
//!
//! * Outside the disc (lateral distance from the disc axis `>= bmo_radius`)
//!   classes 1..=6 are flat slabs stacked from `surface_mm` down.
//! * Inside the disc the RPE and every other slab is absent: class 1 fills
//!   from the surface down to the lamina top
//!   `surface + t1 + t2 + t3 + t4 + lamina_offset`, class 7 fills the next
//!   `lamina_thickness`, and background lies below.
//! * An optional spherical-cap dome of class 1 with height `swelling_height`
//!   (at most the disc radius) rises above the surface over the disc.
//! * Drusen are axis-aligned ellipsoids of class 8 beneath the surface and
//!   inside the disc footprint.
//!
//! A voxel takes the class of the shape containing its centre, drusen first,
//! then the dome, then the layer stack.
//!
//! Vessels only alter optics: they are cylinders along `z` that add
//! attenuation to whatever tissue they cross.

use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::volume::{Dims, IntensityVolume, LabelVolume, VoxelSpacing};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    /// `[z, x, y]` in mm.
    pub center_mm: [f64; 3],
    /// Semi-axes along `[z, x, y]` in mm.
    pub semi_axes_mm: [f64; 3],
}

impl Ellipsoid {
    pub fn volume(&self) -> f64 {
        let [a, c, b] = self.semi_axes_mm;
        4.0 / 3.0 * PI * a * c * b
    }

    fn contains(&self, p: [f64; 3]) -> bool {
        let s: f64 = p
            .iter()
            .zip(self.center_mm)
            .zip(self.semi_axes_mm)
            .map(|((&x, c), r)| ((x - c) / r).powi(2))
            .sum();
        s < 1.0
    }

    /// Volume between the depth planes `y_top` and `y_bottom`.
    pub fn volume_between(&self, y_top: f64, y_bottom: f64) -> f64 {
        let [a, c, b] = self.semi_axes_mm;
        let cy = self.center_mm[2];
        let u1 = ((y_top - cy) / b).clamp(-1.0, 1.0);
        let u2 = ((y_bottom - cy) / b).clamp(-1.0, 1.0);
        if u2 <= u1 {
            return 0.0;
        }
        let f = |u: f64| u - u * u * u / 3.0;
        PI * a * c * b * (f(u2) - f(u1))
    }

    fn bbox(&self) -> [(f64, f64); 3] {
        std::array::from_fn(|i| {
            (
                self.center_mm[i] - self.semi_axes_mm[i],
                self.center_mm[i] + self.semi_axes_mm[i],
            )
        })
    }
}

/// Absorbing cylinder running along `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vessel {
    pub x_mm: f64,
    pub y_mm: f64,
    pub radius_mm: f64,
    /// Attenuation added on top of the tissue it crosses (1/mm).
    pub attenuation_per_mm: f64,
}

impl Vessel {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.x_mm, y - self.y_mm);
        dx * dx + dy * dy < self.radius_mm * self.radius_mm
    }
}

/// Per-class reflectivity and attenuation, indexed by class code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optics {
    pub reflectivity: [f64; 9],
    pub attenuation_per_mm: [f64; 9],
}

impl Default for Optics {
    fn default() -> Self {
        Optics {
            reflectivity: [0.0, 0.6, 0.35, 0.25, 1.0, 0.5, 0.3, 0.45, 0.1],
            attenuation_per_mm: [0.0, 1.5, 2.0, 1.5, 8.0, 4.0, 3.0, 2.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    /// `[B-scans, A-scans, depth samples]`.
    pub dims: [usize; 3],
    /// `[dz, dx, dy]` in mm.
    pub spacing_mm: [f64; 3],
    /// Depth of the retinal surface.
    pub surface_mm: f64,
    /// Slab thicknesses for classes 1..=6.
    pub layers_mm: [f64; 6],
    /// Disc axis `[z, x]`; the lateral centre of the volume when absent.
    #[serde(default)]
    pub disc_center_mm: Option<[f64; 2]>,
    pub bmo_radius_mm: f64,
    /// Extra class-1 depth inside the disc below the RPE level.
    #[serde(default)]
    pub lamina_offset_mm: f64,
    #[serde(default)]
    pub lamina_thickness_mm: f64,
    #[serde(default)]
    pub swelling_height_mm: f64,
    #[serde(default)]
    pub drusen: Vec<Ellipsoid>,
    #[serde(default)]
    pub vessels: Vec<Vessel>,
    #[serde(default)]
    pub optics: Optics,
    #[serde(default)]
    pub speckle_sigma: f64,
}

/// Closed-form score targets of a spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticVolumes {
    pub drusen_mm3: f64,
    pub swelling_mm3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Healthy,
    Odd,
    Papilledema,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Healthy, Preset::Odd, Preset::Papilledema];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Healthy => "healthy",
            Preset::Odd => "odd",
            Preset::Papilledema => "papilledema",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "healthy" => Ok(Preset::Healthy),
            "odd" => Ok(Preset::Odd),
            "papilledema" => Ok(Preset::Papilledema),
            other => Err(Error::InvalidParameter(format!(
                "unknown preset {other:?} (expected healthy, odd or papilledema)"
            ))),
        }
    }
}

impl PhantomSpec {
    /// 2.0 × 2.0 × 2.4 mm at 0.02 mm pitch, disc radius 0.75 mm.
    pub fn preset(p: Preset) -> PhantomSpec {
        let base = PhantomSpec {
            dims: [100, 100, 120],
            spacing_mm: [0.02, 0.02, 0.02],
            surface_mm: 1.1,
            layers_mm: [0.1, 0.08, 0.1, 0.03, 0.25, 0.4],
            disc_center_mm: None,
            bmo_radius_mm: 0.75,
            lamina_offset_mm: 0.39,
            lamina_thickness_mm: 0.25,
            swelling_height_mm: 0.0,
            drusen: Vec::new(),
            vessels: Vec::new(),
            optics: Optics::default(),
            speckle_sigma: 0.0,
        };
        match p {
            Preset::Healthy => base,
            Preset::Odd => PhantomSpec {
                swelling_height_mm: 0.35,
                drusen: vec![Ellipsoid {
                    center_mm: [1.0, 1.0, 1.1 + 0.4],
                    semi_axes_mm: [0.3, 0.3, 0.3],
                }],
                ..base
            },
            Preset::Papilledema => PhantomSpec {
                swelling_height_mm: 0.75,
                lamina_offset_mm: 0.7,
                ..base
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<PhantomSpec> {
        let spec: PhantomSpec = toml::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("phantom spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PhantomSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PhantomSpec::from_toml(&text)
    }

    pub fn volume_dims(&self) -> Result<Dims> {
        Dims::new(self.dims[0], self.dims[1], self.dims[2])
    }

    pub fn spacing(&self) -> Result<VoxelSpacing> {
        let [dz, dx, dy] = self.spacing_mm;
        VoxelSpacing::new(dz, dx, dy)
    }

    /// Physical extent `[z, x, y]` in mm.
    pub fn extent_mm(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.dims[i] as f64 * self.spacing_mm[i])
    }

    pub fn disc_center(&self) -> [f64; 2] {
        self.disc_center_mm.unwrap_or_else(|| {
            let e = self.extent_mm();
            [e[0] / 2.0, e[1] / 2.0]
        })
    }

    /// Depth where the lamina starts inside the disc.
    pub fn lamina_top_mm(&self) -> f64 {
        self.surface_mm + self.layers_mm[..4].iter().sum::<f64>() + self.lamina_offset_mm
    }

    /// Radius of the sphere whose cap forms the dome.
    fn dome_sphere_radius(&self) -> f64 {
        let (r, h) = (self.bmo_radius_mm, self.swelling_height_mm);
        (r * r + h * h) / (2.0 * h)
    }

    pub fn dome_volume(&self) -> f64 {
        let (r, h) = (self.bmo_radius_mm, self.swelling_height_mm);
        if h <= 0.0 || r <= 0.0 {
            return 0.0;
        }
        PI * h * (3.0 * r * r + h * h) / 6.0
    }

    pub fn validate(&self) -> Result<()> {
        let geo = |msg: String| Err(Error::Geometry(msg));
        self.volume_dims()?;
        self.spacing()?;
        let nonneg = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Geometry(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )))
            }
        };
        nonneg("surface_mm", self.surface_mm)?;
        for (i, &t) in self.layers_mm.iter().enumerate() {
            nonneg(&format!("layer {} thickness", i + 1), t)?;
        }
        nonneg("bmo_radius_mm", self.bmo_radius_mm)?;
        nonneg("lamina_offset_mm", self.lamina_offset_mm)?;
        nonneg("lamina_thickness_mm", self.lamina_thickness_mm)?;
        nonneg("swelling_height_mm", self.swelling_height_mm)?;
        nonneg("speckle_sigma", self.speckle_sigma)?;
        for c in 0..9 {
            nonneg("reflectivity", self.optics.reflectivity[c])?;
            nonneg("attenuation", self.optics.attenuation_per_mm[c])?;
        }

        let [lz, lx, ly] = self.extent_mm();
        let [cz, cx] = self.disc_center();
        let r = self.bmo_radius_mm;
        let y0 = self.surface_mm;
        if y0 - self.swelling_height_mm < 0.0 {
            return geo(format!(
                "dome of height {} rises above the volume top (surface at {y0})",
                self.swelling_height_mm
            ));
        }
        if self.swelling_height_mm > r {
            return geo(format!(
                "dome height {} exceeds the disc radius {r}; the cap would overhang the disc",
                self.swelling_height_mm
            ));
        }
        let stack_bottom = y0 + self.layers_mm.iter().sum::<f64>();
        if stack_bottom > ly {
            return geo(format!(
                "layer stack ends at {stack_bottom} mm, volume depth is {ly} mm"
            ));
        }
        if r > 0.0 {
            if cz - r < 0.0 || cz + r > lz || cx - r < 0.0 || cx + r > lx {
                return geo(format!(
                    "disc of radius {r} at ({cz}, {cx}) leaves the volume"
                ));
            }
            let lamina_bottom = self.lamina_top_mm() + self.lamina_thickness_mm;
            if lamina_bottom > ly {
                return geo(format!(
                    "lamina ends at {lamina_bottom} mm, volume depth is {ly} mm"
                ));
            }
        }

        let extent = [lz, lx, ly];
        for (i, e) in self.drusen.iter().enumerate() {
            if e.semi_axes_mm.iter().any(|&s| !(s.is_finite() && s > 0.0))
                || e.center_mm.iter().any(|c| !c.is_finite())
            {
                return geo(format!("druse {i}: semi-axes must be positive"));
            }
            let bb = e.bbox();
            for (axis, &(lo, hi)) in bb.iter().enumerate() {
                if lo < 0.0 || hi > extent[axis] {
                    return geo(format!("druse {i} leaves the volume"));
                }
            }
            if bb[2].0 < y0 {
                return geo(format!("druse {i} rises above the retinal surface"));
            }
            let dist = ((e.center_mm[0] - cz).powi(2) + (e.center_mm[1] - cx).powi(2)).sqrt();
            if dist + e.semi_axes_mm[0].max(e.semi_axes_mm[1]) > r {
                return geo(format!("druse {i} is not inside the disc"));
            }
            for (j, other) in self.drusen[..i].iter().enumerate() {
                let ob = other.bbox();
                if (0..3).all(|a| bb[a].0 < ob[a].1 && ob[a].0 < bb[a].1) {
                    return geo(format!("drusen {j} and {i} overlap"));
                }
            }
        }
        for (i, v) in self.vessels.iter().enumerate() {
            nonneg("vessel attenuation", v.attenuation_per_mm)?;
            if !(v.radius_mm.is_finite() && v.radius_mm > 0.0)
                || v.x_mm - v.radius_mm < 0.0
                || v.x_mm + v.radius_mm > lx
                || v.y_mm - v.radius_mm < 0.0
                || v.y_mm + v.radius_mm > ly
            {
                return geo(format!("vessel {i} leaves the volume or has no radius"));
            }
        }
        Ok(())
    }

    /// Class of the point `p = [z, x, y]`.
    fn class_at(&self, p: [f64; 3], disc: [f64; 2]) -> u8 {
        if self.drusen.iter().any(|e| e.contains(p)) {
            return 8;
        }
        let [z, x, y] = p;
        let y0 = self.surface_mm;
        let r = self.bmo_radius_mm;
        let rho2 = (z - disc[0]).powi(2) + (x - disc[1]).powi(2);
        let inside = rho2 < r * r;
        if inside {
            if y < y0 {
                let h = self.swelling_height_mm;
                if h > 0.0 {
                    let big_r = self.dome_sphere_radius();
                    let sy = y0 + big_r - h;
                    if rho2 + (y - sy).powi(2) < big_r * big_r {
                        return 1;
                    }
                }
                return 0;
            }
            let top = self.lamina_top_mm();
            if y < top {
                return 1;
            }
            if y < top + self.lamina_thickness_mm {
                return 7;
            }
            return 0;
        }
        if y < y0 {
            return 0;
        }
        let mut edge = y0;
        for (i, &t) in self.layers_mm.iter().enumerate() {
            edge += t;
            if y < edge {
                return i as u8 + 1;
            }
        }
        0
    }

    /// Attenuation added by vessels at the point `[x, y]`.
    fn vessel_attenuation(&self, x: f64, y: f64) -> f64 {
        self.vessels
            .iter()
            .filter(|v| v.contains(x, y))
            .map(|v| v.attenuation_per_mm)
            .sum()
    }
}

/// Rasterize a spec by voxel centres. B-scans are filled in parallel.
pub fn gen_labels(spec: &PhantomSpec) -> Result<LabelVolume> {
    spec.validate()?;
    let dims = spec.volume_dims()?;
    let [dz, dx, dy] = spec.spacing_mm;
    let disc = spec.disc_center();
    let mut data = vec![0u8; dims.len()];
    data.par_chunks_mut(dims.na * dims.nd)
        .enumerate()
        .for_each(|(b, bscan)| {
            let z = (b as f64 + 0.5) * dz;
            for (a, column) in bscan.chunks_mut(dims.nd).enumerate() {
                let x = (a as f64 + 0.5) * dx;
                for (d, v) in column.iter_mut().enumerate() {
                    let y = (d as f64 + 0.5) * dy;
                    *v = spec.class_at([z, x, y], disc);
                }
            }
        });
    LabelVolume::new(dims, spec.spacing()?, data)
}

/// Closed-form Drusen Score and swelling volume.
///
/// Swelling is the class-1 band inside the disc cylinder, the dome, and the
/// part of each druse lying outside the band (drusen inside it replace
/// class 1 without changing the total).
pub fn analytic_volumes(spec: &PhantomSpec) -> AnalyticVolumes {
    let r = spec.bmo_radius_mm;
    let y0 = spec.surface_mm;
    let top = spec.lamina_top_mm();
    let band = PI * r * r * (top - y0);
    let drusen: f64 = spec.drusen.iter().map(Ellipsoid::volume).sum();
    let outside_band: f64 = spec
        .drusen
        .iter()
        .map(|e| e.volume() - e.volume_between(y0, top))
        .sum();
    AnalyticVolumes {
        drusen_mm3: drusen,
        swelling_mm3: band + spec.dome_volume() + outside_band,
    }
}

/// Single-scattering forward model with multiplicative log-normal speckle:
///
/// `I = R(c) · exp(−2 Σ_{k<d} μ_k · dy) · N`, `N = exp(σZ − σ²/2)`.
///
/// `μ_k` is the class attenuation plus any vessel crossing voxel `k`. Each
/// B-scan draws its noise from its own stream, so output does not depend on
/// thread count.
pub fn render_intensity(
    labels: &LabelVolume,
    spec: &PhantomSpec,
    seed: u64,
) -> Result<IntensityVolume> {
    let dims = labels.dims();
    let dy = labels.spacing().dy_mm;
    let dx = labels.spacing().dx_mm;
    let sigma = spec.speckle_sigma;
    let optics = &spec.optics;
    let mut data = vec![0f32; dims.len()];
    data.par_chunks_mut(dims.na * dims.nd)
        .enumerate()
        .for_each(|(b, bscan)| {
            let mut rng = seed::stream(seed, "speckle", b as u64);
            for (a, column) in bscan.chunks_mut(dims.nd).enumerate() {
                let x = (a as f64 + 0.5) * dx;
                let codes = labels.column(b, a);
                let mut optical_depth = 0.0f64;
                for (d, (v, &c)) in column.iter_mut().zip(codes).enumerate() {
                    let c = c as usize;
                    let noise = if sigma > 0.0 {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        (sigma * z - sigma * sigma / 2.0).exp()
                    } else {
                        1.0
                    };
                    *v = (optics.reflectivity[c] * (-2.0 * optical_depth).exp() * noise) as f32;
                    let y = (d as f64 + 0.5) * dy;
                    let mu = optics.attenuation_per_mm[c] + spec.vessel_attenuation(x, y);
                    optical_depth += mu * dy;
                }
            }
        });
    IntensityVolume::new(dims, labels.spacing(), data)
}

/// Sidecar next to a generated phantom: `<stem>.analytic`.
pub fn write_analytic(path: impl AsRef<Path>, v: &AnalyticVolumes) -> Result<()> {
    let path = path.as_ref();
    let text = format!(
        "format_version=1\ndrusen_mm3={:?}\nswelling_mm3={:?}\n",
        v.drusen_mm3, v.swelling_mm3
    );
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_analytic(path: impl AsRef<Path>) -> Result<AnalyticVolumes> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::Metadata {
        path: path.to_path_buf(),
        msg,
    };
    let mut drusen = None;
    let mut swelling = None;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("bad line {line:?}")))?;
        let num = || v.parse::<f64>().map_err(|e| bad(format!("{k}: {e}")));
        match k {
            "format_version" if v == "1" => {}
            "format_version" => return Err(bad(format!("unsupported format_version {v}"))),
            "drusen_mm3" => drusen = Some(num()?),
            "swelling_mm3" => swelling = Some(num()?),
            _ => return Err(bad(format!("unknown key {k}"))),
        }
    }
    Ok(AnalyticVolumes {
        drusen_mm3: drusen.ok_or_else(|| bad("missing drusen_mm3".into()))?,
        swelling_mm3: swelling.ok_or_else(|| bad("missing swelling_mm3".into()))?,
    })
}

/// Random valid spec with pitch in `[0.02, 0.03]` mm, every scored feature
/// at least 12 voxels across, and flat interfaces on voxel boundaries.
pub fn random_spec(rng: &mut impl Rng) -> PhantomSpec {
    let spacing: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.02..=0.03));
    let pitch = spacing.iter().copied().fold(0.0, f64::max);
    let min_feature = 12.0 * pitch;

    let r = rng.random_range(0.5..0.8);
    let h = if rng.random_bool(0.5) {
        rng.random_range(min_feature..r)
    } else {
        0.0
    };
    // depth planes sit on voxel boundaries, like segmented layer interfaces
    let dy = spacing[2];
    let snap = |v: f64| (v / dy).round() * dy;
    let surface = snap(h + rng.random_range(0.1..0.2) + dy);
    let layers: [f64; 6] = std::array::from_fn(|_| snap(rng.random_range(0.04..0.15)));
    let band = snap(rng.random_range(0.4f64..0.9)).max(layers[..4].iter().sum::<f64>());
    let lamina_offset = band - layers[..4].iter().sum::<f64>();
    let lamina = rng.random_range(0.1..0.3);
    let lateral = 2.0 * r + 0.3;
    let center = lateral / 2.0;

    let mut drusen: Vec<Ellipsoid> = Vec::new();
    let wanted = rng.random_range(0..=3);
    let mut attempts = 0;
    while drusen.len() < wanted && attempts < 200 {
        attempts += 1;
        let semi: [f64; 3] = std::array::from_fn(|_| rng.random_range(min_feature / 2.0..0.3));
        let reach = r - semi[0].max(semi[1]);
        if reach <= 0.0 {
            continue;
        }
        let dist = rng.random_range(0.0..reach);
        let angle = rng.random_range(0.0..2.0 * PI);
        let cy = surface + semi[2] + rng.random_range(0.0..band);
        let e = Ellipsoid {
            center_mm: [center + dist * angle.cos(), center + dist * angle.sin(), cy],
            semi_axes_mm: semi,
        };
        let bb = e.bbox();
        let clash = drusen.iter().any(|o| {
            let ob = o.bbox();
            (0..3).all(|a| bb[a].0 < ob[a].1 && ob[a].0 < bb[a].1)
        });
        if !clash {
            drusen.push(e);
        }
    }

    let deepest = drusen
        .iter()
        .map(|e| e.center_mm[2] + e.semi_axes_mm[2])
        .fold(
            (surface + layers.iter().sum::<f64>()).max(surface + band + lamina),
            f64::max,
        );
    let depth = deepest + 0.1;
    let dims = [
        (lateral / spacing[0]).ceil() as usize,
        (lateral / spacing[1]).ceil() as usize,
        (depth / spacing[2]).ceil() as usize,
    ];
    PhantomSpec {
        dims,
        spacing_mm: spacing,
        surface_mm: surface,
        layers_mm: layers,
        disc_center_mm: Some([center, center]),
        bmo_radius_mm: r,
        lamina_offset_mm: lamina_offset,
        lamina_thickness_mm: lamina,
        swelling_height_mm: h,
        drusen,
        vessels: Vec::new(),
        optics: Optics::default(),
        speckle_sigma: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{drusen_score, swelling_score};

    fn small() -> PhantomSpec {
        PhantomSpec {
            dims: [4, 5, 20],
            spacing_mm: [0.1, 0.1, 0.05],
            surface_mm: 0.2,
            layers_mm: [0.0; 6],
            disc_center_mm: None,
            bmo_radius_mm: 0.0,
            lamina_offset_mm: 0.0,
            lamina_thickness_mm: 0.0,
            swelling_height_mm: 0.0,
            drusen: Vec::new(),
            vessels: Vec::new(),
            optics: Optics::default(),
            speckle_sigma: 0.0,
        }
    }

    #[test]
    fn empty_spec_is_background() {
        let v = gen_labels(&small()).unwrap();
        assert!(v.data().iter().all(|&c| c == 0));
    }

    #[test]
    fn presets_are_valid_and_ordered() {
        let mut swelling = Vec::new();
        for p in Preset::ALL {
            let spec = PhantomSpec::preset(p);
            spec.validate().unwrap();
            let v = gen_labels(&spec).unwrap();
            let a = analytic_volumes(&spec);
            let d = drusen_score(&v);
            let s = swelling_score(&v);
            if p == Preset::Odd {
                assert!((a.drusen_mm3 - 0.1131).abs() < 1e-4);
                assert!((d - a.drusen_mm3).abs() / a.drusen_mm3 < 0.03, "{d}");
            } else {
                assert_eq!(d, 0.0);
            }
            assert!(
                (s - a.swelling_mm3).abs() / a.swelling_mm3 < 0.03,
                "{p:?} {s} {}",
                a.swelling_mm3
            );
            swelling.push(s);
        }
        assert!(
            swelling[2] > swelling[1] && swelling[1] > swelling[0],
            "{swelling:?}"
        );
    }

    #[test]
    fn cap_and_band_formulas() {
        let mut s = PhantomSpec::preset(Preset::Papilledema);
        s.swelling_height_mm = 0.5;
        // ρ = 0.75, h = 0.5: sphere radius 0.8125
        assert!((s.dome_sphere_radius() - 0.8125).abs() < 1e-15);
        let r_big: f64 = 0.8125;
        let alt = PI * 0.25 * (3.0 * r_big - 0.5) / 3.0;
        assert!((s.dome_volume() - alt).abs() < 1e-12);
        // a hemisphere
        s.swelling_height_mm = 0.75;
        assert!((s.dome_volume() - 2.0 / 3.0 * PI * 0.75f64.powi(3)).abs() < 1e-12);
        let e = Ellipsoid {
            center_mm: [0.0, 0.0, 0.0],
            semi_axes_mm: [0.2, 0.3, 0.4],
        };
        assert!((e.volume_between(-1.0, 1.0) - e.volume()).abs() < 1e-15);
        assert!((e.volume_between(0.0, 1.0) - e.volume() / 2.0).abs() < 1e-15);
        assert_eq!(e.volume_between(0.5, 1.0), 0.0);
    }

    #[test]
    fn geometry_errors() {
        let mut s = small();
        s.layers_mm = [0.5, 0.5, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(s.validate(), Err(Error::Geometry(_))));
        let mut s = PhantomSpec::preset(Preset::Odd);
        s.drusen[0].center_mm[2] = 1.2; // pokes above the surface
        assert!(matches!(s.validate(), Err(Error::Geometry(_))));
        let mut s = PhantomSpec::preset(Preset::Odd);
        s.drusen[0].center_mm[1] = 1.6; // outside the disc
        assert!(s.validate().is_err());
        let mut s = PhantomSpec::preset(Preset::Odd);
        s.drusen.push(s.drusen[0]);
        assert!(s.validate().is_err());
        let mut s = PhantomSpec::preset(Preset::Healthy);
        s.swelling_height_mm = 0.8;
        assert!(s.validate().is_err());
    }

    #[test]
    fn rpe_hole_matches_radius() {
        let spec = PhantomSpec::preset(Preset::Healthy);
        let v = gen_labels(&spec).unwrap();
        let mask = crate::metrics::enface_rpe_mask(&v);
        let [cz, cx] = spec.disc_center();
        for b in 0..100 {
            for a in 0..100 {
                let z = (b as f64 + 0.5) * 0.02;
                let x = (a as f64 + 0.5) * 0.02;
                let inside = (z - cz).powi(2) + (x - cx).powi(2) < 0.75 * 0.75;
                assert_eq!(mask.get(b, a), inside);
            }
        }
    }

    #[test]
    fn reflectivity_map_without_attenuation() {
        let mut spec = PhantomSpec::preset(Preset::Healthy);
        spec.optics.attenuation_per_mm = [0.0; 9];
        let labels = gen_labels(&spec).unwrap();
        let img = render_intensity(&labels, &spec, 1).unwrap();
        for (&c, &v) in labels.data().iter().zip(img.data()) {
            assert_eq!(v, spec.optics.reflectivity[c as usize] as f32);
        }
    }

    #[test]
    fn slab_attenuation_closed_form() {
        let mut spec = small();
        spec.layers_mm = [0.3, 0.0, 0.0, 0.05, 0.0, 0.0];
        spec.optics.reflectivity = [0.0, 0.2, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        spec.optics.attenuation_per_mm = [0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let labels = gen_labels(&spec).unwrap();
        let img = render_intensity(&labels, &spec, 0).unwrap();
        // RPE starts at depth index 10 after 6 voxels of class 1
        let col = img.column(0, 0);
        let expected = (-2.0f64 * 3.0 * 0.3).exp();
        assert!((col[10] as f64 - expected).abs() < 1e-6, "{}", col[10]);
    }

    #[test]
    fn speckle_is_seeded_and_mean_one() {
        let mut spec = PhantomSpec::preset(Preset::Healthy);
        spec.speckle_sigma = 0.5;
        spec.optics.attenuation_per_mm = [0.0; 9];
        let labels = gen_labels(&spec).unwrap();
        let a = render_intensity(&labels, &spec, 3).unwrap();
        let b = render_intensity(&labels, &spec, 3).unwrap();
        let c = render_intensity(&labels, &spec, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let (mut sum, mut n) = (0.0, 0usize);
        for (&code, &v) in labels.data().iter().zip(a.data()) {
            if code == 4 {
                sum += v as f64;
                n += 1;
            }
        }
        assert!((sum / n as f64 - 1.0).abs() < 0.02, "{}", sum / n as f64);
    }

    #[test]
    fn toml_round_trip() {
        let spec = PhantomSpec::preset(Preset::Odd);
        let back = PhantomSpec::from_toml(&spec.to_toml()).unwrap();
        assert_eq!(back, spec);
        assert!(PhantomSpec::from_toml("dims = [1, 2]").is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.analytic");
        let v = analytic_volumes(&PhantomSpec::preset(Preset::Odd));
        write_analytic(&p, &v).unwrap();
        assert_eq!(read_analytic(&p).unwrap(), v);
    }

    #[test]
    fn random_specs_validate() {
        let mut rng = seed::stream(5, "spec", 0);
        for _ in 0..50 {
            random_spec(&mut rng).validate().unwrap();
        }
    }
}

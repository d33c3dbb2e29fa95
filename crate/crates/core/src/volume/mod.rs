//! Voxel grid data model shared by every other module.
//!
//! Both volume kinds are indexed `(b, a, d)`: B-scan, A-scan within the
//! B-scan, depth sample within the A-scan. Depth varies fastest, so one
//! A-scan is a contiguous slice of `nd` samples.

mod io;
mod resample;

pub use io::{load_volume, save_volume, VolumeKind, META_FORMAT_VERSION};
pub use resample::{resize_bilinear, resize_nearest, Plane, BSCAN_TARGET};

use crate::error::{Error, Result};

/// Physical distance between neighbouring samples along each axis, in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelSpacing {
    /// Between adjacent B-scans.
    pub dz_mm: f64,
    /// Between adjacent A-scans (lateral).
    pub dx_mm: f64,
    /// Between adjacent depth samples (axial).
    pub dy_mm: f64,
}

/// Acquisition ranges seen in clinical Spectralis ONH scans.
const DZ_RANGE: (f64, f64) = (0.0273, 0.246);
const DX_RANGE: (f64, f64) = (0.0055, 0.0131);
const DY_NOMINAL: f64 = 0.0039;

impl VoxelSpacing {
    pub fn new(dz_mm: f64, dx_mm: f64, dy_mm: f64) -> Result<Self> {
        let s = VoxelSpacing {
            dz_mm,
            dx_mm,
            dy_mm,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dz", self.dz_mm), ("dx", self.dx_mm), ("dy", self.dy_mm)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidVolume(format!(
                    "spacing {name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Whether the spacing sits inside the clinical acquisition envelope.
    /// Out-of-range spacing is legal (phantoms use it), it only earns a warning.
    pub fn is_plausible(&self) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| v >= lo - 1e-9 && v <= hi + 1e-9;
        within(self.dz_mm, DZ_RANGE)
            && within(self.dx_mm, DX_RANGE)
            && (self.dy_mm - DY_NOMINAL).abs() < 1e-9
    }

    pub(crate) fn warn_if_implausible(&self) {
        if !self.is_plausible() {
            log::warn!(
                "voxel spacing dz={} dx={} dy={} mm is outside the clinical range \
                 (dz {}..{}, dx {}..{}, dy {})",
                self.dz_mm,
                self.dx_mm,
                self.dy_mm,
                DZ_RANGE.0,
                DZ_RANGE.1,
                DX_RANGE.0,
                DX_RANGE.1,
                DY_NOMINAL
            );
        }
    }

    /// Volume of one voxel in mm³. Evaluated as `(dz * dx) * dy`.
    pub fn voxel_volume_mm3(&self) -> f64 {
        self.dz_mm * self.dx_mm * self.dy_mm
    }
}

/// Grid extent: B-scans, A-scans per B-scan, samples per A-scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub nb: usize,
    pub na: usize,
    pub nd: usize,
}

impl Dims {
    pub fn new(nb: usize, na: usize, nd: usize) -> Result<Self> {
        let d = Dims { nb, na, nd };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nb < 1 || self.na < 2 || self.nd < 2 {
            return Err(Error::InvalidVolume(format!(
                "dims {}x{}x{} violate nb >= 1, na >= 2, nd >= 2",
                self.nb, self.na, self.nd
            )));
        }
        self.nb
            .checked_mul(self.na)
            .and_then(|v| v.checked_mul(self.nd))
            .ok_or_else(|| Error::InvalidVolume("dims overflow".into()))?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nb * self.na * self.nd
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn columns(&self) -> usize {
        self.nb * self.na
    }

    #[inline]
    pub fn index(&self, b: usize, a: usize, d: usize) -> usize {
        (b * self.na + a) * self.nd + d
    }
}

/// The nine tissue codes of the segmentation scheme.
///
/// Numbering is part of the file format. The scores look classes up by
/// number: RPE is 4 and ODD is 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum TissueClass {
    Background = 0,
    RnflPrelamina = 1,
    GclIpl = 2,
    OtherRetina = 3,
    Rpe = 4,
    Choroid = 5,
    Sclera = 6,
    LaminaCribrosa = 7,
    Drusen = 8,
}

impl TissueClass {
    pub const COUNT: usize = 9;

    pub const ALL: [TissueClass; 9] = [
        TissueClass::Background,
        TissueClass::RnflPrelamina,
        TissueClass::GclIpl,
        TissueClass::OtherRetina,
        TissueClass::Rpe,
        TissueClass::Choroid,
        TissueClass::Sclera,
        TissueClass::LaminaCribrosa,
        TissueClass::Drusen,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            TissueClass::Background => "background",
            TissueClass::RnflPrelamina => "rnfl_prelamina",
            TissueClass::GclIpl => "gcl_ipl",
            TissueClass::OtherRetina => "other_retina",
            TissueClass::Rpe => "rpe",
            TissueClass::Choroid => "choroid",
            TissueClass::Sclera => "sclera",
            TissueClass::LaminaCribrosa => "lamina_cribrosa",
            TissueClass::Drusen => "odd",
        }
    }
}

/// Reflectance samples, nonnegative and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityVolume {
    dims: Dims,
    spacing: VoxelSpacing,
    data: Vec<f32>,
}

impl IntensityVolume {
    pub fn new(dims: Dims, spacing: VoxelSpacing, data: Vec<f32>) -> Result<Self> {
        dims.validate()?;
        spacing.validate()?;
        if data.len() != dims.len() {
            return Err(Error::InvalidVolume(format!(
                "data holds {} samples, dims require {}",
                data.len(),
                dims.len()
            )));
        }
        if let Some((index, &v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidIntensity {
                value: v as f64,
                index,
            });
        }
        Ok(IntensityVolume {
            dims,
            spacing,
            data,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> VoxelSpacing {
        self.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, b: usize, a: usize, d: usize) -> f32 {
        self.data[self.dims.index(b, a, d)]
    }

    /// The A-scan at `(b, a)`.
    pub fn column(&self, b: usize, a: usize) -> &[f32] {
        let start = self.dims.index(b, a, 0);
        &self.data[start..start + self.dims.nd]
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(0.0, f32::max)
    }

    /// B-scan `b` as an `na x nd` plane.
    pub fn bscan(&self, b: usize) -> Plane<f32> {
        let n = self.dims.na * self.dims.nd;
        let start = b * n;
        Plane::new(
            self.dims.na,
            self.dims.nd,
            self.data[start..start + n].to_vec(),
        )
        .expect("B-scan slice matches dims")
    }

    /// Resample every B-scan to 256 x 256 (bilinear), rescaling lateral and
    /// axial spacing to keep physical extent.
    pub fn resize_bscans(&self) -> Result<IntensityVolume> {
        let (na, nd) = BSCAN_TARGET;
        let mut data = Vec::with_capacity(self.dims.nb * na * nd);
        for b in 0..self.dims.nb {
            data.extend_from_slice(resize_bilinear(&self.bscan(b), BSCAN_TARGET)?.data());
        }
        let dims = Dims::new(self.dims.nb, na, nd)?;
        IntensityVolume::new(
            dims,
            resample::rescaled_spacing(self.spacing, self.dims),
            data,
        )
    }
}

/// Tissue class code per voxel, each in `0..=8`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    dims: Dims,
    spacing: VoxelSpacing,
    data: Vec<u8>,
}

impl LabelVolume {
    pub fn new(dims: Dims, spacing: VoxelSpacing, data: Vec<u8>) -> Result<Self> {
        dims.validate()?;
        spacing.validate()?;
        if data.len() != dims.len() {
            return Err(Error::InvalidVolume(format!(
                "data holds {} labels, dims require {}",
                data.len(),
                dims.len()
            )));
        }
        if let Some((index, &code)) = data
            .iter()
            .enumerate()
            .find(|(_, c)| **c as usize >= TissueClass::COUNT)
        {
            return Err(Error::InvalidLabel { code, index });
        }
        Ok(LabelVolume {
            dims,
            spacing,
            data,
        })
    }

    /// All-background volume.
    pub fn zeros(dims: Dims, spacing: VoxelSpacing) -> Result<Self> {
        LabelVolume::new(dims, spacing, vec![0; dims.len()])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> VoxelSpacing {
        self.spacing
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn get(&self, b: usize, a: usize, d: usize) -> u8 {
        self.data[self.dims.index(b, a, d)]
    }

    /// Overwrite one voxel. Codes above 8 are rejected.
    pub fn set(&mut self, b: usize, a: usize, d: usize, code: u8) -> Result<()> {
        if code as usize >= TissueClass::COUNT {
            return Err(Error::InvalidLabel {
                code,
                index: self.dims.index(b, a, d),
            });
        }
        let i = self.dims.index(b, a, d);
        self.data[i] = code;
        Ok(())
    }

    pub fn column(&self, b: usize, a: usize) -> &[u8] {
        let start = self.dims.index(b, a, 0);
        &self.data[start..start + self.dims.nd]
    }

    pub fn with_spacing(mut self, spacing: VoxelSpacing) -> Result<Self> {
        spacing.validate()?;
        self.spacing = spacing;
        Ok(self)
    }

    pub fn bscan(&self, b: usize) -> Plane<u8> {
        let n = self.dims.na * self.dims.nd;
        let start = b * n;
        Plane::new(
            self.dims.na,
            self.dims.nd,
            self.data[start..start + n].to_vec(),
        )
        .expect("B-scan slice matches dims")
    }

    /// Sub-volume made of the B-scans in `range`.
    pub fn bscan_range(&self, range: std::ops::Range<usize>) -> Result<LabelVolume> {
        if range.start >= range.end || range.end > self.dims.nb {
            return Err(Error::InvalidVolume(format!(
                "B-scan range {range:?} outside 0..{}",
                self.dims.nb
            )));
        }
        let n = self.dims.na * self.dims.nd;
        let dims = Dims::new(range.len(), self.dims.na, self.dims.nd)?;
        LabelVolume::new(
            dims,
            self.spacing,
            self.data[range.start * n..range.end * n].to_vec(),
        )
    }

    /// Resample every B-scan to 256 x 256 (nearest neighbour), rescaling
    /// lateral and axial spacing to keep physical extent.
    pub fn resize_bscans(&self) -> Result<LabelVolume> {
        let (na, nd) = BSCAN_TARGET;
        let mut data = Vec::with_capacity(self.dims.nb * na * nd);
        for b in 0..self.dims.nb {
            data.extend_from_slice(resize_nearest(&self.bscan(b), BSCAN_TARGET)?.data());
        }
        let dims = Dims::new(self.dims.nb, na, nd)?;
        LabelVolume::new(
            dims,
            resample::rescaled_spacing(self.spacing, self.dims),
            data,
        )
    }
}

/// A volume of either kind, as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Volume {
    Intensity(IntensityVolume),
    Label(LabelVolume),
}

impl Volume {
    pub fn kind(&self) -> VolumeKind {
        match self {
            Volume::Intensity(_) => VolumeKind::Intensity,
            Volume::Label(_) => VolumeKind::Label,
        }
    }

    pub fn into_labels(self) -> Result<LabelVolume> {
        match self {
            Volume::Label(v) => Ok(v),
            Volume::Intensity(_) => Err(Error::InvalidVolume(
                "expected a label volume, found intensity".into(),
            )),
        }
    }

    pub fn into_intensity(self) -> Result<IntensityVolume> {
        match self {
            Volume::Intensity(v) => Ok(v),
            Volume::Label(_) => Err(Error::InvalidVolume(
                "expected an intensity volume, found labels".into(),
            )),
        }
    }
}

impl From<IntensityVolume> for Volume {
    fn from(v: IntensityVolume) -> Self {
        Volume::Intensity(v)
    }
}

impl From<LabelVolume> for Volume {
    fn from(v: LabelVolume) -> Self {
        Volume::Label(v)
    }
}

/// Divide every sample by the volume maximum. The result lies in `[0, 1]`
/// with maximum exactly 1.
pub fn normalize_intensity(vol: &IntensityVolume) -> Result<IntensityVolume> {
    let max = vol.max_value();
    if max <= 0.0 {
        return Err(Error::NoSignal);
    }
    let data = vol.data.iter().map(|&v| v / max).collect();
    Ok(IntensityVolume {
        dims: vol.dims,
        spacing: vol.spacing,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spacing() -> VoxelSpacing {
        VoxelSpacing::new(0.03, 0.0117, 0.0039).unwrap()
    }

    #[test]
    fn spacing_rejects_nonpositive() {
        assert!(VoxelSpacing::new(0.0, 0.01, 0.0039).is_err());
        assert!(VoxelSpacing::new(0.03, f64::NAN, 0.0039).is_err());
        assert!(VoxelSpacing::new(0.03, 0.01, -1.0).is_err());
    }

    #[test]
    fn spacing_plausibility() {
        assert!(spacing().is_plausible());
        assert!(VoxelSpacing::new(0.246, 0.0131, 0.0039)
            .unwrap()
            .is_plausible());
        assert!(!VoxelSpacing::new(0.01, 0.0117, 0.0039)
            .unwrap()
            .is_plausible());
        assert!(!VoxelSpacing::new(0.03, 0.0117, 0.005)
            .unwrap()
            .is_plausible());
    }

    #[test]
    fn dims_minimums() {
        assert!(Dims::new(1, 2, 2).is_ok());
        assert!(Dims::new(0, 2, 2).is_err());
        assert!(Dims::new(1, 1, 2).is_err());
        assert!(Dims::new(1, 2, 1).is_err());
    }

    #[test]
    fn depth_is_fastest() {
        let d = Dims::new(2, 3, 4).unwrap();
        assert_eq!(d.index(0, 0, 1), 1);
        assert_eq!(d.index(0, 1, 0), 4);
        assert_eq!(d.index(1, 0, 0), 12);
        assert_eq!(d.index(1, 2, 3), 23);
    }

    #[test]
    fn label_codes_validated() {
        let dims = Dims::new(1, 2, 2).unwrap();
        let err = LabelVolume::new(dims, spacing(), vec![0, 1, 9, 2]).unwrap_err();
        assert!(matches!(err, Error::InvalidLabel { code: 9, index: 2 }));
        let mut v = LabelVolume::zeros(dims, spacing()).unwrap();
        assert!(v.set(0, 1, 1, 9).is_err());
        v.set(0, 1, 1, 8).unwrap();
        assert_eq!(v.get(0, 1, 1), 8);
    }

    #[test]
    fn intensity_rejects_negative_and_nan() {
        let dims = Dims::new(1, 2, 2).unwrap();
        assert!(IntensityVolume::new(dims, spacing(), vec![0.0, 1.0, -0.5, 0.0]).is_err());
        assert!(IntensityVolume::new(dims, spacing(), vec![0.0, f32::NAN, 0.5, 0.0]).is_err());
        assert!(IntensityVolume::new(dims, spacing(), vec![0.0; 3]).is_err());
    }

    #[test]
    fn tissue_numbering_is_fixed() {
        assert_eq!(TissueClass::Rpe.code(), 4);
        assert_eq!(TissueClass::Drusen.code(), 8);
        assert_eq!(TissueClass::from_code(3), Some(TissueClass::OtherRetina));
        assert_eq!(TissueClass::from_code(9), None);
    }

    #[test]
    fn normalize_examples() {
        let dims = Dims::new(1, 3, 2).unwrap();
        let v = IntensityVolume::new(dims, spacing(), vec![0.0, 2.0, 4.0, 4.0, 2.0, 0.0]).unwrap();
        let n = normalize_intensity(&v).unwrap();
        assert_eq!(n.data(), &[0.0, 0.5, 1.0, 1.0, 0.5, 0.0]);
        assert_eq!(normalize_intensity(&n).unwrap(), n);
        let zero = IntensityVolume::new(dims, spacing(), vec![0.0; 6]).unwrap();
        assert!(matches!(normalize_intensity(&zero), Err(Error::NoSignal)));
    }

    #[test]
    fn bscan_range_partitions() {
        let dims = Dims::new(3, 2, 2).unwrap();
        let v =
            LabelVolume::new(dims, spacing(), (0..12).map(|i| (i % 9) as u8).collect()).unwrap();
        let head = v.bscan_range(0..1).unwrap();
        let tail = v.bscan_range(1..3).unwrap();
        assert_eq!([head.data(), tail.data()].concat(), v.data());
        assert!(v.bscan_range(2..4).is_err());
    }
}

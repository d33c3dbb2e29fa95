//! `<stem>.meta` + `<stem>.raw` volume files.
//!
//! The metadata file is UTF-8 `key=value` lines:
//!
//! ```text
//! format_version=1
//! kind=label
//! dims=25,384,496
//! spacing_mm=0.246,0.0131,0.0039
//! dtype=u8
//! byte_order=little
//! checksum=<sha256 of the raw file, lowercase hex>
//! ```
//!
//! The raw file holds voxels in `(b, a, d)` order, depth fastest: `u8` for
//! labels, little-endian `f32` for intensity.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{Dims, IntensityVolume, LabelVolume, Volume, VoxelSpacing};
use crate::error::{Error, Result};

pub const META_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeKind {
    Intensity,
    Label,
}

impl VolumeKind {
    fn as_str(self) -> &'static str {
        match self {
            VolumeKind::Intensity => "intensity",
            VolumeKind::Label => "label",
        }
    }

    fn dtype(self) -> &'static str {
        match self {
            VolumeKind::Intensity => "f32",
            VolumeKind::Label => "u8",
        }
    }

    fn bytes_per_voxel(self) -> usize {
        match self {
            VolumeKind::Intensity => 4,
            VolumeKind::Label => 1,
        }
    }
}

/// `foo`, `foo.meta` and `foo.raw` all name the stem `foo`.
fn stem_of(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("meta") | Some("raw") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub(crate) fn meta_path(path: &Path) -> PathBuf {
    with_suffix(&stem_of(path), ".meta")
}

pub(crate) fn raw_path(path: &Path) -> PathBuf {
    with_suffix(&stem_of(path), ".raw")
}

fn checksum_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Shortest round-tripping decimal, always with a decimal point.
pub(crate) fn fmt_real(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Write `vol` as `<stem>.meta` + `<stem>.raw`.
pub fn save_volume(vol: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (kind, dims, spacing, raw) = match vol {
        Volume::Intensity(v) => {
            let mut raw = Vec::with_capacity(v.data().len() * 4);
            for x in v.data() {
                raw.extend_from_slice(&x.to_le_bytes());
            }
            (VolumeKind::Intensity, v.dims(), v.spacing(), raw)
        }
        Volume::Label(v) => (VolumeKind::Label, v.dims(), v.spacing(), v.data().to_vec()),
    };

    let meta = format!(
        "format_version={META_FORMAT_VERSION}\n\
         kind={}\n\
         dims={},{},{}\n\
         spacing_mm={},{},{}\n\
         dtype={}\n\
         byte_order=little\n\
         checksum={}\n",
        kind.as_str(),
        dims.nb,
        dims.na,
        dims.nd,
        fmt_real(spacing.dz_mm),
        fmt_real(spacing.dx_mm),
        fmt_real(spacing.dy_mm),
        kind.dtype(),
        checksum_hex(&raw),
    );

    let raw_file = raw_path(path);
    fs::write(&raw_file, &raw).map_err(|e| Error::io(&raw_file, e))?;
    let meta_file = meta_path(path);
    fs::write(&meta_file, meta).map_err(|e| Error::io(&meta_file, e))?;
    Ok(())
}

struct Meta {
    kind: VolumeKind,
    dims: Dims,
    spacing: VoxelSpacing,
    checksum: String,
}

fn parse_meta(text: &str, path: &Path) -> Result<Meta> {
    let bad = |msg: String| Error::Metadata {
        path: path.to_path_buf(),
        msg,
    };

    let mut fields = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key=value", lineno + 1)))?;
        if fields.insert(k.trim(), v.trim()).is_some() {
            return Err(bad(format!("duplicate key {}", k.trim())));
        }
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| bad(format!("missing key {k}")))
    };

    let version = get("format_version")?;
    if version != META_FORMAT_VERSION.to_string() {
        return Err(bad(format!("unsupported format_version {version}")));
    }
    let kind = match get("kind")? {
        "intensity" => VolumeKind::Intensity,
        "label" => VolumeKind::Label,
        other => return Err(bad(format!("unknown kind {other}"))),
    };
    let dtype = get("dtype")?;
    if dtype != kind.dtype() {
        return Err(bad(format!(
            "dtype {dtype} does not match kind {}",
            kind.as_str()
        )));
    }
    let order = get("byte_order")?;
    if order != "little" {
        return Err(bad(format!("unsupported byte_order {order}")));
    }

    let dims: Vec<usize> = get("dims")?
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| bad(format!("dims: {e}")))?;
    let [nb, na, nd] = dims[..] else {
        return Err(bad(format!("dims needs 3 values, got {}", dims.len())));
    };
    let spacing: Vec<f64> = get("spacing_mm")?
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| bad(format!("spacing_mm: {e}")))?;
    let [dz, dx, dy] = spacing[..] else {
        return Err(bad(format!(
            "spacing_mm needs 3 values, got {}",
            spacing.len()
        )));
    };

    let checksum = get("checksum")?.to_ascii_lowercase();
    if checksum.len() != 64 || !checksum.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(bad("checksum must be 64 hex digits".into()));
    }

    Ok(Meta {
        kind,
        dims: Dims::new(nb, na, nd).map_err(|e| bad(e.to_string()))?,
        spacing: VoxelSpacing::new(dz, dx, dy).map_err(|e| bad(e.to_string()))?,
        checksum,
    })
}

/// Read and validate a volume. The kind comes from the metadata.
pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let meta_file = meta_path(path);
    let text = fs::read_to_string(&meta_file).map_err(|e| Error::io(&meta_file, e))?;
    let meta = parse_meta(&text, &meta_file)?;

    let raw_file = raw_path(path);
    let raw = fs::read(&raw_file).map_err(|e| Error::io(&raw_file, e))?;
    let expected = meta.dims.len() * meta.kind.bytes_per_voxel();
    if raw.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            found: raw.len(),
        });
    }
    let found = checksum_hex(&raw);
    if found != meta.checksum {
        return Err(Error::ChecksumMismatch {
            expected: meta.checksum,
            found,
        });
    }

    meta.spacing.warn_if_implausible();
    Ok(match meta.kind {
        VolumeKind::Label => LabelVolume::new(meta.dims, meta.spacing, raw)?.into(),
        VolumeKind::Intensity => {
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            IntensityVolume::new(meta.dims, meta.spacing, data)?.into()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spacing() -> VoxelSpacing {
        VoxelSpacing::new(0.03, 0.0117, 0.0039).unwrap()
    }

    #[test]
    fn zero_label_volume_from_hand_written_files() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("zeros");
        let raw = vec![0u8; 24];
        fs::write(raw_path(&stem), &raw).unwrap();
        fs::write(
            meta_path(&stem),
            format!(
                "format_version=1\nkind=label\ndims=2,3,4\nspacing_mm=0.03,0.0117,0.0039\n\
                 dtype=u8\nbyte_order=little\nchecksum={}\n",
                checksum_hex(&raw)
            ),
        )
        .unwrap();
        let v = load_volume(&stem).unwrap().into_labels().unwrap();
        assert_eq!(v.dims(), Dims::new(2, 3, 4).unwrap());
        assert!(v.data().iter().all(|&c| c == 0));
    }

    #[test]
    fn short_raw_is_length_error() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("short");
        let raw = vec![0u8; 23];
        fs::write(raw_path(&stem), &raw).unwrap();
        fs::write(
            meta_path(&stem),
            format!(
                "format_version=1\nkind=label\ndims=2,3,4\nspacing_mm=0.03,0.0117,0.0039\n\
                 dtype=u8\nbyte_order=little\nchecksum={}\n",
                checksum_hex(&raw)
            ),
        )
        .unwrap();
        assert!(matches!(
            load_volume(&stem),
            Err(Error::LengthMismatch {
                expected: 24,
                found: 23
            })
        ));
    }

    #[test]
    fn coarse_clinical_geometry_loads() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("coarse");
        let dims = Dims::new(25, 384, 496).unwrap();
        let s = VoxelSpacing::new(0.246, 0.0131, 0.0039).unwrap();
        let v = LabelVolume::zeros(dims, s).unwrap();
        save_volume(&v.clone().into(), &stem).unwrap();
        let back = load_volume(&stem).unwrap().into_labels().unwrap();
        assert_eq!(back.dims(), dims);
        assert_eq!(back.spacing(), s);
        assert!(back.spacing().is_plausible());
    }

    #[test]
    fn intensity_bits_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("int.meta");
        let dims = Dims::new(1, 2, 2).unwrap();
        let v = IntensityVolume::new(dims, spacing(), vec![0.0039, 0.0, 1.0, f32::MIN_POSITIVE])
            .unwrap();
        save_volume(&v.clone().into(), &stem).unwrap();
        let back = load_volume(&stem).unwrap().into_intensity().unwrap();
        let bits = |x: &IntensityVolume| x.data().iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&v));
        assert_eq!(back.spacing(), v.spacing());
    }

    #[test]
    fn corrupted_byte_is_checksum_error() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("c");
        let dims = Dims::new(2, 3, 4).unwrap();
        let v =
            LabelVolume::new(dims, spacing(), (0..24).map(|i| (i % 9) as u8).collect()).unwrap();
        save_volume(&v.into(), &stem).unwrap();
        let mut raw = fs::read(raw_path(&stem)).unwrap();
        raw[5] ^= 0x01;
        fs::write(raw_path(&stem), &raw).unwrap();
        assert!(matches!(
            load_volume(&stem),
            Err(Error::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn garbled_meta_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("g");
        fs::write(raw_path(&stem), [0u8; 24]).unwrap();
        for meta in [
            "not a meta file",
            "format_version=2\nkind=label\n",
            "format_version=1\nkind=label\ndims=2,3\nspacing_mm=1,1,1\ndtype=u8\nbyte_order=little\nchecksum=00\n",
            "format_version=1\nkind=label\ndims=2,3,4\nspacing_mm=1,1,1\ndtype=f32\nbyte_order=little\nchecksum=00\n",
        ] {
            fs::write(meta_path(&stem), meta).unwrap();
            assert!(matches!(load_volume(&stem), Err(Error::Metadata { .. })), "{meta}");
        }
        fs::remove_file(meta_path(&stem)).unwrap();
        assert!(matches!(load_volume(&stem), Err(Error::Io { .. })));
    }

    #[test]
    fn out_of_range_label_in_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("bad");
        let mut raw = vec![0u8; 24];
        raw[3] = 9;
        fs::write(raw_path(&stem), &raw).unwrap();
        fs::write(
            meta_path(&stem),
            format!(
                "format_version=1\nkind=label\ndims=2,3,4\nspacing_mm=0.03,0.0117,0.0039\n\
                 dtype=u8\nbyte_order=little\nchecksum={}\n",
                checksum_hex(&raw)
            ),
        )
        .unwrap();
        assert!(matches!(
            load_volume(&stem),
            Err(Error::InvalidLabel { code: 9, index: 3 })
        ));
    }

    #[test]
    fn nan_intensity_in_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("nan");
        let mut raw = Vec::new();
        for v in [0.5f32, f32::NAN, 0.1, 0.2] {
            raw.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(raw_path(&stem), &raw).unwrap();
        fs::write(
            meta_path(&stem),
            format!(
                "format_version=1\nkind=intensity\ndims=1,2,2\nspacing_mm=0.03,0.0117,0.0039\n\
                 dtype=f32\nbyte_order=little\nchecksum={}\n",
                checksum_hex(&raw)
            ),
        )
        .unwrap();
        assert!(matches!(
            load_volume(&stem),
            Err(Error::InvalidIntensity { index: 1, .. })
        ));
    }

    #[test]
    fn reals_always_carry_a_point() {
        assert_eq!(fmt_real(1.0), "1.0");
        assert_eq!(fmt_real(0.0039), "0.0039");
        assert_eq!(fmt_real(0.246), "0.246");
    }
}

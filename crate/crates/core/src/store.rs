//! On-disk formats: `F32G` binary grids, JSON sidecars and manifests, PGM
//! renders.
//!
//! An `F32G` file is, all little-endian:
//!
//! ```text
//! offset 0   b"F32G"
//! offset 4   u32 version (= 1)
//! offset 8   u32 ndim
//! offset 12  ndim × u64 dims
//! then       Π dims × f32, row-major (last axis fastest)
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::autofocus::SweepSpec;
use crate::error::{Error, Result};
use crate::fdtd::{AScan, BScan};
use crate::migrate::MigratedImage;
use crate::preprocess::NormStats;
use crate::scene::{GridSpec, Scene};

pub const GRID_MAGIC: [u8; 4] = *b"F32G";
pub const GRID_VERSION: u32 = 1;
pub const GRID_EXTENSION: &str = "f32g";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Grid {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        if expected != Some(data.len()) {
            return Err(Error::Shape(format!(
                "dims {dims:?} do not match {} values",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    /// Narrows to 32-bit floats.
    pub fn from_array2(a: &Array2<f64>) -> Self {
        let (r, c) = a.dim();
        Self {
            dims: vec![r, c],
            data: a.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn from_mask(m: &Array2<bool>) -> Self {
        let (r, c) = m.dim();
        Self {
            dims: vec![r, c],
            data: m.iter().map(|&v| v as u8 as f32).collect(),
        }
    }

    pub fn to_array2(&self) -> Result<Array2<f64>> {
        match self.dims[..] {
            [r, c] => Ok(Array2::from_shape_vec((r, c), self.data.iter().map(|&v| v as f64).collect())
                .expect("length checked on construction")),
            _ => Err(Error::Shape(format!("expected a 2-D grid, got dims {:?}", self.dims))),
        }
    }

    pub fn header_len(&self) -> usize {
        12 + 8 * self.dims.len()
    }
}

pub fn encode_grid(grid: &Grid) -> Vec<u8> {
    let mut out = Vec::with_capacity(grid.header_len() + 4 * grid.data.len());
    out.extend_from_slice(&GRID_MAGIC);
    out.extend_from_slice(&GRID_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dims.len() as u32).to_le_bytes());
    for &d in &grid.dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in &grid.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn format_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                format_error(
                    self.pos,
                    format!("truncated {what}: need {n} bytes, {} left", self.bytes.len() - self.pos),
                )
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_grid(bytes: &[u8]) -> Result<Grid> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != GRID_MAGIC {
        return Err(format_error(0, "bad magic, expected \"F32G\""));
    }
    let version = r.u32("version")?;
    if version != GRID_VERSION {
        return Err(format_error(4, format!("unsupported version {version}")));
    }
    let ndim = r.u32("ndim")? as usize;
    let mut dims = Vec::new();
    let mut count: usize = 1;
    for k in 0..ndim {
        let at = r.pos;
        let d = r.u64("dimension")?;
        let d = usize::try_from(d).map_err(|_| format_error(at, format!("dimension {k} too large")))?;
        count = count
            .checked_mul(d)
            .ok_or_else(|| format_error(at, "element count overflows"))?;
        dims.push(d);
    }
    let payload_at = r.pos;
    let expected = count
        .checked_mul(4)
        .ok_or_else(|| format_error(payload_at, "payload size overflows"))?;
    let left = bytes.len() - payload_at;
    if left != expected {
        let what = if left < expected { "truncated" } else { "trailing bytes after" };
        return Err(format_error(
            payload_at + left.min(expected),
            format!("{what} payload: expected {expected} bytes, found {left}"),
        ));
    }
    let data = bytes[payload_at..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Grid { dims, data })
}

pub fn write_grid(path: impl AsRef<Path>, grid: &Grid) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_grid(grid)).map_err(|e| Error::io(path, e))
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grid(&bytes).map_err(|e| match e {
        Error::Format { offset, message } => Error::Format {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Path of the JSON sidecar next to a grid file.
pub fn sidecar_path(grid_path: &Path) -> PathBuf {
    grid_path.with_extension("json")
}

/// Sidecar of a single trace stored as a `1 × n` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AScanMeta {
    pub dt: f64,
    pub t0_offset: f64,
}

pub fn write_ascan(path: impl AsRef<Path>, a: &AScan) -> Result<()> {
    let path = path.as_ref();
    let grid = Grid::new(vec![1, a.len()], a.samples.iter().map(|&v| v as f32).collect())?;
    write_grid(path, &grid)?;
    write_json(
        sidecar_path(path),
        &AScanMeta {
            dt: a.dt,
            t0_offset: a.t0_offset,
        },
    )
}

pub fn read_ascan(path: impl AsRef<Path>) -> Result<AScan> {
    let path = path.as_ref();
    let grid = read_grid(path)?;
    if grid.dims.len() != 2 || grid.dims[0] != 1 {
        return Err(Error::Shape(format!("expected a 1 x n trace grid, got {:?}", grid.dims)));
    }
    let meta: AScanMeta = read_json(sidecar_path(path))?;
    if !(meta.dt > 0.0) {
        return Err(Error::Manifest(format!("{}: dt must be positive", path.display())));
    }
    Ok(AScan {
        samples: grid.data.iter().map(|&v| v as f64).collect(),
        dt: meta.dt,
        t0_offset: meta.t0_offset,
    })
}

/// Everything in a [`BScan`] except the traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BScanMeta {
    pub n_traces: usize,
    pub n_samples: usize,
    pub dt: f64,
    pub t0_offset: f64,
    pub angles: Vec<f64>,
    pub trace_positions: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
}

impl BScanMeta {
    pub fn of(b: &BScan, profile: Option<&str>) -> Self {
        Self {
            n_traces: b.n_traces(),
            n_samples: b.n_samples(),
            dt: b.dt,
            t0_offset: b.t0_offset,
            angles: b.angles.clone(),
            trace_positions: b.trace_positions.clone(),
            profile: profile.map(str::to_owned),
        }
    }
}

/// Writes the traces (narrowed to f32) and a JSON sidecar.
pub fn write_bscan(path: impl AsRef<Path>, b: &BScan, profile: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    write_grid(path, &Grid::from_array2(&b.traces))?;
    write_json(sidecar_path(path), &BScanMeta::of(b, profile))
}

pub fn bscan_from_parts(grid: &Grid, meta: &BScanMeta) -> Result<BScan> {
    if grid.dims != [meta.n_traces, meta.n_samples] {
        return Err(Error::Shape(format!(
            "grid dims {:?} disagree with metadata {}x{}",
            grid.dims, meta.n_traces, meta.n_samples
        )));
    }
    let b = BScan {
        traces: grid.to_array2()?,
        dt: meta.dt,
        angles: meta.angles.clone(),
        trace_positions: meta.trace_positions.clone(),
        t0_offset: meta.t0_offset,
    };
    b.validate()?;
    Ok(b)
}

pub fn read_bscan(path: impl AsRef<Path>) -> Result<BScan> {
    let path = path.as_ref();
    let grid = read_grid(path)?;
    let meta: BScanMeta = read_json(sidecar_path(path))?;
    bscan_from_parts(&grid, &meta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub spec: GridSpec,
    pub eps_medium_used: f64,
}

pub fn write_image(path: impl AsRef<Path>, img: &MigratedImage) -> Result<()> {
    let path = path.as_ref();
    write_grid(path, &Grid::from_array2(&img.intensity))?;
    write_json(
        sidecar_path(path),
        &ImageMeta {
            spec: img.spec,
            eps_medium_used: img.eps_medium_used,
        },
    )
}

pub fn read_image(path: impl AsRef<Path>) -> Result<MigratedImage> {
    let path = path.as_ref();
    let grid = read_grid(path)?;
    let meta: ImageMeta = read_json(sidecar_path(path))?;
    if grid.dims != [meta.spec.nx, meta.spec.ny] {
        return Err(Error::Shape(format!(
            "image grid {:?} disagrees with spec {}x{}",
            grid.dims, meta.spec.nx, meta.spec.ny
        )));
    }
    Ok(MigratedImage {
        spec: meta.spec,
        intensity: grid.to_array2()?,
        eps_medium_used: meta.eps_medium_used,
    })
}

/// Binary PGM bytes; rows of `img` become image rows. Values are min-max
/// scaled to 0–255 and a constant image renders as mid-grey.
pub fn encode_pgm(img: &Array2<f64>) -> Result<Vec<u8>> {
    if img.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("cannot render non-finite pixels".into()));
    }
    let (h, w) = img.dim();
    let lo = img.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = img.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(img.iter().map(|&v| {
        if hi > lo {
            ((v - lo) / (hi - lo) * 255.0).round() as u8
        } else {
            128
        }
    }));
    Ok(out)
}

pub fn export_pgm(img: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)?).map_err(|e| Error::io(path, e))
}

/// Reorders an `[ix, iy]` spatial grid so that rows run top (max y) to bottom.
pub fn spatial_to_raster(grid: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = grid.dim();
    Array2::from_shape_fn((ny, nx), |(r, c)| grid[[c, ny - 1 - r]])
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Declared `[rows, cols]` of every per-sample grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShapes {
    pub reference_ascan: [usize; 2],
    pub raw_bscan: [usize; 2],
    pub network_bscan: [usize; 2],
    pub migration_bscan: [usize; 2],
    pub migrated_image: [usize; 2],
    pub defect_mask: [usize; 2],
}

/// Paths relative to the manifest directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFiles {
    pub reference_ascan: PathBuf,
    pub raw_bscan: PathBuf,
    pub network_bscan: PathBuf,
    pub migration_bscan: PathBuf,
    pub migrated_image: PathBuf,
    pub defect_mask: PathBuf,
}

impl SampleFiles {
    fn entries(&self) -> [(&'static str, &Path); 6] {
        [
            ("reference_ascan", &self.reference_ascan),
            ("raw_bscan", &self.raw_bscan),
            ("network_bscan", &self.network_bscan),
            ("migration_bscan", &self.migration_bscan),
            ("migrated_image", &self.migrated_image),
            ("defect_mask", &self.defect_mask),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub eps_defect: f64,
    pub eps_medium_ssim: f64,
    pub eps_medium_entropy: f64,
    pub eps_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub id: String,
    pub seed: u64,
    pub scene: Scene,
    pub files: SampleFiles,
    pub labels: Labels,
    pub preprocess_profile: String,
    pub ssim_curve: Vec<(f64, f64)>,
    pub entropy_curve: Vec<(f64, f64)>,
}

/// Dataset-wide min/max used to scale network inputs and labels to [0, 1].
/// A field is `None` when its values are all equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub network_bscan: Option<NormStats>,
    pub migrated_image: Option<NormStats>,
    /// From the sampled defect permittivity range.
    pub eps_defect: Option<NormStats>,
    /// From the autofocus sweep range.
    pub eps_medium: Option<NormStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub shapes: GridShapes,
    pub sweep: SweepSpec,
    pub stats: DatasetStats,
    pub samples: Vec<SampleEntry>,
}

impl DatasetManifest {
    /// Structural checks that need no file access.
    pub fn check_structure(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        let mut seen = HashSet::new();
        for s in &self.samples {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate sample id {:?}", s.id)));
            }
            for (kind, p) in s.files.entries() {
                if p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                    return Err(Error::Manifest(format!(
                        "sample {}: {kind} path {} must stay inside the dataset directory",
                        s.id,
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    fn shape_of(&self, kind: &str) -> [usize; 2] {
        match kind {
            "reference_ascan" => self.shapes.reference_ascan,
            "raw_bscan" => self.shapes.raw_bscan,
            "network_bscan" => self.shapes.network_bscan,
            "migration_bscan" => self.shapes.migration_bscan,
            "migrated_image" => self.shapes.migrated_image,
            _ => self.shapes.defect_mask,
        }
    }

    /// Full validation: structure, then every referenced grid exists, parses
    /// and has the declared shape.
    pub fn validate(&self, root: &Path) -> Result<()> {
        self.check_structure()?;
        for s in &self.samples {
            for (kind, rel) in s.files.entries() {
                let grid = read_grid(root.join(rel))?;
                let want = self.shape_of(kind);
                if grid.dims != want {
                    return Err(Error::Manifest(format!(
                        "sample {}: {kind} has dims {:?}, manifest declares {want:?}",
                        s.id, grid.dims
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, id: &str) -> Option<&SampleEntry> {
        self.samples.iter().find(|s| s.id == id)
    }
}

pub fn parse_manifest(text: &str) -> Result<DatasetManifest> {
    let m: DatasetManifest =
        serde_json::from_str(text).map_err(|e| Error::Manifest(format!("invalid manifest JSON: {e}")))?;
    m.check_structure()?;
    Ok(m)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m = parse_manifest(&text)?;
    m.validate(path.parent().unwrap_or(Path::new(".")))?;
    Ok(m)
}

pub const PREDICTIONS_SCHEMA_VERSION: u32 = 1;

/// Model outputs for one sample; absent fields are not scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePrediction {
    #[serde(default)]
    pub eps_medium: Option<f64>,
    #[serde(default)]
    pub eps_defect: Option<f64>,
    /// Predicted defect map grid, relative to the predictions file.
    #[serde(default)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub schema_version: u32,
    pub predictions: BTreeMap<String, SamplePrediction>,
}

pub fn parse_predictions(text: &str) -> Result<Predictions> {
    let p: Predictions =
        serde_json::from_str(text).map_err(|e| Error::Manifest(format!("invalid predictions JSON: {e}")))?;
    if p.schema_version != PREDICTIONS_SCHEMA_VERSION {
        return Err(Error::Manifest(format!(
            "unsupported predictions schema version {}",
            p.schema_version
        )));
    }
    Ok(p)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Predictions> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_grid_round_trip() {
        let g = Grid::new(vec![2, 3], vec![1.0, -0.0, f32::MIN_POSITIVE, 3.5e-42, f32::INFINITY, 7.25]).unwrap();
        let back = decode_grid(&encode_grid(&g)).unwrap();
        assert_eq!(back.dims, g.dims);
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.data), bits(&g.data));
    }

    #[test]
    fn header_layout() {
        let g = Grid::new(vec![60, 2000], vec![0.0; 120_000]).unwrap();
        let bytes = encode_grid(&g);
        assert_eq!(g.header_len(), 28);
        assert_eq!(bytes.len(), 28 + 480_000);
        assert_eq!(&bytes[..4], b"F32G");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &60u64.to_le_bytes());
        assert_eq!(&bytes[20..28], &2000u64.to_le_bytes());
    }

    #[test]
    fn malformed_grids_report_offsets() {
        let g = Grid::new(vec![2, 3], vec![0.5; 6]).unwrap();
        let bytes = encode_grid(&g);
        let offset = |b: &[u8]| match decode_grid(b) {
            Err(Error::Format { offset, .. }) => offset,
            other => panic!("expected format error, got {other:?}"),
        };
        assert_eq!(offset(&bytes[..bytes.len() - 1]), 28 + 23);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(offset(&bad), 0);
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert_eq!(offset(&bad), 4);
        assert_eq!(offset(&bytes[..10]), 8);
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(offset(&long), 28 + 24);
        let mut huge = bytes[..12].to_vec();
        huge.extend_from_slice(&u64::MAX.to_le_bytes());
        huge.extend_from_slice(&u64::MAX.to_le_bytes());
        assert_eq!(offset(&huge), 20);
    }

    #[test]
    fn pgm_encoding() {
        let constant = Array2::from_elem((128, 128), 3.0);
        let bytes = encode_pgm(&constant).unwrap();
        let header = b"P5\n128 128\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 16384);
        assert!(bytes[header.len()..].iter().all(|&b| b == 128));

        let ramp = Array2::from_shape_fn((2, 3), |(r, c)| (r * 3 + c) as f64 - 1.0);
        let bytes = encode_pgm(&ramp).unwrap();
        let body = &bytes[b"P5\n3 2\n255\n".len()..];
        assert_eq!(body[0], 0);
        assert_eq!(body[5], 255);
        assert!(encode_pgm(&Array2::from_elem((1, 1), f64::NAN)).is_err());
    }

    #[test]
    fn raster_orientation() {
        let g = Array2::from_shape_fn((3, 2), |(ix, iy)| (10 * ix + iy) as f64);
        let r = spatial_to_raster(&g);
        assert_eq!(r.dim(), (2, 3));
        // top-left is min x, max y
        assert_eq!(r[[0, 0]], 1.0);
        assert_eq!(r[[1, 2]], 20.0);
    }

    #[test]
    fn trace_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = AScan::new(vec![0.25, -1.5, 3.0], 4e-11);
        a.t0_offset = 1e-10;
        let path = dir.path().join("ref.f32g");
        write_ascan(&path, &a).unwrap();
        assert_eq!(read_ascan(&path).unwrap(), a);

        let b = BScan {
            traces: Array2::from_shape_fn((8, 5), |(i, j)| (i * 5 + j) as f64 * 0.5),
            dt: 4e-11,
            angles: (0..8).map(|i| i as f64 * 0.7).collect(),
            trace_positions: (0..8).map(|i| [i as f64, -(i as f64)]).collect(),
            t0_offset: 2e-10,
        };
        let path = dir.path().join("b.f32g");
        write_bscan(&path, &b, Some("migration")).unwrap();
        assert_eq!(read_bscan(&path).unwrap(), b);

        // A grid without its sidecar is a format error naming the sidecar.
        write_grid(dir.path().join("lonely.f32g"), &Grid::from_array2(&b.traces)).unwrap();
        let err = read_bscan(dir.path().join("lonely.f32g")).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Format);
        assert!(err.to_string().contains("lonely.json"));
        assert!(read_ascan(&path).is_err());
    }

    proptest! {
        #[test]
        fn decoder_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let _ = decode_grid(&bytes);
        }

        #[test]
        fn decoder_never_panics_on_valid_headers(
            dims in proptest::collection::vec(0u64..6, 0..4),
            tail in proptest::collection::vec(any::<u8>(), 0..200),
        ) {
            let mut bytes = b"F32G".to_vec();
            bytes.extend_from_slice(&1u32.to_le_bytes());
            bytes.extend_from_slice(&(dims.len() as u32).to_le_bytes());
            for d in &dims {
                bytes.extend_from_slice(&d.to_le_bytes());
            }
            bytes.extend_from_slice(&tail);
            if let Ok(g) = decode_grid(&bytes) {
                prop_assert_eq!(encode_grid(&g), bytes);
            }
        }

        #[test]
        fn grids_round_trip_bit_exactly(
            rows in 0usize..6, cols in 0usize..6, seed in any::<u32>(),
        ) {
            let data: Vec<f32> = (0..rows * cols)
                .map(|k| f32::from_bits(seed.wrapping_mul(2_654_435_761).wrapping_add(k as u32 * 40_503)))
                .collect();
            let g = Grid::new(vec![rows, cols], data).unwrap();
            let back = decode_grid(&encode_grid(&g)).unwrap();
            prop_assert_eq!(encode_grid(&back), encode_grid(&g));
        }

        #[test]
        fn manifest_parser_never_panics(text in "\\PC{0,200}") {
            let _ = parse_manifest(&text);
            let _ = parse_predictions(&text);
        }
    }
}

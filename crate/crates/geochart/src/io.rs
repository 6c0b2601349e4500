//! On-disk formats.
//!
//! Every artifact is a directory holding a JSON manifest next to flat
//! little-endian binary payloads. Manifests carry a schema version and the
//! SHA-256 of each payload; loading checks the version first, then payload
//! lengths, then checksums, so the three failure modes stay distinguishable.
//!
//! | payload          | encoding                                          |
//! |------------------|---------------------------------------------------|
//! | `csi.bin`        | f32 pairs (re, im), sample-major, row-major       |
//! | `timestamps.bin` | f64 per sample                                    |
//! | `positions.bin`  | f64 triples (x, y, z) per sample                  |
//! | `los.bin`        | u8 per (sample, AP), 1 = line of sight            |
//! | `split.bin`      | u8 per sample, 0 = train, 1 = test                |
//! | `features.bin`   | f64, `N x D'` row-major                           |
//! | `powers.bin`     | f64, `N x A` row-major, dB                        |
//! | `model.bin`      | f64 parameters in layer order                     |

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use geochart_core::features::{FeatureParams, FeatureSet};
use geochart_core::net::ChartModel;
use geochart_core::sim::{CsiDataset, Domain, Split};
use geochart_core::train::{AffineMap, TrainingLog, Variant};
use geochart_core::Point2;
use num_complex::Complex32;
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const DATASET_MANIFEST: &str = "dataset.json";
pub const FEATURES_MANIFEST: &str = "features.json";
pub const CHECKPOINT_MANIFEST: &str = "model.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Synthetic,
    Ingested,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payload {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub samples: usize,
    pub ap_count: usize,
    pub antennas_per_ap: usize,
    /// Occupied subcarriers `W` of the source CSI.
    pub subcarriers: usize,
    /// Stored columns: `W` in the frequency domain, `C` in the delay domain.
    pub cols: usize,
    pub domain: Domain,
    /// Seed of the scenario that produced the data, if synthetic.
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    pub csi: Payload,
    pub timestamps: Payload,
    pub positions: Option<Payload>,
    pub los: Option<Payload>,
    pub split: Payload,
}

impl DatasetManifest {
    /// Hash identifying the dataset: the generating config's hash for
    /// synthetic data, the CSI checksum otherwise.
    pub fn identity(&self) -> String {
        self.config_hash.clone().unwrap_or_else(|| self.csi.sha256.clone())
    }
}

/// Extra information recorded with a saved dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetInfo {
    pub subcarriers: Option<usize>,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    pub ingested: bool,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_payload(dir: &Path, file: &str, bytes: &[u8]) -> Result<Payload> {
    write_file(&dir.join(file), bytes)?;
    Ok(Payload { file: file.into(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("manifest serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    // Check the version before the full structure so an unknown schema is
    // reported as such rather than as a parse error.
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    match raw.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(Error::Version { path: path.into(), found: v as u32, supported: SCHEMA_VERSION }),
        None => return Err(Error::format(path, "missing schema_version")),
    }
    serde_json::from_value(raw).map_err(|e| Error::format(path, e.to_string()))
}

/// Reads a payload, checking its length against the manifest's dimensions
/// and its checksum against the manifest.
fn read_payload(dir: &Path, p: &Payload, expected: u64) -> Result<Vec<u8>> {
    let path = dir.join(&p.file);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::Truncated { path, expected, found });
    }
    if found > expected {
        return Err(Error::format(path, format!("{} trailing bytes", found - expected)));
    }
    let sum = sha256_hex(&bytes);
    if sum != p.sha256 {
        return Err(Error::Checksum { path, expected: p.sha256.clone(), found: sum });
    }
    Ok(bytes)
}

pub fn f64_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn f64_values(bytes: &[u8]) -> Vec<f64> {
    bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
}

pub fn csi_bytes(values: &[Complex32]) -> Vec<u8> {
    values.iter().flat_map(|z| z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes())).collect()
}

pub fn csi_values(bytes: &[u8]) -> Vec<Complex32> {
    bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
            Complex32::new(re, im)
        })
        .collect()
}

fn split_bytes(split: &[Split]) -> Vec<u8> {
    split.iter().map(|s| u8::from(*s == Split::Test)).collect()
}

pub fn save_dataset(dir: &Path, ds: &CsiDataset, info: &DatasetInfo) -> Result<DatasetManifest> {
    ds.validate()?;
    ensure_dir(dir)?;
    let positions = match &ds.positions {
        Some(p) => Some(write_payload(dir, "positions.bin", &f64_bytes(&p.iter().flatten().copied().collect::<Vec<_>>()))?),
        None => None,
    };
    let los = match &ds.los {
        Some(l) => Some(write_payload(dir, "los.bin", &l.iter().map(|b| u8::from(*b)).collect::<Vec<_>>())?),
        None => None,
    };
    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION,
        provenance: if info.ingested { Provenance::Ingested } else { Provenance::Synthetic },
        samples: ds.len(),
        ap_count: ds.ap_count,
        antennas_per_ap: ds.antennas_per_ap,
        subcarriers: info.subcarriers.unwrap_or(ds.cols),
        cols: ds.cols,
        domain: ds.domain,
        seed: info.seed,
        config_hash: info.config_hash.clone(),
        csi: write_payload(dir, "csi.bin", &csi_bytes(&ds.csi))?,
        timestamps: write_payload(dir, "timestamps.bin", &f64_bytes(&ds.timestamps))?,
        positions,
        los,
        split: write_payload(dir, "split.bin", &split_bytes(&ds.split))?,
    };
    write_json(&dir.join(DATASET_MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn load_dataset(dir: &Path) -> Result<(CsiDataset, DatasetManifest)> {
    let m: DatasetManifest = read_json(&dir.join(DATASET_MANIFEST))?;
    let n = m.samples as u64;
    let rows = (m.ap_count * m.antennas_per_ap) as u64;
    let csi = csi_values(&read_payload(dir, &m.csi, n * rows * m.cols as u64 * 8)?);
    let timestamps = f64_values(&read_payload(dir, &m.timestamps, n * 8)?);
    let positions = match &m.positions {
        Some(p) => Some(f64_values(&read_payload(dir, p, n * 24)?).chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()),
        None => None,
    };
    let los = match &m.los {
        Some(p) => Some(read_payload(dir, p, n * m.ap_count as u64)?.into_iter().map(|b| b != 0).collect()),
        None => None,
    };
    let split_raw = read_payload(dir, &m.split, n)?;
    let split = split_raw.iter().map(|b| if *b == 0 { Split::Train } else { Split::Test }).collect();
    let ds = CsiDataset {
        ap_count: m.ap_count,
        antennas_per_ap: m.antennas_per_ap,
        cols: m.cols,
        domain: m.domain,
        csi,
        timestamps,
        positions,
        los,
        split,
    };
    ds.validate()?;
    Ok((ds, m))
}

/// JSON has no infinities; non-finite thresholds are written as strings.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            v.serialize(s)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureParamsRecord {
    pub taps: usize,
    #[serde(with = "extended_f64")]
    pub p_thr_db: f64,
    pub m_p_db: f64,
}

impl From<FeatureParams> for FeatureParamsRecord {
    fn from(p: FeatureParams) -> Self {
        FeatureParamsRecord { taps: p.taps, p_thr_db: p.p_thr_db, m_p_db: p.m_p_db }
    }
}

impl From<FeatureParamsRecord> for FeatureParams {
    fn from(p: FeatureParamsRecord) -> Self {
        FeatureParams { taps: p.taps, p_thr_db: p.p_thr_db, m_p_db: p.m_p_db }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesManifest {
    pub schema_version: u32,
    pub samples: usize,
    pub ap_count: usize,
    pub dim: usize,
    pub params: FeatureParamsRecord,
    /// Checksum of the CSI payload the features were computed from.
    pub source_csi_sha256: String,
    pub features: Payload,
    pub powers: Payload,
    pub timestamps: Payload,
}

pub fn save_features(dir: &Path, fs_: &FeatureSet, source: &DatasetManifest) -> Result<FeaturesManifest> {
    ensure_dir(dir)?;
    let m = FeaturesManifest {
        schema_version: SCHEMA_VERSION,
        samples: fs_.len(),
        ap_count: fs_.ap_count,
        dim: fs_.dim,
        params: fs_.params.into(),
        source_csi_sha256: source.csi.sha256.clone(),
        features: write_payload(dir, "features.bin", &f64_bytes(&fs_.features))?,
        powers: write_payload(dir, "powers.bin", &f64_bytes(&fs_.powers))?,
        timestamps: write_payload(dir, "timestamps.bin", &f64_bytes(&fs_.timestamps))?,
    };
    write_json(&dir.join(FEATURES_MANIFEST), &m)?;
    Ok(m)
}

pub fn load_features(dir: &Path) -> Result<(FeatureSet, FeaturesManifest)> {
    let m: FeaturesManifest = read_json(&dir.join(FEATURES_MANIFEST))?;
    let n = m.samples as u64;
    let features = f64_values(&read_payload(dir, &m.features, n * m.dim as u64 * 8)?);
    let powers = f64_values(&read_payload(dir, &m.powers, n * m.ap_count as u64 * 8)?);
    let timestamps = f64_values(&read_payload(dir, &m.timestamps, n * 8)?);
    let set = FeatureSet::from_parts(m.params.into(), m.ap_count, m.dim, features, powers, timestamps)?;
    Ok((set, m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub schema_version: u32,
    pub variant: Variant,
    pub seed: u64,
    pub widths: [usize; 7],
    pub features: FeatureParamsRecord,
    /// Affine post-processing map (B2 only).
    pub affine: Option<AffineMap>,
    /// Training-split indices whose labels were used.
    pub labels: Vec<usize>,
    pub config_hash: String,
    /// Hash identifying the dataset the model was trained on.
    pub dataset_hash: String,
    pub params: Payload,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub model: ChartModel,
}

pub fn save_checkpoint(dir: &Path, manifest: CheckpointManifest, model: &ChartModel) -> Result<Checkpoint> {
    ensure_dir(dir)?;
    let manifest = CheckpointManifest {
        schema_version: SCHEMA_VERSION,
        widths: model.widths(),
        params: write_payload(dir, "model.bin", &f64_bytes(model.params()))?,
        ..manifest
    };
    write_json(&dir.join(CHECKPOINT_MANIFEST), &manifest)?;
    Ok(Checkpoint { manifest, model: model.clone() })
}

/// Loads a checkpoint from its directory or its manifest path.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let (dir, manifest_path) = if path.is_dir() {
        (path.to_path_buf(), path.join(CHECKPOINT_MANIFEST))
    } else {
        (path.parent().map(Path::to_path_buf).unwrap_or_default(), path.to_path_buf())
    };
    let m: CheckpointManifest = read_json(&manifest_path)?;
    let count: usize = m.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let params = f64_values(&read_payload(&dir, &m.params, count as u64 * 8)?);
    let model = ChartModel::from_params(m.widths, params)?;
    Ok(Checkpoint { manifest: m, model })
}

/// Layout descriptor of an external CSI recording.
///
/// Payload paths are relative to the descriptor. CSI is f32 (re, im) pairs,
/// sample-major then AP-major rows then columns; timestamps f64; positions,
/// if present, f64 (x, y, z) triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestDescriptor {
    pub samples: usize,
    pub ap_count: usize,
    pub antennas_per_ap: usize,
    pub subcarriers: usize,
    #[serde(default = "frequency")]
    pub domain: Domain,
    pub csi: String,
    pub timestamps: String,
    #[serde(default)]
    pub positions: Option<String>,
    /// Counter-clockwise rotation applied to the horizontal positions.
    #[serde(default)]
    pub rotation_deg: f64,
    #[serde(default)]
    pub rotation_origin: Point2,
    #[serde(default = "default_ratio")]
    pub split_ratio: f64,
    #[serde(default)]
    pub split_seed: u64,
}

fn frequency() -> Domain {
    Domain::Frequency
}

fn default_ratio() -> f64 {
    0.8
}

fn read_raw(path: &Path, expected: u64, what: &'static str) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() as u64 != expected {
        return Err(Error::Core(geochart_core::Error::Shape { what, expected: expected as usize, found: bytes.len() }));
    }
    Ok(bytes)
}

/// Reads an external recording described by a JSON descriptor.
pub fn ingest_external(descriptor: &Path) -> Result<CsiDataset> {
    let text = fs::read_to_string(descriptor).map_err(|e| Error::io(descriptor, e))?;
    let d: IngestDescriptor = serde_json::from_str(&text).map_err(|e| Error::format(descriptor, e.to_string()))?;
    let base = descriptor.parent().map(Path::to_path_buf).unwrap_or_default();
    let n = d.samples as u64;
    let cells = n * (d.ap_count * d.antennas_per_ap * d.subcarriers) as u64;
    let csi = csi_values(&read_raw(&base.join(&d.csi), cells * 8, "csi payload bytes")?);
    let timestamps = f64_values(&read_raw(&base.join(&d.timestamps), n * 8, "timestamp payload bytes")?);
    let positions = match &d.positions {
        Some(p) => {
            let raw = f64_values(&read_raw(&base.join(p), n * 24, "position payload bytes")?);
            let (s, c) = d.rotation_deg.to_radians().sin_cos();
            let [ox, oy] = d.rotation_origin;
            Some(
                raw.chunks_exact(3)
                    .map(|p| {
                        let (x, y) = (p[0] - ox, p[1] - oy);
                        if d.rotation_deg == 0.0 {
                            [p[0], p[1], p[2]]
                        } else {
                            [ox + c * x - s * y, oy + s * x + c * y, p[2]]
                        }
                    })
                    .collect(),
            )
        }
        None => None,
    };
    let ds = CsiDataset {
        ap_count: d.ap_count,
        antennas_per_ap: d.antennas_per_ap,
        cols: d.subcarriers,
        domain: d.domain,
        csi,
        timestamps,
        positions,
        los: None,
        split: vec![Split::Train; d.samples],
    };
    ds.validate()?;
    if ds.positions.is_none() {
        log::warn!("{}: no positions; only label-free variants can be trained", descriptor.display());
    }
    Ok(geochart_core::sim::split_train_test(&ds, d.split_ratio, d.split_seed)?)
}

/// Writes a dataset as an external recording plus descriptor (the inverse of
/// [`ingest_external`] with no rotation).
pub fn export_external(dir: &Path, ds: &CsiDataset, split_ratio: f64, split_seed: u64) -> Result<PathBuf> {
    ensure_dir(dir)?;
    write_file(&dir.join("csi.bin"), &csi_bytes(&ds.csi))?;
    write_file(&dir.join("timestamps.bin"), &f64_bytes(&ds.timestamps))?;
    if let Some(p) = &ds.positions {
        write_file(&dir.join("positions.bin"), &f64_bytes(&p.iter().flatten().copied().collect::<Vec<_>>()))?;
    }
    let d = IngestDescriptor {
        samples: ds.len(),
        ap_count: ds.ap_count,
        antennas_per_ap: ds.antennas_per_ap,
        subcarriers: ds.cols,
        domain: ds.domain,
        csi: "csi.bin".into(),
        timestamps: "timestamps.bin".into(),
        positions: ds.positions.as_ref().map(|_| "positions.bin".into()),
        rotation_deg: 0.0,
        rotation_origin: [0.0, 0.0],
        split_ratio,
        split_seed,
    };
    let path = dir.join("descriptor.json");
    write_file(&path, serde_json::to_string_pretty(&d).expect("descriptor serializes").as_bytes())?;
    Ok(path)
}

/// Shortest decimal form of `x` rounded to 9 significant digits.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let mut out = Vec::new();
    writeln!(out, "{header}").expect("write to vec");
    for r in rows {
        writeln!(out, "{r}").expect("write to vec");
    }
    write_file(path, &out)
}

/// Chart CSV with header `n,x1,x2`.
pub fn export_chart(path: &Path, indices: &[usize], points: &[Point2]) -> Result<()> {
    write_csv(path, "n,x1,x2", indices.iter().zip(points).map(|(n, p)| format!("{n},{},{}", sig9(p[0]), sig9(p[1]))))
}

pub fn read_chart(path: &Path) -> Result<(Vec<usize>, Vec<Point2>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("n,x1,x2") {
        return Err(Error::format(path, "expected header n,x1,x2"));
    }
    let mut idx = Vec::new();
    let mut pts = Vec::new();
    for (k, line) in lines.enumerate() {
        let bad = || Error::format(path, format!("malformed row {}", k + 2));
        let mut f = line.split(',');
        let n = f.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let x: f64 = f.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let y: f64 = f.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        idx.push(n);
        pts.push([x, y]);
    }
    Ok((idx, pts))
}

/// Receive power per AP over time, header `t,ap0,ap1,...`.
pub fn export_power_trace(path: &Path, features: &FeatureSet, aps: &[usize]) -> Result<()> {
    let header = std::iter::once("t".to_string()).chain(aps.iter().map(|a| format!("ap{a}"))).collect::<Vec<_>>().join(",");
    let rows = (0..features.len()).map(|n| {
        let p = features.power_row(n);
        std::iter::once(sig9(features.timestamps[n])).chain(aps.iter().map(|&a| sig9(p[a]))).collect::<Vec<_>>().join(",")
    });
    write_csv(path, &header, rows)
}

/// Per-epoch losses, header `epoch,total,<component>...`.
pub fn export_training_log(path: &Path, log: &TrainingLog) -> Result<()> {
    let header = ["epoch", "total"].into_iter().chain(log.columns.iter().copied()).collect::<Vec<_>>().join(",");
    let rows = log.epochs.iter().map(|e| {
        std::iter::once(e.epoch.to_string())
            .chain(std::iter::once(sig9(e.total)))
            .chain(e.components.iter().map(|v| sig9(*v)))
            .collect::<Vec<_>>()
            .join(",")
    });
    write_csv(path, &header, rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_file(path, text.as_bytes())
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_json(path, value)
}

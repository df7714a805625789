//! JSONL dataset tooling: load and validate, pixel-to-relative box
//! normalization, non-sarcastic augmentation, and class/modality statistics.
//!
//! One record per line, with the fields of [`Sample`]. Records whose boxes are
//! still in pixel units carry `"coordinate_space": "pixel"`; a file must not
//! mix spaces.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{bbox_validate, BBox, PixelBox, Sample, Split, COORD_MAX};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: invalid `{field}`: {message}")]
    InvariantViolation { line: usize, field: String, message: String },
    #[error("image dimensions must be positive, got {width}x{height}")]
    BadDimensions { width: u32, height: u32 },
    #[error("pixel box {pixel_box:?} does not fit a {width}x{height} image")]
    PixelOutOfImage { pixel_box: PixelBox, width: u32, height: u32 },
    #[error("split {split}: need {needed} donor records, only {available} left")]
    InsufficientDonors { split: Split, needed: usize, available: usize },
    #[error("donor `{id}` is not a non-sarcastic record")]
    DonorClassViolation { id: String },
    #[error("target ratio {0} outside [0, 1)")]
    InvalidRatio(f64),
    #[error("operation requires {expected} coordinates")]
    WrongCoordinateSpace { expected: CoordinateSpace },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateSpace {
    Pixel,
    #[default]
    Relative,
}

impl fmt::Display for CoordinateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoordinateSpace::Pixel => "pixel",
            CoordinateSpace::Relative => "relative",
        })
    }
}

/// Records of one file, all in the same coordinate space.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetManifest {
    Relative(Vec<Sample>),
    Pixel(Vec<Sample<PixelBox>>),
}

impl DatasetManifest {
    pub fn coordinate_space(&self) -> CoordinateSpace {
        match self {
            DatasetManifest::Relative(_) => CoordinateSpace::Relative,
            DatasetManifest::Pixel(_) => CoordinateSpace::Pixel,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DatasetManifest::Relative(r) => r.len(),
            DatasetManifest::Pixel(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn relative(&self) -> Result<&[Sample], DatasetError> {
        match self {
            DatasetManifest::Relative(r) => Ok(r),
            DatasetManifest::Pixel(_) => Err(DatasetError::WrongCoordinateSpace { expected: CoordinateSpace::Relative }),
        }
    }

    pub fn into_relative(self) -> Result<Vec<Sample>, DatasetError> {
        match self {
            DatasetManifest::Relative(r) => Ok(r),
            DatasetManifest::Pixel(_) => Err(DatasetError::WrongCoordinateSpace { expected: CoordinateSpace::Relative }),
        }
    }

    /// One JSON line per record.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        match self {
            DatasetManifest::Relative(records) => {
                for r in records {
                    out.push_str(&serde_json::to_string(r).expect("samples serialize"));
                    out.push('\n');
                }
            }
            DatasetManifest::Pixel(records) => {
                for r in records {
                    let mut v = serde_json::to_value(r).expect("samples serialize");
                    v["coordinate_space"] = serde_json::Value::from("pixel");
                    out.push_str(&v.to_string());
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }
}

/// Non-fatal finding attached to a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationWarning {
    pub line: usize,
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedManifest {
    pub manifest: DatasetManifest,
    pub warnings: Vec<ValidationWarning>,
}

fn invariant(line: usize, field: &str, message: impl Into<String>) -> DatasetError {
    DatasetError::InvariantViolation { line, field: field.to_string(), message: message.into() }
}

pub fn load_and_validate(path: impl AsRef<Path>) -> Result<LoadedManifest, DatasetError> {
    parse_manifest(&std::fs::read_to_string(path)?)
}

/// Parses and validates JSONL text. Line numbers are 1-based; blank lines
/// are skipped.
pub fn parse_manifest(text: &str) -> Result<LoadedManifest, DatasetError> {
    let mut space: Option<CoordinateSpace> = None;
    let mut relative = Vec::new();
    let mut pixel = Vec::new();
    let mut seen = HashSet::new();
    let mut warnings = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut value: serde_json::Value =
            serde_json::from_str(raw).map_err(|e| DatasetError::Parse { line, message: e.to_string() })?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| DatasetError::Parse { line, message: "record is not a JSON object".into() })?;
        let record_space = match obj.remove("coordinate_space") {
            None => CoordinateSpace::Relative,
            Some(v) => serde_json::from_value(v).map_err(|e| invariant(line, "coordinate_space", e.to_string()))?,
        };
        match space {
            None => space = Some(record_space),
            Some(s) if s != record_space => {
                return Err(invariant(line, "coordinate_space", format!("{record_space} record in a {s} manifest")))
            }
            _ => {}
        }
        let sample: Sample<[i64; 4]> =
            serde_json::from_value(value).map_err(|e| DatasetError::Parse { line, message: e.to_string() })?;
        if !seen.insert(sample.id.clone()) {
            return Err(DatasetError::DuplicateId { line, id: sample.id });
        }
        sample.check_label_consistency().map_err(|e| invariant(line, e.field(), e.to_string()))?;
        if sample.label.is_sarcastic() && sample.visual_targets.is_empty() && sample.text_target.trim().is_empty() {
            warnings.push(ValidationWarning {
                line,
                id: sample.id.clone(),
                message: "sarcastic record has neither a text nor a visual target".into(),
            });
        }

        match record_space {
            CoordinateSpace::Relative => {
                let s = sample.map_boxes(|[a, b, c, d]| {
                    BBox::new(a, b, c, d).map_err(|e| invariant(line, "visual_targets", e.to_string()))
                })?;
                relative.push(s);
            }
            CoordinateSpace::Pixel => {
                let (w, h) = match (sample.image_width, sample.image_height) {
                    (Some(w), Some(h)) if w > 0 && h > 0 => (w, h),
                    _ => return Err(invariant(line, "image_width", "pixel records need positive image_width and image_height")),
                };
                let s = sample.map_boxes(|coords| check_pixel_box(coords, w, h).map_err(|e| invariant(line, "visual_targets", e.to_string())))?;
                pixel.push(s);
            }
        }
    }

    let manifest = match space.unwrap_or_default() {
        CoordinateSpace::Relative => DatasetManifest::Relative(relative),
        CoordinateSpace::Pixel => DatasetManifest::Pixel(pixel),
    };
    Ok(LoadedManifest { manifest, warnings })
}

fn check_pixel_box(coords: [i64; 4], width: u32, height: u32) -> Result<PixelBox, DatasetError> {
    let [x0, y0, x1, y1] = coords;
    let in_image = |v: i64, extent: u32| (0..=i64::from(extent)).contains(&v);
    if !(in_image(x0, width) && in_image(x1, width) && in_image(y0, height) && in_image(y1, height))
        || x0 > x1
        || y0 > y1
    {
        let clamp = |v: i64| v.clamp(0, i64::from(u32::MAX)) as u32;
        return Err(DatasetError::PixelOutOfImage { pixel_box: coords.map(clamp), width, height });
    }
    Ok(coords.map(|v| v as u32))
}

/// `round(v * 1000 / extent)` with halves rounded away from zero, in exact
/// integer arithmetic.
fn scale_coord(v: u32, extent: u32) -> u32 {
    let num = 2 * u64::from(v) * u64::from(COORD_MAX) + u64::from(extent);
    let q = num / (2 * u64::from(extent));
    q.min(u64::from(COORD_MAX)) as u32
}

/// Maps a pixel box of a `width x height` image into relative coordinates.
pub fn normalize_box(pixel_box: PixelBox, width: u32, height: u32) -> Result<BBox, DatasetError> {
    if width == 0 || height == 0 {
        return Err(DatasetError::BadDimensions { width, height });
    }
    let [x0, y0, x1, y1] = pixel_box;
    if x1 > width || y1 > height || x0 > x1 || y0 > y1 {
        return Err(DatasetError::PixelOutOfImage { pixel_box, width, height });
    }
    let coords = [scale_coord(x0, width), scale_coord(y0, height), scale_coord(x1, width), scale_coord(y1, height)];
    let [a, b, c, d] = coords.map(i64::from);
    debug_assert!(bbox_validate([a, b, c, d]).is_ok());
    Ok(BBox::new(a, b, c, d).expect("scaled coordinates stay ordered and in range"))
}

/// Converts every record to relative coordinates. Relative manifests pass
/// through unchanged.
pub fn normalize_manifest(m: DatasetManifest) -> Result<DatasetManifest, DatasetError> {
    match m {
        DatasetManifest::Relative(_) => Ok(m),
        DatasetManifest::Pixel(records) => {
            let converted = records
                .into_iter()
                .map(|s| {
                    let (w, h) = (s.image_width.unwrap_or(0), s.image_height.unwrap_or(0));
                    s.map_boxes(|b| normalize_box(b, w, h))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(DatasetManifest::Relative(converted))
        }
    }
}

/// Target non-sarcastic fraction per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub default: f64,
    #[serde(default)]
    pub overrides: BTreeMap<Split, f64>,
}

impl SplitRatios {
    pub fn uniform(ratio: f64) -> Self {
        SplitRatios { default: ratio, overrides: BTreeMap::new() }
    }

    pub fn with(mut self, split: Split, ratio: f64) -> Self {
        self.overrides.insert(split, ratio);
        self
    }

    pub fn get(&self, split: Split) -> f64 {
        self.overrides.get(&split).copied().unwrap_or(self.default)
    }
}

/// Non-sarcastic count `n` such that `n / (sarcastic + n)` is closest to
/// `ratio`.
pub fn target_negatives(sarcastic: usize, ratio: f64) -> usize {
    (ratio * sarcastic as f64 / (1.0 - ratio)).round() as usize
}

/// Injects non-sarcastic donors into each split until its non-sarcastic
/// fraction reaches the target. Donors are shuffled once with `seed` and
/// consumed in order across splits (train, val, test); injected records take
/// the split they are assigned to and keep their origin tag. Existing records
/// are never removed.
pub fn rebalance(
    primary: &DatasetManifest,
    donors: &DatasetManifest,
    ratios: &SplitRatios,
    seed: u64,
) -> Result<DatasetManifest, DatasetError> {
    let primary = primary.relative()?;
    let donors = donors.relative()?;
    for split in Split::ALL {
        let r = ratios.get(split);
        if !(0.0..1.0).contains(&r) {
            return Err(DatasetError::InvalidRatio(r));
        }
    }
    if let Some(d) = donors.iter().find(|d| d.label.is_sarcastic()) {
        return Err(DatasetError::DonorClassViolation { id: d.id.clone() });
    }

    let mut ids: HashSet<&str> = primary.iter().map(|s| s.id.as_str()).collect();
    let mut pool: Vec<&Sample> = donors.iter().collect();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut pool = pool.into_iter();

    let mut out = primary.to_vec();
    for split in Split::ALL {
        let in_split = primary.iter().filter(|s| s.split == split);
        let sarcastic = in_split.clone().filter(|s| s.label.is_sarcastic()).count();
        let negatives = in_split.count() - sarcastic;
        let needed = target_negatives(sarcastic, ratios.get(split)).saturating_sub(negatives);
        if needed > pool.len() {
            return Err(DatasetError::InsufficientDonors { split, needed, available: pool.len() });
        }
        for donor in pool.by_ref().take(needed) {
            if !ids.insert(donor.id.as_str()) {
                return Err(DatasetError::DuplicateId { line: 0, id: donor.id.clone() });
            }
            let mut record = donor.clone();
            record.split = split;
            out.push(record);
        }
    }
    Ok(DatasetManifest::Relative(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub sarcastic: usize,
    pub non_sarcastic: usize,
    pub total: usize,
}

/// Where the sarcasm target lives, over sarcastic records only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModalityCounts {
    pub text_only: usize,
    pub visual_only: usize,
    pub text_and_visual: usize,
    /// Sarcastic records with no target at all.
    pub neither: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub train: SplitCounts,
    pub val: SplitCounts,
    pub test: SplitCounts,
    pub total: SplitCounts,
    pub modality: ModalityCounts,
}

impl DatasetStats {
    pub fn split(&self, split: Split) -> &SplitCounts {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

pub fn stats(m: &DatasetManifest) -> Result<DatasetStats, DatasetError> {
    let mut st = DatasetStats::default();
    for s in m.relative()? {
        let counts = match s.split {
            Split::Train => &mut st.train,
            Split::Val => &mut st.val,
            Split::Test => &mut st.test,
        };
        for c in [counts, &mut st.total] {
            c.total += 1;
            if s.label.is_sarcastic() {
                c.sarcastic += 1;
            } else {
                c.non_sarcastic += 1;
            }
        }
        if s.label.is_sarcastic() {
            let text = !s.text_target.trim().is_empty();
            let visual = !s.visual_targets.is_empty();
            let bucket = match (text, visual) {
                (true, false) => &mut st.modality.text_only,
                (false, true) => &mut st.modality.visual_only,
                (true, true) => &mut st.modality.text_and_visual,
                (false, false) => &mut st.modality.neither,
            };
            *bucket += 1;
        }
    }
    Ok(st)
}

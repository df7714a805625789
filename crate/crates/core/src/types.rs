//! Shared domain types: boxes in the relative coordinate space, labels and
//! dataset samples.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Upper bound of the relative coordinate space (inclusive).
pub const COORD_MAX: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BoxError {
    #[error("coordinate {value} outside 0..={COORD_MAX}")]
    OutOfRange { value: i64 },
    #[error("inverted box: min corner exceeds max corner")]
    Inverted,
}

/// Axis-aligned rectangle in relative `[0, 1000]` coordinates.
///
/// Serialized as a 4-element array `[xmin, ymin, xmax, ymax]`. Deserialization
/// validates, so a `BBox` obtained from JSON always satisfies the invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BBox {
    xmin: u32,
    ymin: u32,
    xmax: u32,
    ymax: u32,
}

impl BBox {
    /// The `(0,0,0,0)` "no visual target" sentinel.
    pub const NONE: BBox = BBox { xmin: 0, ymin: 0, xmax: 0, ymax: 0 };
    /// The `(0,0,1000,1000)` whole-image box.
    pub const WHOLE_IMAGE: BBox = BBox { xmin: 0, ymin: 0, xmax: COORD_MAX, ymax: COORD_MAX };

    pub fn new(xmin: i64, ymin: i64, xmax: i64, ymax: i64) -> Result<Self, BoxError> {
        bbox_validate([xmin, ymin, xmax, ymax])?;
        Ok(BBox { xmin: xmin as u32, ymin: ymin as u32, xmax: xmax as u32, ymax: ymax as u32 })
    }

    pub fn xmin(&self) -> u32 {
        self.xmin
    }
    pub fn ymin(&self) -> u32 {
        self.ymin
    }
    pub fn xmax(&self) -> u32 {
        self.xmax
    }
    pub fn ymax(&self) -> u32 {
        self.ymax
    }

    pub fn coords(&self) -> [u32; 4] {
        [self.xmin, self.ymin, self.xmax, self.ymax]
    }

    pub fn is_sentinel(&self) -> bool {
        *self == BBox::NONE
    }

    pub fn area(&self) -> u64 {
        u64::from(self.xmax - self.xmin) * u64::from(self.ymax - self.ymin)
    }

    pub fn intersection_area(&self, other: &BBox) -> u64 {
        let w = self.xmax.min(other.xmax).saturating_sub(self.xmin.max(other.xmin));
        let h = self.ymax.min(other.ymax).saturating_sub(self.ymin.max(other.ymin));
        u64::from(w) * u64::from(h)
    }

    /// Intersection over union. Zero when the boxes do not overlap and when
    /// both boxes are degenerate.
    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            return 0.0;
        }
        inter as f64 / union as f64
    }

    /// Whether `other` lies entirely inside `self`.
    pub fn contains(&self, other: &BBox) -> bool {
        self.xmin <= other.xmin && self.ymin <= other.ymin && self.xmax >= other.xmax && self.ymax >= other.ymax
    }
}

/// Checks the box invariants on raw (possibly negative or oversized) values.
pub fn bbox_validate(coords: [i64; 4]) -> Result<(), BoxError> {
    if let Some(&value) = coords.iter().find(|&&v| !(0..=i64::from(COORD_MAX)).contains(&v)) {
        return Err(BoxError::OutOfRange { value });
    }
    let [xmin, ymin, xmax, ymax] = coords;
    if xmin > xmax || ymin > ymax {
        return Err(BoxError::Inverted);
    }
    Ok(())
}

/// Free-function form of [`BBox::iou`].
pub fn bbox_iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.xmin, self.ymin, self.xmax, self.ymax)
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        // i64 rejects fractional values instead of rounding them.
        let [a, b, c, d] = <[i64; 4]>::deserialize(deserializer)?;
        BBox::new(a, b, c, d).map_err(de::Error::custom)
    }
}

/// Binary sarcasm label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum Label {
    #[default]
    NotSarcastic,
    Sarcastic,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Sarcastic => "sarcastic",
            Label::NotSarcastic => "not sarcastic",
        }
    }

    pub fn is_sarcastic(&self) -> bool {
        matches!(self, Label::Sarcastic)
    }

    pub fn from_bool(sarcastic: bool) -> Self {
        if sarcastic {
            Label::Sarcastic
        } else {
            Label::NotSarcastic
        }
    }

    /// Case-insensitive match on the two wire spellings.
    pub fn parse_loose(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("sarcastic") {
            Some(Label::Sarcastic)
        } else if s.eq_ignore_ascii_case("not sarcastic") {
            Some(Label::NotSarcastic)
        } else {
            None
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LabelVisitor;

        impl Visitor<'_> for LabelVisitor {
            type Value = Label;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("\"sarcastic\", \"not sarcastic\", 1 or 0")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Label, E> {
                match v {
                    "sarcastic" => Ok(Label::Sarcastic),
                    "not sarcastic" => Ok(Label::NotSarcastic),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Label, E> {
                match v {
                    1 => Ok(Label::Sarcastic),
                    0 => Ok(Label::NotSarcastic),
                    other => Err(E::invalid_value(de::Unexpected::Unsigned(other), &self)),
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Label, E> {
                match v {
                    1 => Ok(Label::Sarcastic),
                    0 => Ok(Label::NotSarcastic),
                    other => Err(E::invalid_value(de::Unexpected::Signed(other), &self)),
                }
            }

            fn visit_bool<E: de::Error>(self, v: bool) -> Result<Label, E> {
                Ok(Label::from_bool(v))
            }
        }

        deserializer.deserialize_any(LabelVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// Pixel-space box as found in raw annotations, `[xmin, ymin, xmax, ymax]`.
pub type PixelBox = [u32; 4];

/// One dataset record.
///
/// Generic over the box representation so that pixel-space manifests can be
/// loaded before normalization; everything downstream uses `Sample<BBox>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "B: Deserialize<'de>"))]
pub struct Sample<B = BBox> {
    pub id: String,
    #[serde(default)]
    pub image_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_height: Option<u32>,
    pub text: String,
    pub label: Label,
    #[serde(default)]
    pub visual_targets: Vec<B>,
    #[serde(default)]
    pub text_target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(default)]
    pub split: Split,
    /// Origin corpus tag, kept so augmented records stay auditable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("non-sarcastic sample carries a visual target")]
    NegativeWithBoxes,
    #[error("non-sarcastic sample carries a text target")]
    NegativeWithText,
}

impl SampleError {
    pub fn field(&self) -> &'static str {
        match self {
            SampleError::NegativeWithBoxes => "visual_targets",
            SampleError::NegativeWithText => "text_target",
        }
    }
}

impl<B> Sample<B> {
    /// Label/target consistency. Box validity is enforced by the box type.
    pub fn check_label_consistency(&self) -> Result<(), SampleError> {
        if !self.label.is_sarcastic() {
            if !self.visual_targets.is_empty() {
                return Err(SampleError::NegativeWithBoxes);
            }
            if !self.text_target.trim().is_empty() {
                return Err(SampleError::NegativeWithText);
            }
        }
        Ok(())
    }

    /// Rebuilds the record with boxes mapped through `f`.
    pub fn map_boxes<C, E>(self, f: impl FnMut(B) -> Result<C, E>) -> Result<Sample<C>, E> {
        let visual_targets = self.visual_targets.into_iter().map(f).collect::<Result<Vec<_>, E>>()?;
        Ok(Sample {
            id: self.id,
            image_path: self.image_path,
            image_width: self.image_width,
            image_height: self.image_height,
            text: self.text,
            label: self.label,
            visual_targets,
            text_target: self.text_target,
            rationale: self.rationale,
            split: self.split,
            origin: self.origin,
        })
    }
}

impl Sample {
    /// Minimal relative-space sample; remaining fields take their defaults.
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        Sample {
            id: id.into(),
            image_path: String::new(),
            image_width: None,
            image_height: None,
            text: text.into(),
            label,
            visual_targets: Vec::new(),
            text_target: String::new(),
            rationale: None,
            split: Split::Train,
            origin: None,
        }
    }

    pub fn with_targets(mut self, boxes: Vec<BBox>, keywords: impl Into<String>) -> Self {
        self.visual_targets = boxes;
        self.text_target = keywords.into();
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }
}

//! Grounded chain-of-thought response grammar.
//!
//! A completion is a `<Think>…</Think>` rationale followed by an
//! `<Answer>…</Answer>` block holding exactly three fields:
//!
//! ```text
//! Label: "sarcastic"
//! Image Objects: [(120,40,560,800)]
//! Text Objects: "great service"
//! ```
//!
//! Parsing never fails outright: malformed input produces a response with
//! `format_ok = false`, a default answer and a machine-readable reason.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::types::{BBox, Label};

pub const FIELD_LABEL: &str = "Label";
pub const FIELD_IMAGE_OBJECTS: &str = "Image Objects";
pub const FIELD_TEXT_OBJECTS: &str = "Text Objects";

static THINK_OPEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)<\s*think\s*>").unwrap());
static THINK_CLOSE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)<\s*/\s*think\s*>").unwrap());
static ANSWER_OPEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)<\s*answer\s*>").unwrap());
static ANSWER_CLOSE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)<\s*/\s*answer\s*>").unwrap());

/// Why a completion failed the format check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "field")]
pub enum FormatFailure {
    MissingThink,
    MissingAnswer,
    DuplicateAnswer,
    BadField(String),
    BadCoordinate,
}

impl std::fmt::Display for FormatFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormatFailure::BadField(name) => write!(f, "BadField({name})"),
            other => write!(f, "{other:?}"),
        }
    }
}

/// The structured answer `(label, boxes, keywords)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParsedAnswer {
    pub label: Label,
    pub boxes: Vec<BBox>,
    pub keywords: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub think: String,
    pub answer: ParsedAnswer,
    pub format_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FormatFailure>,
}

impl ParsedResponse {
    fn failed(think: String, failure: FormatFailure) -> Self {
        ParsedResponse { think, answer: ParsedAnswer::default(), format_ok: false, failure: Some(failure) }
    }
}

/// Half-open character offsets of one coordinate number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordSpan {
    pub start: usize,
    pub end: usize,
}

/// Byte range of the interior of the first `<Answer>` block.
fn locate_answer(text: &str, from: usize) -> Option<Range<usize>> {
    let open = ANSWER_OPEN.find_at(text, from)?;
    let close = ANSWER_CLOSE.find_at(text, open.end())?;
    Some(open.end()..close.start())
}

pub fn parse_response(text: &str) -> ParsedResponse {
    let Some(think_open) = THINK_OPEN.find(text) else {
        return ParsedResponse::failed(String::new(), FormatFailure::MissingThink);
    };
    let Some(think_close) = THINK_CLOSE.find_at(text, think_open.end()) else {
        return ParsedResponse::failed(String::new(), FormatFailure::MissingThink);
    };
    let think = text[think_open.end()..think_close.start()].trim().to_string();

    let Some(body) = locate_answer(text, think_close.end()) else {
        return ParsedResponse::failed(think, FormatFailure::MissingAnswer);
    };
    if ANSWER_OPEN.find_iter(text).nth(1).is_some() || ANSWER_CLOSE.find_iter(text).nth(1).is_some() {
        return ParsedResponse::failed(think, FormatFailure::DuplicateAnswer);
    }
    match parse_answer_block(&text[body]) {
        Ok(answer) => ParsedResponse { think, answer, format_ok: true, failure: None },
        Err(failure) => ParsedResponse::failed(think, failure),
    }
}

fn canonical_key(raw: &str) -> Option<&'static str> {
    let key = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_ascii_lowercase();
    match key.as_str() {
        "label" => Some(FIELD_LABEL),
        "image objects" => Some(FIELD_IMAGE_OBJECTS),
        "text objects" => Some(FIELD_TEXT_OBJECTS),
        _ => None,
    }
}

fn strip_quotes(value: &str) -> &str {
    let v = value.trim();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        v[1..v.len() - 1].trim()
    } else {
        v
    }
}

fn bad_field(name: &str) -> FormatFailure {
    FormatFailure::BadField(name.chars().take(64).collect())
}

/// Parses the interior of an Answer block.
pub fn parse_answer_block(text: &str) -> Result<ParsedAnswer, FormatFailure> {
    let mut label = None;
    let mut boxes = None;
    let mut keywords = None;

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((raw_key, value)) = line.split_once(':') else {
            return Err(bad_field(line));
        };
        let Some(key) = canonical_key(raw_key) else {
            return Err(bad_field(raw_key.trim()));
        };
        match key {
            FIELD_LABEL => {
                if label.is_some() {
                    return Err(bad_field(key));
                }
                label = Some(Label::parse_loose(strip_quotes(value)).ok_or_else(|| bad_field(key))?);
            }
            FIELD_IMAGE_OBJECTS => {
                if boxes.is_some() {
                    return Err(bad_field(key));
                }
                boxes = Some(parse_box_list(value)?);
            }
            _ => {
                if keywords.is_some() {
                    return Err(bad_field(key));
                }
                keywords = Some(strip_quotes(value).to_string());
            }
        }
    }

    Ok(ParsedAnswer {
        label: label.ok_or_else(|| bad_field(FIELD_LABEL))?,
        boxes: boxes.ok_or_else(|| bad_field(FIELD_IMAGE_OBJECTS))?,
        keywords: keywords.ok_or_else(|| bad_field(FIELD_TEXT_OBJECTS))?,
    })
}

#[derive(Debug)]
enum ScanError {
    Grammar,
    Numeric,
}

/// One parenthesized 4-tuple: values plus byte ranges of each digit run.
struct ScannedTuple {
    values: [u64; 4],
    spans: [Range<usize>; 4],
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Scanner<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ScanError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ScanError::Grammar)
        }
    }

    fn number(&mut self) -> Result<(u64, Range<usize>), ScanError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ScanError::Grammar);
        }
        // Overlong digit runs cannot be valid coordinates; avoid overflow.
        let digits = &self.bytes[start..self.pos];
        if digits.len() > 7 {
            return Err(ScanError::Numeric);
        }
        let value = digits.iter().fold(0u64, |acc, d| acc * 10 + u64::from(d - b'0'));
        Ok((value, start..self.pos))
    }

    fn tuple(&mut self) -> Result<ScannedTuple, ScanError> {
        self.expect(b'(')?;
        let mut values = [0u64; 4];
        let mut spans: [Range<usize>; 4] = Default::default();
        for i in 0..4 {
            if i > 0 {
                self.expect(b',')?;
            }
            let (v, span) = self.number()?;
            values[i] = v;
            spans[i] = span;
        }
        self.expect(b')')?;
        Ok(ScannedTuple { values, spans })
    }

    /// `[` (tuple (`,` tuple)*)? `]` followed only by whitespace.
    fn box_list(&mut self) -> Result<Vec<ScannedTuple>, ScanError> {
        self.expect(b'[')?;
        let mut tuples = Vec::new();
        self.skip_ws();
        if self.peek() == Some(b']') {
            self.pos += 1;
        } else {
            loop {
                tuples.push(self.tuple()?);
                self.skip_ws();
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b']') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(ScanError::Grammar),
                }
            }
        }
        self.skip_ws();
        if self.pos != self.bytes.len() {
            return Err(ScanError::Grammar);
        }
        Ok(tuples)
    }
}

fn scan_box_list(value: &str) -> Result<Vec<ScannedTuple>, ScanError> {
    Scanner { bytes: value.as_bytes(), pos: 0 }.box_list()
}

fn parse_box_list(value: &str) -> Result<Vec<BBox>, FormatFailure> {
    let tuples = scan_box_list(value).map_err(|e| match e {
        ScanError::Grammar => bad_field(FIELD_IMAGE_OBJECTS),
        ScanError::Numeric => FormatFailure::BadCoordinate,
    })?;
    let mut boxes = Vec::with_capacity(tuples.len());
    for t in tuples {
        let [a, b, c, d] = t.values.map(|v| v as i64);
        let bbox = BBox::new(a, b, c, d).map_err(|_| FormatFailure::BadCoordinate)?;
        if !bbox.is_sentinel() {
            boxes.push(bbox);
        }
    }
    Ok(boxes)
}

/// Canonical three-line Answer body.
pub fn render_answer(a: &ParsedAnswer) -> String {
    let boxes = if a.boxes.is_empty() {
        BBox::NONE.to_string()
    } else {
        a.boxes.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    };
    format!(
        "{FIELD_LABEL}: \"{}\"\n{FIELD_IMAGE_OBJECTS}: [{boxes}]\n{FIELD_TEXT_OBJECTS}: \"{}\"",
        a.label.as_str(),
        a.keywords
    )
}

/// Full completion: rationale in Think tags followed by the canonical answer.
pub fn render_response(think: &str, a: &ParsedAnswer) -> String {
    format!("<Think>\n{think}\n</Think>\n<Answer>\n{}\n</Answer>", render_answer(a))
}

/// Character spans of every coordinate number in the Image Objects field of
/// the first Answer block. Numbers anywhere else are never reported.
pub fn extract_coordinate_spans(text: &str) -> Vec<CoordSpan> {
    let Some(body) = locate_answer(text, 0) else {
        return Vec::new();
    };
    let mut byte_spans = Vec::new();
    let mut line_start = body.start;
    for line in text[body.clone()].split_inclusive('\n') {
        let offset = line_start;
        line_start += line.len();
        let Some((raw_key, value)) = line.split_once(':') else { continue };
        if canonical_key(raw_key) != Some(FIELD_IMAGE_OBJECTS) {
            continue;
        }
        let value_offset = offset + raw_key.len() + 1;
        if let Ok(tuples) = scan_box_list(value) {
            for t in tuples {
                byte_spans.extend(t.spans.iter().map(|r| (r.start + value_offset)..(r.end + value_offset)));
            }
        }
        break;
    }
    byte_spans.iter().map(|r| CoordSpan { start: char_offset(text, r.start), end: char_offset(text, r.end) }).collect()
}

/// Converts a byte offset (on a char boundary) to a character offset.
pub(crate) fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

//! Readers and writers for the toolkit's input files.
//!
//! * COCO-style caption JSON: `{"images": [{id, file_name}], "annotations": [{image_id, caption}]}`
//!   with an optional top-level `"split"` name.
//! * Prediction JSON: `[{image_id, blur_level, caption}]`.
//! * Feature-count CSV: `image_id,level,count`.
//! * Blur-flag CSV: `image_id,flag` with `flag` in `with_blur` / `no_blur`.
//! * Score CSV: `technique,level,score`, optionally prefixed by a `dataset`
//!   column; `level` may also be `with_blur` / `no_blur`.
//!
//! Image ids may be JSON numbers or strings and are kept as strings.

use std::collections::BTreeMap;

use blurbench_core::dataset::{BlurFlag, BlurFlagAnnotation, Dataset, FeatureCountRecord, ImageEntry, PredictionSet};
use blurbench_core::report::{ScoreColumn, ScoreEntry};
use blurbench_core::BlurLevel;
use serde::{Deserialize, Serialize};

use crate::error::IngestError;

type Result<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize, Serialize)]
#[serde(untagged)]
enum RawId {
    Int(u64),
    Text(String),
}

impl RawId {
    fn into_string(self) -> String {
        match self {
            RawId::Int(n) => n.to_string(),
            RawId::Text(s) => s,
        }
    }

    /// Canonical decimal ids go back out as numbers.
    fn from_str(id: &str) -> RawId {
        match id.parse::<u64>() {
            Ok(n) if n.to_string() == id => RawId::Int(n),
            _ => RawId::Text(id.to_owned()),
        }
    }
}

#[derive(Deserialize, Serialize)]
struct CocoImage {
    id: RawId,
    #[serde(default)]
    file_name: String,
}

#[derive(Deserialize, Serialize)]
struct CocoAnnotation {
    image_id: RawId,
    caption: String,
}

#[derive(Deserialize, Serialize)]
struct CocoDocument {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    split: String,
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
}

pub fn parse_captions(document: &[u8]) -> Result<Dataset> {
    let doc: CocoDocument = serde_json::from_slice(document)?;
    let images: Vec<ImageEntry> = doc
        .images
        .into_iter()
        .map(|i| ImageEntry {
            image_id: i.id.into_string(),
            file_name: i.file_name,
        })
        .collect();
    let mut references: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for a in doc.annotations {
        references
            .entry(a.image_id.into_string())
            .or_default()
            .push(a.caption);
    }
    Ok(Dataset::new(doc.split, images, references)?)
}

pub fn serialize_captions(ds: &Dataset) -> Vec<u8> {
    let doc = CocoDocument {
        split: ds.split_name().to_owned(),
        images: ds
            .images()
            .iter()
            .map(|i| CocoImage {
                id: RawId::from_str(&i.image_id),
                file_name: i.file_name.clone(),
            })
            .collect(),
        annotations: ds
            .iter()
            .flat_map(|(img, refs)| {
                refs.iter().map(|c| CocoAnnotation {
                    image_id: RawId::from_str(&img.image_id),
                    caption: c.clone(),
                })
            })
            .collect(),
    };
    serde_json::to_vec_pretty(&doc).expect("dataset serializes")
}

#[derive(Deserialize, Serialize)]
struct RawPrediction {
    image_id: RawId,
    blur_level: String,
    caption: String,
}

pub fn parse_predictions(document: &[u8]) -> Result<PredictionSet> {
    let raw: Vec<RawPrediction> = serde_json::from_slice(document)?;
    let mut set = PredictionSet::new();
    for p in raw {
        let level: BlurLevel = p.blur_level.parse()?;
        set.insert(p.image_id.into_string(), level, p.caption)?;
    }
    Ok(set)
}

pub fn serialize_predictions(preds: &PredictionSet) -> Vec<u8> {
    let raw: Vec<RawPrediction> = preds
        .iter()
        .map(|(id, level, caption)| RawPrediction {
            image_id: RawId::from_str(id),
            blur_level: level.as_str().to_owned(),
            caption: caption.to_owned(),
        })
        .collect();
    serde_json::to_vec_pretty(&raw).expect("predictions serialize")
}

fn csv_reader<'a>(document: &'a [u8], expected: &[&str]) -> Result<csv::Reader<&'a [u8]>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(document);
    let headers = rdr.headers()?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(IngestError::CsvHeader {
            expected: expected.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(rdr)
}

fn record_error(rec: &csv::StringRecord, message: impl Into<String>) -> IngestError {
    IngestError::Record {
        line: rec.position().map_or(0, |p| p.line()),
        message: message.into(),
    }
}

pub fn parse_feature_counts(document: &[u8]) -> Result<Vec<FeatureCountRecord>> {
    let mut rdr = csv_reader(document, &["image_id", "level", "count"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let level: BlurLevel = rec[1]
            .parse()
            .map_err(|e: blurbench_core::Error| record_error(&rec, e.to_string()))?;
        let count: i64 = rec[2]
            .parse()
            .map_err(|_| record_error(&rec, format!("count `{}` is not an integer", &rec[2])))?;
        let count = u64::try_from(count)
            .map_err(|_| record_error(&rec, format!("count {count} is negative")))?;
        out.push(FeatureCountRecord {
            image_id: rec[0].to_owned(),
            level,
            count,
        });
    }
    Ok(out)
}

pub fn serialize_feature_counts(records: &[FeatureCountRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["image_id", "level", "count"]).unwrap();
    for r in records {
        w.write_record([r.image_id.as_str(), r.level.as_str(), &r.count.to_string()])
            .unwrap();
    }
    w.into_inner().expect("in-memory writer")
}

pub fn parse_blur_flags(document: &[u8]) -> Result<BlurFlagAnnotation> {
    let mut rdr = csv_reader(document, &["image_id", "flag"])?;
    let mut out = BlurFlagAnnotation::new();
    for rec in rdr.records() {
        let rec = rec?;
        let flag: BlurFlag = rec[1].parse().map_err(|e: String| record_error(&rec, e))?;
        if out.insert(rec[0].to_owned(), flag).is_some() {
            return Err(record_error(&rec, format!("image `{}` flagged twice", &rec[0])));
        }
    }
    Ok(out)
}

pub fn serialize_blur_flags(flags: &BlurFlagAnnotation) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["image_id", "flag"]).unwrap();
    for (id, flag) in flags {
        w.write_record([id.as_str(), flag.as_str()]).unwrap();
    }
    w.into_inner().expect("in-memory writer")
}

pub fn parse_scores(document: &[u8]) -> Result<Vec<ScoreEntry>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(document);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let with_dataset = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["technique", "level", "score"] => false,
        ["dataset", "technique", "level", "score"] => true,
        _ => {
            return Err(IngestError::CsvHeader {
                expected: "technique,level,score".into(),
                found: headers.join(","),
            })
        }
    };
    let offset = usize::from(with_dataset);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let column = ScoreColumn::parse(&rec[offset + 1])
            .map_err(|e| record_error(&rec, e.to_string()))?;
        let score: f64 = rec[offset + 2]
            .parse()
            .map_err(|_| record_error(&rec, format!("score `{}` is not a number", &rec[offset + 2])))?;
        if !score.is_finite() {
            return Err(record_error(&rec, "score is not finite"));
        }
        out.push(ScoreEntry {
            dataset: if with_dataset { rec[0].to_owned() } else { String::new() },
            technique: rec[offset].to_owned(),
            column,
            score,
        });
    }
    Ok(out)
}

/// Writes the four-column form when any entry names a dataset.
pub fn serialize_scores(entries: &[ScoreEntry]) -> Vec<u8> {
    let with_dataset = entries.iter().any(|e| !e.dataset.is_empty());
    let mut w = csv::Writer::from_writer(Vec::new());
    if with_dataset {
        w.write_record(["dataset", "technique", "level", "score"]).unwrap();
    } else {
        w.write_record(["technique", "level", "score"]).unwrap();
    }
    for e in entries {
        let score = format!("{:?}", e.score);
        let mut row = vec![e.technique.as_str(), e.column.as_str(), score.as_str()];
        if with_dataset {
            row.insert(0, e.dataset.as_str());
        }
        w.write_record(row).unwrap();
    }
    w.into_inner().expect("in-memory writer")
}

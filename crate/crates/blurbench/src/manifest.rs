//! Augmentation manifests as JSON lines.
//!
//! The first line is a header
//! `{"seed":..,"plan":"ObjDet-Cap-Aug","detector_schedule":[..],"captioner_schedule":[..]}`;
//! every following line is `{"sample_key":..,"stage":"detector"|"captioner","level":"MB0".."MB3"}`.

use blurbench_core::schedule::{validate_schedule, AugmentationManifest, ManifestEntry, Technique, TechniquePlan};
use serde::{Deserialize, Serialize};

use crate::error::IngestError;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    seed: u64,
    plan: String,
    detector_schedule: [f64; 4],
    captioner_schedule: [f64; 4],
}

#[derive(Debug, Serialize, Deserialize)]
struct Line {
    sample_key: String,
    stage: String,
    level: String,
}

pub fn write_manifest(m: &AugmentationManifest) -> String {
    let header = Header {
        seed: m.seed,
        plan: m.plan.technique.name().into(),
        detector_schedule: m.plan.detector.probs(),
        captioner_schedule: m.plan.captioner.probs(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for e in &m.entries {
        let line = Line {
            sample_key: e.sample_key.clone(),
            stage: e.stage.as_str().into(),
            level: e.level.as_str().into(),
        };
        out.push_str(&serde_json::to_string(&line).expect("entry serializes"));
        out.push('\n');
    }
    out
}

pub fn read_manifest(text: &str) -> Result<AugmentationManifest, IngestError> {
    let bad = |line: usize, message: String| IngestError::Record {
        line: line as u64,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| bad(1, "missing header line".into()))?;
    let header: Header = serde_json::from_str(first)?;
    let technique: Technique = header.plan.parse().map_err(|e| bad(1, e))?;
    let plan = TechniquePlan {
        technique,
        detector: validate_schedule(header.detector_schedule)?,
        captioner: validate_schedule(header.captioner_schedule)?,
    };
    let mut entries = Vec::new();
    for (i, l) in lines {
        let line: Line = serde_json::from_str(l)?;
        entries.push(ManifestEntry {
            sample_key: line.sample_key,
            stage: line.stage.parse().map_err(|e| bad(i + 1, e))?,
            level: line.level.parse()?,
        });
    }
    Ok(AugmentationManifest {
        seed: header.seed,
        plan,
        entries,
    })
}

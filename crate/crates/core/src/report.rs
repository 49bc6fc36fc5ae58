//! Score tables, degradation deltas and region-feature histograms.
//!
//! Scores are kept at full precision and rounded to one decimal (tenths)
//! when rendered. Deltas are computed from the rounded values, in integer
//! tenths, so `117.1 - 48.4` is exactly `68.7`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::dataset::{BlurFlag, FeatureCountRecord};
use crate::imaging::BlurLevel;
use crate::schedule::Technique;
use crate::{Error, Result};

pub const DEFAULT_BIN_WIDTH: u64 = 10;

/// Score rounded to tenths.
pub fn tenths(score: f64) -> i64 {
    libm::round(score * 10.0) as i64
}

/// Formats a tenths value with one decimal place, e.g. `-5` → `-0.5`.
pub fn format_tenths(t: i64) -> String {
    let sign = if t < 0 { "-" } else { "" };
    let a = t.unsigned_abs();
    format!("{sign}{}.{}", a / 10, a % 10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScoreColumn {
    Level(BlurLevel),
    Subset(BlurFlag),
}

impl ScoreColumn {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreColumn::Level(l) => l.as_str(),
            ScoreColumn::Subset(f) => f.as_str(),
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        let t = token.trim();
        if let Ok(flag) = t.parse::<BlurFlag>() {
            return Ok(ScoreColumn::Subset(flag));
        }
        t.parse().map(ScoreColumn::Level)
    }
}

/// One score cell as read from a scores file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub dataset: String,
    pub technique: String,
    pub column: ScoreColumn,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub technique: String,
    /// Indexed MB0..MB3.
    pub scores: [f64; 4],
    pub with_blur: Option<f64>,
    pub no_blur: Option<f64>,
}

impl ScoreRow {
    pub fn score(&self, level: BlurLevel) -> f64 {
        self.scores[level.index()]
    }

    pub fn subset(&self, flag: BlurFlag) -> Option<f64> {
        match flag {
            BlurFlag::WithBlur => self.with_blur,
            BlurFlag::NoBlur => self.no_blur,
        }
    }
}

/// CIDEr-D per technique and blur level for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub dataset: String,
    pub rows: Vec<ScoreRow>,
}

/// Sort key placing the four known techniques first in their usual order.
fn technique_rank(name: &str) -> (usize, String) {
    match name.parse::<Technique>() {
        Ok(t) => (t as usize, String::new()),
        Err(_) => (Technique::ALL.len(), String::from(name)),
    }
}

impl ScoreTable {
    /// Groups entries into one table per dataset (in order of first
    /// appearance). Every technique needs all four levels.
    pub fn from_entries(entries: &[ScoreEntry]) -> Result<Vec<ScoreTable>> {
        type Cells = BTreeMap<ScoreColumn, f64>;
        let mut datasets: Vec<(String, BTreeMap<String, Cells>)> = Vec::new();
        for e in entries {
            let idx = match datasets.iter().position(|(d, _)| *d == e.dataset) {
                Some(i) => i,
                None => {
                    datasets.push((e.dataset.clone(), BTreeMap::new()));
                    datasets.len() - 1
                }
            };
            let cells = datasets[idx].1.entry(e.technique.clone()).or_default();
            if cells.insert(e.column, e.score).is_some() {
                return Err(Error::DuplicateScore {
                    technique: e.technique.clone(),
                    column: e.column.as_str().into(),
                });
            }
        }
        datasets
            .into_iter()
            .map(|(dataset, techniques)| {
                let mut rows = techniques
                    .into_iter()
                    .map(|(technique, cells)| {
                        let mut scores = [0.0; 4];
                        for level in BlurLevel::ALL {
                            scores[level.index()] = *cells
                                .get(&ScoreColumn::Level(level))
                                .ok_or_else(|| Error::IncompleteRow {
                                    technique: technique.clone(),
                                    level,
                                })?;
                        }
                        Ok(ScoreRow {
                            with_blur: cells.get(&ScoreColumn::Subset(BlurFlag::WithBlur)).copied(),
                            no_blur: cells.get(&ScoreColumn::Subset(BlurFlag::NoBlur)).copied(),
                            technique,
                            scores,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.sort_by_cached_key(|r| technique_rank(&r.technique));
                Ok(ScoreTable { dataset, rows })
            })
            .collect()
    }

    pub fn has_subsets(&self) -> bool {
        self.rows
            .iter()
            .any(|r| r.with_blur.is_some() || r.no_blur.is_some())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradationDelta {
    pub technique: String,
    pub level: BlurLevel,
    /// `score(MB0) - score(level)` on one-decimal scores, in tenths.
    pub delta_tenths: i64,
}

impl DegradationDelta {
    pub fn delta(&self) -> f64 {
        self.delta_tenths as f64 / 10.0
    }
}

/// MB0-baseline deltas for every row and level (MB0 included, always 0).
pub fn degradation_deltas(table: &ScoreTable) -> Vec<DegradationDelta> {
    table
        .rows
        .iter()
        .flat_map(|row| {
            let base = tenths(row.score(BlurLevel::Mb0));
            BlurLevel::ALL.into_iter().map(move |level| DegradationDelta {
                technique: row.technique.clone(),
                level,
                delta_tenths: base - tenths(row.score(level)),
            })
        })
        .collect()
}

/// Rows whose one-decimal score rises with blur intensity. Such rows are
/// reported, not rejected.
pub fn monotonicity_warnings(table: &ScoreTable) -> Vec<String> {
    let mut out = Vec::new();
    for row in &table.rows {
        for pair in BlurLevel::ALL.windows(2) {
            let (lo, hi) = (tenths(row.score(pair[0])), tenths(row.score(pair[1])));
            if hi > lo {
                out.push(format!(
                    "{}{}{}: score rises from {} at {} to {} at {}",
                    table.dataset,
                    if table.dataset.is_empty() { "" } else { "/" },
                    row.technique,
                    format_tenths(lo),
                    pair[0],
                    format_tenths(hi),
                    pair[1]
                ));
            }
        }
    }
    out
}

/// Image counts binned by number of region features, for one blur level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureHistogram {
    pub level: BlurLevel,
    pub bin_width: u64,
    /// `floor(count / bin_width)` → number of images.
    pub bins: BTreeMap<u64, u64>,
}

impl FeatureHistogram {
    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }
}

/// One histogram per level present in `records`, ascending by level.
pub fn build_histograms(records: &[FeatureCountRecord], bin_width: u64) -> Result<Vec<FeatureHistogram>> {
    if bin_width == 0 {
        return Err(Error::ZeroBinWidth);
    }
    let mut by_level: BTreeMap<BlurLevel, BTreeMap<u64, u64>> = BTreeMap::new();
    for r in records {
        *by_level
            .entry(r.level)
            .or_default()
            .entry(r.count / bin_width)
            .or_insert(0) += 1;
    }
    Ok(by_level
        .into_iter()
        .map(|(level, bins)| FeatureHistogram {
            level,
            bin_width,
            bins,
        })
        .collect())
}

pub fn mean_feature_count(records: &[FeatureCountRecord], level: BlurLevel) -> Result<f64> {
    let (sum, n) = records
        .iter()
        .filter(|r| r.level == level)
        .fold((0u128, 0u64), |(s, n), r| (s + r.count as u128, n + 1));
    if n == 0 {
        return Err(Error::NoRecords(level));
    }
    Ok(sum as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|s| format_tenths(tenths(s))).unwrap_or_default()
}

/// Scores at MB0..MB3, optional blur/no-blur subset columns, and the drop
/// from MB0 at MB1..MB3.
pub fn render_scores(tables: &[ScoreTable], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("dataset,technique,MB0,MB1,MB2,MB3,with_blur,no_blur,delta_MB1,delta_MB2,delta_MB3\n");
            for table in tables {
                let deltas = degradation_deltas(table);
                for (row, d) in table.rows.iter().zip(deltas.chunks(4)) {
                    let _ = write!(out, "{},{}", table.dataset, row.technique);
                    for s in row.scores {
                        let _ = write!(out, ",{}", format_tenths(tenths(s)));
                    }
                    let _ = write!(out, ",{},{}", opt_cell(row.with_blur), opt_cell(row.no_blur));
                    for d in &d[1..] {
                        let _ = write!(out, ",{}", format_tenths(d.delta_tenths));
                    }
                    out.push('\n');
                }
            }
        }
        Format::Markdown => {
            for (i, table) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                if !table.dataset.is_empty() {
                    let _ = writeln!(out, "### {}\n", table.dataset);
                }
                let subsets = table.has_subsets();
                out.push_str("| Technique | MB0 | MB1 | MB2 | MB3 |");
                if subsets {
                    out.push_str(" With blur | No blur |");
                }
                out.push_str(" Drop MB1 | Drop MB2 | Drop MB3 |\n|---|---:|---:|---:|---:|");
                if subsets {
                    out.push_str("---:|---:|");
                }
                out.push_str("---:|---:|---:|\n");
                let deltas = degradation_deltas(table);
                for (row, d) in table.rows.iter().zip(deltas.chunks(4)) {
                    let _ = write!(out, "| {} |", row.technique);
                    for s in row.scores {
                        let _ = write!(out, " {} |", format_tenths(tenths(s)));
                    }
                    if subsets {
                        let _ = write!(out, " {} | {} |", opt_cell(row.with_blur), opt_cell(row.no_blur));
                    }
                    for d in &d[1..] {
                        let _ = write!(out, " {} |", format_tenths(d.delta_tenths));
                    }
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// Blur/no-blur subset scores per technique together with the number of
/// images carrying each flag.
pub fn render_subsets(tables: &[ScoreTable], with_blur_images: usize, no_blur_images: usize, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("dataset,technique,flag,score,images\n");
            for table in tables {
                for row in &table.rows {
                    for (flag, n) in [(BlurFlag::WithBlur, with_blur_images), (BlurFlag::NoBlur, no_blur_images)] {
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{}",
                            table.dataset,
                            row.technique,
                            flag,
                            opt_cell(row.subset(flag)),
                            n
                        );
                    }
                }
            }
        }
        Format::Markdown => {
            let _ = writeln!(
                out,
                "Images with blur: {with_blur_images}; without blur: {no_blur_images}\n"
            );
            out.push_str("| Dataset | Technique | With blur | No blur |\n|---|---|---:|---:|\n");
            for table in tables {
                for row in &table.rows {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} |",
                        table.dataset,
                        row.technique,
                        opt_cell(row.with_blur),
                        opt_cell(row.no_blur)
                    );
                }
            }
        }
    }
    out
}

pub fn render_histograms(hists: &[FeatureHistogram], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("level,bin,bin_start,bin_end,images\n");
            for h in hists {
                for (&bin, &n) in &h.bins {
                    let start = bin * h.bin_width;
                    let _ = writeln!(out, "{},{},{},{},{}", h.level, bin, start, start + h.bin_width, n);
                }
            }
        }
        Format::Markdown => {
            out.push_str("| Level | Features | Images |\n|---|---|---:|\n");
            for h in hists {
                for (&bin, &n) in &h.bins {
                    let start = bin * h.bin_width;
                    let _ = writeln!(out, "| {} | {}-{} | {} |", h.level, start, start + h.bin_width - 1, n);
                }
            }
        }
    }
    out
}

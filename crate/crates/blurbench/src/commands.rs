//! The `blur`, `plan`, `score` and `report` workflows.
//!
//! Every command returns `Ok(true)` when no per-item error occurred and
//! `Ok(false)` when some items failed but the rest were processed. Files are
//! written atomically: a temporary file in the target directory is renamed
//! into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use blurbench_core::cider::{corpus_cider_d, CiderConfig};
use blurbench_core::dataset::{filter_by_blur_flag, BlurFlag};
use blurbench_core::imaging::{apply_blur, make_kernel};
use blurbench_core::report::{
    build_histograms, mean_feature_count, monotonicity_warnings, render_histograms, render_scores,
    render_subsets, Format, ScoreColumn, ScoreEntry, ScoreTable,
};
use blurbench_core::schedule::{plan_dataset, Stage, Technique};
use blurbench_core::{BlurLevel, Image};

use crate::ingest;
use crate::manifest::write_manifest;
use crate::pnm::{load_any, save_image, PnmFormat};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SCORES_FILE: &str = "scores.csv";

/// Writes `bytes` to `path` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

/// Console sinks for progress lines and diagnostics.
pub struct Console<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Console<'_> {
    fn info(&mut self, msg: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", msg.as_ref());
    }

    fn warn(&mut self, msg: impl AsRef<str>) {
        let _ = writeln!(self.err, "warning: {}", msg.as_ref());
    }

    fn error(&mut self, msg: impl AsRef<str>) {
        let _ = writeln!(self.err, "error: {}", msg.as_ref());
    }
}

fn is_pnm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("ppm"))
}

/// Expands directories into their PGM/PPM files, sorted by name.
fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_pnm(p))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn blur_one(path: &Path, levels: &[BlurLevel], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let img = load_any(&read(path)?).with_context(|| format!("decoding {}", path.display()))?;
    for &level in levels {
        let k = make_kernel(level);
        if k.tap_width() > img.width() || k.tap_height() > img.height() {
            bail!(
                "{}x{} image is smaller than the {} kernel ({}x{})",
                img.width(),
                img.height(),
                level,
                k.tap_width(),
                k.tap_height()
            );
        }
    }
    let format = PnmFormat::for_channels(img.channels()).expect("decoded images have 1 or 3 channels");
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .context("input file name is not valid UTF-8")?;
    let mut written = Vec::new();
    for &level in levels {
        let blurred: Image = match level {
            BlurLevel::Mb0 => img.clone(),
            _ => apply_blur(&img, &make_kernel(level))?,
        };
        let dest = out_dir.join(format!("{stem}.{level}.{}", format.extension()));
        write_atomic(&dest, &save_image(&blurred, format)?)?;
        written.push(dest);
    }
    Ok(written)
}

/// Writes `<stem>.<level>.<ext>` for every input image and requested level.
pub fn cmd_blur(inputs: &[PathBuf], levels: &[BlurLevel], out_dir: &Path, con: &mut Console) -> Result<bool> {
    let files = collect_inputs(inputs)?;
    if files.is_empty() {
        con.warn("no PGM/PPM inputs found");
        return Ok(true);
    }
    let mut failures = 0;
    for file in &files {
        match blur_one(file, levels, out_dir) {
            Ok(written) => con.info(format!("{}: wrote {} variant(s)", file.display(), written.len())),
            Err(e) => {
                failures += 1;
                con.error(format!("{}: {e:#}", file.display()));
            }
        }
    }
    con.info(format!(
        "blur: {} file(s), {} failed, levels {}",
        files.len(),
        failures,
        levels.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(",")
    ));
    Ok(failures == 0)
}

/// Reads one key per line, ignoring blank lines.
pub fn read_keys(path: &Path) -> Result<Vec<String>> {
    let text = String::from_utf8(read(path)?).context("keys file is not UTF-8")?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

pub fn cmd_plan(keys_path: &Path, technique: Technique, seed: u64, out_dir: &Path, con: &mut Console) -> Result<bool> {
    let keys = read_keys(keys_path)?;
    let manifest = match plan_dataset(&keys, technique.plan(), seed) {
        Ok(m) => m,
        Err(e) => {
            con.error(format!("{}: {e}", keys_path.display()));
            return Ok(false);
        }
    };
    let dest = out_dir.join(MANIFEST_FILE);
    write_atomic(&dest, write_manifest(&manifest).as_bytes())?;
    con.info(format!("plan: {technique}, seed {seed}, {} key(s) -> {}", keys.len(), dest.display()));
    for stage in Stage::ALL {
        let counts = manifest.level_counts(stage);
        con.info(format!(
            "  {stage}: MB0={} MB1={} MB2={} MB3={}",
            counts[0], counts[1], counts[2], counts[3]
        ));
    }
    Ok(true)
}

pub struct ScoreInputs<'a> {
    pub dataset: &'a Path,
    pub predictions: &'a Path,
    pub flags: Option<&'a Path>,
    pub technique: &'a str,
    pub cider: CiderConfig,
}

/// Corpus CIDEr-D per blur level present in the predictions, plus MB0
/// blur/no-blur subsets when flags are given.
pub fn cmd_score(inputs: &ScoreInputs, out_dir: &Path, con: &mut Console) -> Result<bool> {
    let ds = ingest::parse_captions(&read(inputs.dataset)?)
        .with_context(|| format!("parsing {}", inputs.dataset.display()))?;
    let preds = ingest::parse_predictions(&read(inputs.predictions)?)
        .with_context(|| format!("parsing {}", inputs.predictions.display()))?;
    let stray = preds
        .iter()
        .filter(|(id, _, _)| ds.references(id).is_none())
        .count();
    if stray > 0 {
        con.warn(format!("{stray} prediction(s) refer to images outside the dataset; ignored"));
    }
    let mut ok = true;
    let mut entries = Vec::new();
    for level in preds.levels() {
        let missing = preds.missing(&ds, level);
        if !missing.is_empty() {
            ok = false;
            con.error(format!(
                "{level}: no prediction for {} image(s): {}",
                missing.len(),
                missing.join(", ")
            ));
            continue;
        }
        let score = corpus_cider_d(&preds, &ds, level, &inputs.cider)?;
        con.info(format!("{} {level}: CIDEr-D {score:.4}", inputs.technique));
        entries.push(ScoreEntry {
            dataset: String::new(),
            technique: inputs.technique.to_owned(),
            column: ScoreColumn::Level(level),
            score,
        });
    }
    if let Some(flags_path) = inputs.flags {
        let flags = ingest::parse_blur_flags(&read(flags_path)?)
            .with_context(|| format!("parsing {}", flags_path.display()))?;
        if preds.missing(&ds, BlurLevel::Mb0).is_empty() {
            for flag in [BlurFlag::WithBlur, BlurFlag::NoBlur] {
                let subset = filter_by_blur_flag(&ds, &flags, flag)?;
                if subset.is_empty() {
                    con.warn(format!("no images flagged {flag}"));
                    continue;
                }
                let score = corpus_cider_d(&preds, &subset, BlurLevel::Mb0, &inputs.cider)?;
                con.info(format!("{} {flag} ({} images): CIDEr-D {score:.4}", inputs.technique, subset.len()));
                entries.push(ScoreEntry {
                    dataset: String::new(),
                    technique: inputs.technique.to_owned(),
                    column: ScoreColumn::Subset(flag),
                    score,
                });
            }
        } else {
            con.warn("blur-flag subsets need complete MB0 predictions; skipped");
        }
    }
    write_atomic(&out_dir.join(SCORES_FILE), &ingest::serialize_scores(&entries))?;
    Ok(ok)
}

pub struct ReportInputs<'a> {
    pub scores: &'a [PathBuf],
    pub features: Option<&'a Path>,
    pub flags: Option<&'a Path>,
    pub bin_width: u64,
    /// Format echoed to the console.
    pub format: Format,
}

/// Writes the degradation table, per-level feature histograms and, with
/// flags, the blur/no-blur subset table.
pub fn cmd_report(inputs: &ReportInputs, out_dir: &Path, con: &mut Console) -> Result<bool> {
    let mut entries = Vec::new();
    for path in inputs.scores {
        entries.extend(ingest::parse_scores(&read(path)?).with_context(|| format!("parsing {}", path.display()))?);
    }
    let tables = ScoreTable::from_entries(&entries)?;
    for table in &tables {
        for w in monotonicity_warnings(table) {
            con.warn(w);
        }
    }
    let md = render_scores(&tables, Format::Markdown);
    let csv = render_scores(&tables, Format::Csv);
    write_atomic(&out_dir.join("degradation.md"), md.as_bytes())?;
    write_atomic(&out_dir.join("degradation.csv"), csv.as_bytes())?;
    con.info(match inputs.format {
        Format::Markdown => md.trim_end(),
        Format::Csv => csv.trim_end(),
    });

    if let Some(path) = inputs.features {
        let records = ingest::parse_feature_counts(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))?;
        let hists = build_histograms(&records, inputs.bin_width)?;
        let mut means = String::from("level,images,mean_features\n");
        for h in &hists {
            let file = out_dir.join(format!("histogram_{}.csv", h.level));
            write_atomic(&file, render_histograms(std::slice::from_ref(h), Format::Csv).as_bytes())?;
            let mean = mean_feature_count(&records, h.level)?;
            means.push_str(&format!("{},{},{:.3}\n", h.level, h.total(), mean));
            con.info(format!("{}: {} image(s), mean {:.2} region features", h.level, h.total(), mean));
        }
        write_atomic(&out_dir.join("histograms.md"), render_histograms(&hists, Format::Markdown).as_bytes())?;
        write_atomic(&out_dir.join("feature_means.csv"), means.as_bytes())?;
    }

    if let Some(path) = inputs.flags {
        let flags = ingest::parse_blur_flags(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        let with = flags.values().filter(|f| **f == BlurFlag::WithBlur).count();
        let without = flags.len() - with;
        write_atomic(&out_dir.join("subsets.md"), render_subsets(&tables, with, without, Format::Markdown).as_bytes())?;
        write_atomic(&out_dir.join("subsets.csv"), render_subsets(&tables, with, without, Format::Csv).as_bytes())?;
        con.info(format!("subsets: {with} image(s) with blur, {without} without"));
    }
    Ok(true)
}

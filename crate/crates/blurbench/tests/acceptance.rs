//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//! ```text
//! cargo test -p blurbench --test acceptance
//! ```

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use blurbench::commands::{cmd_report, Console, ReportInputs};
use blurbench::ingest::*;
use blurbench::manifest::write_manifest;
use blurbench_core::cider::{build_idf, cider_d, ngram_counts, tokenize, CiderConfig};
use blurbench_core::dataset::{filter_by_blur_flag, BlurFlag, FeatureCountRecord};
use blurbench_core::imaging::{apply_blur, make_kernel, reference::naive_blur};
use blurbench_core::report::{build_histograms, Format};
use blurbench_core::schedule::{empirical_frequencies, plan_dataset, Stage, Technique};
use blurbench_core::{BlurLevel, Image};
use common::{blurbench, fixture, fixtures, oracle, p, stderr};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_image(rng: &mut StdRng) -> Image {
    let w = rng.random_range(45..=128);
    let h = rng.random_range(12..=128);
    let c = if rng.random_bool(0.5) { 1 } else { 3 };
    let mut samples = vec![0u8; w * h * c];
    rng.fill(&mut samples[..]);
    Image::new(w, h, c, samples).unwrap()
}

fn convolution_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let images: Vec<Image> = (0..100).map(|_| random_image(&mut rng)).collect();
    let mut fast_time = Duration::ZERO;
    let start = Instant::now();
    for (i, img) in images.iter().enumerate() {
        for level in BlurLevel::ALL {
            let k = make_kernel(level);
            let t = Instant::now();
            let fast = apply_blur(img, &k).map_err(|e| e.to_string())?;
            fast_time += t.elapsed();
            let slow = naive_blur(img, &k).map_err(|e| e.to_string())?;
            ensure(fast == slow, || {
                format!("image {i} ({}x{}x{}) differs at {level}", img.width(), img.height(), img.channels())
            })?;
        }
    }
    let total = start.elapsed();
    ensure(total < Duration::from_secs(10), || format!("took {total:?}"))?;
    Ok(format!("400 comparisons, fast path {fast_time:.2?}, total {total:.2?}"))
}

fn constant_preservation() -> Outcome {
    for (w, h, c) in [(45, 12, 1), (64, 48, 3), (128, 128, 3)] {
        for v in [0u8, 1, 127, 254, 255] {
            let img = Image::filled(w, h, c, v).unwrap();
            for level in BlurLevel::ALL {
                let out = apply_blur(&img, &make_kernel(level)).map_err(|e| e.to_string())?;
                ensure(out == img, || format!("{w}x{h}x{c} value {v} changed under {level}"))?;
            }
        }
    }
    Ok("15 constant images x 4 kernels unchanged".into())
}

/// Two hand-written candidates per toy image.
const CANDIDATES: [(&str, &str); 20] = [
    ("1", "A brown dog running on the beach."),
    ("1", "A cat sleeping on a couch."),
    ("2", "A kitchen with white cabinets and a silver stove."),
    ("2", "A room with a sink."),
    ("3", "A red double decker bus on a city street."),
    ("3", "A bus."),
    ("4", "A pepperoni pizza on a plate."),
    ("4", "A large pizza with cheese and pepperoni sitting on a wooden table next to a plate."),
    ("5", "Two giraffes standing next to a tall tree."),
    ("5", "An animal in a field."),
    ("6", "A man skiing down a snowy slope."),
    ("6", "A person in the snow."),
    ("7", "A gray cat lying on a laptop keyboard."),
    ("7", "A dog on a bed."),
    ("8", "A yellow train pulling into a train station."),
    ("8", "Tracks."),
    ("9", "A surfer riding a big wave in the ocean."),
    ("9", "A man on a surfboard."),
    ("10", "A bedroom with a large bed and a window."),
    ("10", "A lamp."),
];

fn cider_oracle_equivalence() -> Outcome {
    let ds = parse_captions(&fs::read(fixture("captions.json")).unwrap()).map_err(|e| e.to_string())?;
    let corpus: Vec<Vec<String>> = ds.iter().map(|(_, r)| r.to_vec()).collect();
    ensure(ds.len() == 10 && corpus.iter().all(|r| r.len() == 5), || "toy corpus is not 10x5".into())?;
    let cfg = CiderConfig::default();
    let idf = build_idf(&ds, cfg.max_n).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut check = |id: &str, cand: &str| -> Result<(), String> {
        let refs = ds.references(id).ok_or_else(|| format!("no image {id}"))?;
        let toks: Vec<_> = refs.iter().map(|r| tokenize(r)).collect();
        let got = cider_d(&tokenize(cand), &toks, &idf, &cfg).map_err(|e| e.to_string())?;
        let want = oracle::cider_d(cand, refs, &corpus, cfg.sigma, cfg.scale);
        let diff = (got - want).abs();
        worst = worst.max(diff);
        checked += 1;
        ensure(diff < 1e-9, || format!("image {id} `{cand}`: {got} vs oracle {want}"))
    };
    for (id, cand) in CANDIDATES {
        check(id, cand)?;
    }
    for file in ["predictions_no_aug.json", "predictions_objdet_cap_aug.json"] {
        let preds = parse_predictions(&fs::read(fixture(file)).unwrap()).map_err(|e| e.to_string())?;
        for (id, _, cand) in preds.iter() {
            check(id, cand)?;
        }
    }
    Ok(format!("{checked} candidates, max |diff| {worst:.1e}"))
}

fn cider_boundaries() -> Outcome {
    let ds = parse_captions(&fs::read(fixture("captions.json")).unwrap()).map_err(|e| e.to_string())?;
    let cfg = CiderConfig::default();
    let idf = build_idf(&ds, cfg.max_n).map_err(|e| e.to_string())?;
    let (mut checked, mut strict) = (0, 0);
    for (id, refs) in ds.iter() {
        let toks: Vec<_> = refs.iter().map(|r| tokenize(r)).collect();
        for cand in &toks {
            let same = cider_d(cand, &vec![cand.clone(); refs.len()], &idf, &cfg).map_err(|e| e.to_string())?;
            ensure((same - 10.0).abs() <= 1e-9, || format!("identical {:?} scored {same}", cand.tokens()))?;
            let counts = ngram_counts(cand, cfg.max_n);
            let positive = (1..=cfg.max_n).all(|n| counts.order(n).keys().all(|g| idf.idf(n, g) > 0.0));
            if positive && cand.len() >= 4 {
                strict += 1;
            }
            checked += 1;
        }
        let disjoint = cider_d(&tokenize("zebra xylophone quantum orchestra"), &toks, &idf, &cfg)
            .map_err(|e| e.to_string())?;
        ensure(disjoint == 0.0, || format!("disjoint candidate on image {} scored {disjoint}", id.image_id))?;
    }
    ensure(strict > 0, || "no reference has idf > 0 on every n-gram".into())?;
    Ok(format!("identical = 10.0 for {checked} captions ({strict} with idf > 0 throughout), disjoint = 0"))
}

fn schedule_convergence() -> Outcome {
    let keys: Vec<String> = (0..100_000).map(|i| format!("COCO_train2014_{i:012}.jpg")).collect();
    let plan = Technique::ObjDetCapAug.plan();
    let m = plan_dataset(&keys, plan, 0).map_err(|e| e.to_string())?;
    let freq = empirical_frequencies(&m, Stage::Captioner).map_err(|e| e.to_string())?;
    let target = [0.5, 0.2, 0.2, 0.1];
    for (l, (f, t)) in freq.iter().zip(target).enumerate() {
        ensure((f - t).abs() <= 0.01, || format!("MB{l}: {f:.4} vs {t}"))?;
    }
    let det = m.level_counts(Stage::Detector);
    ensure(det[3] == 0, || format!("{} MB3 detector assignments", det[3]))?;
    let det_freq = empirical_frequencies(&m, Stage::Detector).map_err(|e| e.to_string())?;
    for (l, (f, t)) in det_freq.iter().zip([0.8, 0.1, 0.1, 0.0]).enumerate() {
        ensure((f - t).abs() <= 0.01, || format!("detector MB{l}: {f:.4} vs {t}"))?;
    }
    let again = plan_dataset(&keys, plan, 0).map_err(|e| e.to_string())?;
    ensure(write_manifest(&m) == write_manifest(&again), || "same seed gave different manifests".into())?;
    Ok(format!(
        "captioner {:.4}/{:.4}/{:.4}/{:.4}, detector MB3 = 0, rerun identical",
        freq[0], freq[1], freq[2], freq[3]
    ))
}

/// Published scores, one row per technique: MB0..MB3, then with/without
/// blur where reported.
const COCO: [(&str, [&str; 4]); 4] = [
    ("No-Aug", ["117.1", "111.4", "95.0", "48.4"]),
    ("ObjDet-Aug", ["116.6", "114.6", "111.7", "100.2"]),
    ("Cap-Aug", ["116.8", "115.0", "108.8", "85.1"]),
    ("ObjDet-Cap-Aug", ["117.4", "116.0", "113.4", "105.7"]),
];
const VIZWIZ: [(&str, [&str; 6]); 4] = [
    ("No-Aug", ["48.8", "47.0", "40.9", "26.4", "47.2", "53.0"]),
    ("ObjDet-Aug", ["48.9", "48.1", "45.6", "39.5", "47.0", "53.3"]),
    ("Cap-Aug", ["50.0", "49.2", "46.9", "38.2", "49.0", "53.2"]),
    ("ObjDet-Cap-Aug", ["50.3", "49.9", "48.1", "43.5", "48.9", "54.1"]),
];

fn run_report(out: &Path, features: bool, flags: bool) -> Result<(), String> {
    let scores = [fixture("published_scores.csv")];
    let feat = fixture("feature_counts.csv");
    let fl = fixture("blur_flags.csv");
    let inputs = ReportInputs {
        scores: &scores,
        features: features.then_some(feat.as_path()),
        flags: flags.then_some(fl.as_path()),
        bin_width: 10,
        format: Format::Markdown,
    };
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let mut con = Console { out: &mut o, err: &mut e };
    match cmd_report(&inputs, out, &mut con) {
        Ok(true) => Ok(()),
        Ok(false) => Err(String::from_utf8_lossy(&e).into_owned()),
        Err(err) => Err(format!("{err:#}")),
    }
}

fn table_reproduction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    run_report(dir.path(), false, true)?;
    let csv = fs::read_to_string(dir.path().join("degradation.csv")).map_err(|e| e.to_string())?;
    let rows: BTreeMap<(String, String), Vec<String>> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<String> = l.split(',').map(str::to_owned).collect();
            ((f[0].clone(), f[1].clone()), f[2..].to_vec())
        })
        .collect();
    let mut cells = 0;
    let mut check_row = |dataset: &str, tech: &str, want: &[&str]| -> Result<(), String> {
        let got = rows
            .get(&(dataset.to_owned(), tech.to_owned()))
            .ok_or_else(|| format!("{dataset}/{tech} missing"))?;
        for (i, w) in want.iter().enumerate() {
            ensure(got[i] == *w, || format!("{dataset}/{tech} column {i}: {} vs {w}", got[i]))?;
            cells += 1;
        }
        Ok(())
    };
    for (tech, s) in COCO {
        check_row("MS COCO", tech, &s)?;
    }
    for (tech, s) in VIZWIZ {
        check_row("VizWiz", tech, &s)?;
    }
    let delta = |dataset: &str, tech: &str| rows[&(dataset.to_owned(), tech.to_owned())][8].clone();
    let headline = [
        delta("MS COCO", "No-Aug"),
        delta("MS COCO", "ObjDet-Cap-Aug"),
        delta("VizWiz", "No-Aug"),
        delta("VizWiz", "ObjDet-Cap-Aug"),
    ];
    ensure(headline == ["68.7", "11.7", "22.4", "6.8"], || format!("MB0->MB3 drops {headline:?}"))?;
    let md = fs::read_to_string(dir.path().join("degradation.md")).map_err(|e| e.to_string())?;
    for (tech, s) in COCO {
        let line = format!("| {tech} | {} | {} | {} | {} |", s[0], s[1], s[2], s[3]);
        ensure(md.contains(&line), || format!("markdown lacks `{line}`"))?;
    }
    Ok(format!("{cells} cells, drops {}", headline.join(" / ")))
}

fn histogram_conservation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    for trial in 0..50 {
        let records: Vec<FeatureCountRecord> = (0..rng.random_range(1..200))
            .map(|i| FeatureCountRecord {
                image_id: format!("{i}"),
                level: BlurLevel::from_index(rng.random_range(0..4)).unwrap(),
                count: rng.random_range(0..500),
            })
            .collect();
        let width = rng.random_range(1..40);
        let hists = build_histograms(&records, width).map_err(|e| e.to_string())?;
        for h in &hists {
            let n = records.iter().filter(|r| r.level == h.level).count() as u64;
            ensure(h.total() == n, || format!("trial {trial} {}: {} vs {n}", h.level, h.total()))?;
        }
    }

    let dir = tempfile::tempdir().unwrap();
    run_report(dir.path(), true, false)?;
    let text = fs::read_to_string(fixture("feature_counts.csv")).unwrap();
    let mut per_level: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let e = per_level.entry(f[1]).or_default();
        e.0 += 1;
        e.1 += f[2].parse::<u64>().unwrap();
    }
    let mut means = Vec::new();
    for level in BlurLevel::ALL {
        let h = fs::read_to_string(dir.path().join(format!("histogram_{level}.csv"))).map_err(|e| e.to_string())?;
        let total: u64 = h.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
        let (n, sum) = per_level[level.as_str()];
        ensure(total == n, || format!("fixture {level}: {total} vs {n}"))?;
        means.push(sum as f64 / n as f64);
    }
    ensure(means.windows(2).all(|w| w[1] < w[0]), || format!("means not decreasing: {means:?}"))?;
    let reported = fs::read_to_string(dir.path().join("feature_means.csv")).unwrap();
    for (level, m) in BlurLevel::ALL.iter().zip(&means) {
        ensure(reported.contains(&format!("{level},10,{m:.3}")), || format!("feature_means.csv lacks {level} {m:.3}"))?;
    }
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.1}")).collect();
    Ok(format!("50 random fixtures conserved, toy means {}", shown.join(" > ")))
}

fn ingest_roundtrip() -> Outcome {
    let read = |name: &str| fs::read(fixture(name)).unwrap();
    let e = |e: blurbench::IngestError| e.to_string();

    let ds = parse_captions(&read("captions.json")).map_err(e)?;
    let ds2 = parse_captions(&serialize_captions(&ds)).map_err(e)?;
    ensure(ds == ds2, || "captions changed".into())?;

    for file in ["predictions_no_aug.json", "predictions_objdet_cap_aug.json"] {
        let p1 = parse_predictions(&read(file)).map_err(e)?;
        let p2 = parse_predictions(&serialize_predictions(&p1)).map_err(e)?;
        ensure(p1 == p2, || format!("{file} changed"))?;
    }

    let f1 = parse_feature_counts(&read("feature_counts.csv")).map_err(e)?;
    let f2 = parse_feature_counts(&serialize_feature_counts(&f1)).map_err(e)?;
    ensure(f1 == f2, || "feature counts changed".into())?;

    let flags = parse_blur_flags(&read("blur_flags.csv")).map_err(e)?;
    ensure(parse_blur_flags(&serialize_blur_flags(&flags)).map_err(e)? == flags, || "flags changed".into())?;

    let with = filter_by_blur_flag(&ds, &flags, BlurFlag::WithBlur).map_err(|e| e.to_string())?;
    let without = filter_by_blur_flag(&ds, &flags, BlurFlag::NoBlur).map_err(|e| e.to_string())?;
    let a: BTreeSet<_> = with.images().iter().map(|i| i.image_id.clone()).collect();
    let b: BTreeSet<_> = without.images().iter().map(|i| i.image_id.clone()).collect();
    let all: BTreeSet<_> = ds.images().iter().map(|i| i.image_id.clone()).collect();
    ensure(a.is_disjoint(&b), || "flag subsets overlap".into())?;
    ensure(a.union(&b).cloned().collect::<BTreeSet<_>>() == all, || "flag subsets miss images".into())?;
    Ok(format!("3 formats + flags identical, partition {} + {} = {}", a.len(), b.len(), all.len()))
}

fn pipeline(work: &Path) -> Result<(), String> {
    let step = |args: &[&str]| -> Result<(), String> {
        let o = blurbench(args);
        ensure(o.status.success(), || format!("`{}` failed: {}", args[0], stderr(&o)))
    };
    let out = |d: &str| work.join(d);
    step(&["blur", p(&fixtures().join("images")), "--out", p(&out("blurred"))])?;
    step(&["plan", "--keys", p(&fixture("keys.txt")), "--technique", "ObjDet-Cap-Aug", "--seed", "0", "--out", p(&out("plan"))])?;
    step(&[
        "score",
        "--config", p(&fixture("blurbench.conf")),
        "--predictions", p(&fixture("predictions_objdet_cap_aug.json")),
        "--out", p(&out("score")),
    ])?;
    step(&[
        "report",
        "--config", p(&fixture("blurbench.conf")),
        "--scores", p(&out("score").join("scores.csv")),
        "--out", p(&out("report")),
    ])
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path())?;
    pipeline(b.path())?;
    let elapsed = start.elapsed();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    ensure(ta.len() >= 47, || format!("only {} output files", ta.len()))?;
    ensure(ta.keys().eq(tb.keys()), || "runs wrote different file sets".into())?;
    for (name, bytes) in &ta {
        ensure(tb[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    for expected in ["plan/manifest.jsonl", "score/scores.csv", "report/degradation.md", "report/subsets.md"] {
        ensure(ta.contains_key(expected), || format!("{expected} missing"))?;
    }
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{} files identical across runs, {elapsed:.2?} for both", ta.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("convolution oracle equivalence", convolution_equivalence),
        ("constant preservation", constant_preservation),
        ("CIDEr-D oracle equivalence", cider_oracle_equivalence),
        ("CIDEr-D boundary values", cider_boundaries),
        ("schedule convergence", schedule_convergence),
        ("score table reproduction", table_reproduction),
        ("histogram conservation", histogram_conservation),
        ("ingest round-trip", ingest_roundtrip),
        ("end-to-end smoke", end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

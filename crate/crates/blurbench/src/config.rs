//! Run configuration: command-line flags over a config file over the
//! `BLURBENCH_SEED` environment variable over built-in defaults.
//!
//! The config file is flat `key = value` text; `#` starts a comment.
//!
//! ```text
//! seed = 7
//! technique = ObjDet-Cap-Aug
//! out = results
//! format = csv
//! bin_width = 10
//! levels = MB0,MB2
//! cider_sigma = 6.0
//! dataset = data/captions_val.json
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use blurbench_core::cider::CiderConfig;
use blurbench_core::report::{Format, DEFAULT_BIN_WIDTH};
use blurbench_core::schedule::Technique;
use blurbench_core::BlurLevel;

pub const SEED_ENV: &str = "BLURBENCH_SEED";
pub const DEFAULT_SEED: u64 = 0;

/// Keys that hold input paths.
pub const PATH_KEYS: [&str; 6] = ["dataset", "predictions", "flags", "features", "keys", "scores"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    Flag,
    ConfigFile,
    Environment,
    Default,
}

/// One configuration layer; unset values fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub seed: Option<u64>,
    pub technique: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub bin_width: Option<u64>,
    pub levels: Option<Vec<BlurLevel>>,
    pub cider_max_n: Option<usize>,
    pub cider_sigma: Option<f64>,
    pub cider_scale: Option<f64>,
    pub paths: BTreeMap<String, PathBuf>,
}

pub fn parse_format(s: &str) -> anyhow::Result<Format> {
    match s.trim().to_ascii_lowercase().as_str() {
        "markdown" | "md" => Ok(Format::Markdown),
        "csv" => Ok(Format::Csv),
        other => bail!("unknown format `{other}` (expected markdown or csv)"),
    }
}

pub fn parse_levels(s: &str) -> anyhow::Result<Vec<BlurLevel>> {
    let mut levels = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.parse::<BlurLevel>().map_err(anyhow::Error::from))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if levels.is_empty() {
        bail!("no blur levels given");
    }
    levels.sort();
    levels.dedup();
    Ok(levels)
}

impl Settings {
    /// Parses config-file text. Relative paths resolve against `base`.
    pub fn parse_file(text: &str, base: &Path) -> anyhow::Result<Settings> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("config line {lineno}: expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = || format!("config line {lineno}: bad value for `{key}`");
            match key {
                "seed" => s.seed = Some(value.parse().with_context(ctx)?),
                "technique" => s.technique = Some(value.to_owned()),
                "out" => s.out = Some(base.join(value)),
                "format" => s.format = Some(parse_format(value).with_context(ctx)?),
                "bin_width" => s.bin_width = Some(value.parse().with_context(ctx)?),
                "levels" => s.levels = Some(parse_levels(value).with_context(ctx)?),
                "cider_max_n" => s.cider_max_n = Some(value.parse().with_context(ctx)?),
                "cider_sigma" => s.cider_sigma = Some(value.parse().with_context(ctx)?),
                "cider_scale" => s.cider_scale = Some(value.parse().with_context(ctx)?),
                k if PATH_KEYS.contains(&k) => {
                    s.paths.insert(k.to_owned(), base.join(value));
                }
                other => bail!("config line {lineno}: unknown key `{other}`"),
            }
        }
        Ok(s)
    }

    pub fn load_file(path: &Path) -> anyhow::Result<Settings> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse_file(&text, base).with_context(|| format!("in {}", path.display()))
    }

    /// `self` wins wherever it is set.
    pub fn over(self, lower: Settings) -> Settings {
        let mut paths = lower.paths;
        paths.extend(self.paths);
        Settings {
            seed: self.seed.or(lower.seed),
            technique: self.technique.or(lower.technique),
            out: self.out.or(lower.out),
            format: self.format.or(lower.format),
            bin_width: self.bin_width.or(lower.bin_width),
            levels: self.levels.or(lower.levels),
            cider_max_n: self.cider_max_n.or(lower.cider_max_n),
            cider_sigma: self.cider_sigma.or(lower.cider_sigma),
            cider_scale: self.cider_scale.or(lower.cider_scale),
            paths,
        }
    }
}

/// Fully resolved configuration for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub seed_source: SeedSource,
    pub technique: Option<String>,
    pub out: PathBuf,
    pub format: Format,
    pub bin_width: u64,
    pub levels: Vec<BlurLevel>,
    pub cider: CiderConfig,
    pub paths: BTreeMap<String, PathBuf>,
}

impl RunConfig {
    pub fn resolve(flags: Settings, file: Settings, env_seed: Option<&str>) -> anyhow::Result<RunConfig> {
        let (seed, seed_source) = match (flags.seed, file.seed, env_seed) {
            (Some(s), _, _) => (s, SeedSource::Flag),
            (None, Some(s), _) => (s, SeedSource::ConfigFile),
            (None, None, Some(v)) => (
                v.trim()
                    .parse()
                    .with_context(|| format!("{SEED_ENV}=`{v}` is not a 64-bit unsigned integer"))?,
                SeedSource::Environment,
            ),
            (None, None, None) => (DEFAULT_SEED, SeedSource::Default),
        };
        let merged = flags.over(file);
        let defaults = CiderConfig::default();
        let cider = CiderConfig {
            max_n: merged.cider_max_n.unwrap_or(defaults.max_n),
            sigma: merged.cider_sigma.unwrap_or(defaults.sigma),
            scale: merged.cider_scale.unwrap_or(defaults.scale),
        };
        if !cider.is_valid() {
            bail!("invalid CIDEr-D settings: max_n >= 1, sigma > 0 and scale > 0 required");
        }
        let bin_width = merged.bin_width.unwrap_or(DEFAULT_BIN_WIDTH);
        if bin_width == 0 {
            bail!("bin_width must be at least 1");
        }
        if let Some(t) = &merged.technique {
            t.parse::<Technique>().map_err(anyhow::Error::msg)?;
        }
        Ok(RunConfig {
            seed,
            seed_source,
            technique: merged.technique,
            out: merged.out.unwrap_or_else(|| PathBuf::from("out")),
            format: merged.format.unwrap_or(Format::Markdown),
            bin_width,
            levels: merged.levels.unwrap_or_else(|| BlurLevel::ALL.to_vec()),
            cider,
            paths: merged.paths,
        })
    }

    pub fn path(&self, key: &str) -> Option<&Path> {
        self.paths.get(key).map(PathBuf::as_path)
    }

    pub fn technique(&self) -> Option<Technique> {
        self.technique.as_deref().and_then(|t| t.parse().ok())
    }
}

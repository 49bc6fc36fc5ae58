//! Augmentation schedules and seeded, per-sample blur assignments.
//!
//! Each training technique pairs a detector-stage schedule with a
//! captioner-stage schedule. A sample's level at a stage is a pure function
//! of `(seed, stage, sample_key)`:
//!
//! 1. `stage_seed = mix64(seed + STAGE_SALT[stage])` (wrapping add).
//! 2. `h = mix64(fnv1a64(key_bytes, FNV_OFFSET ^ mix64(stage_seed)))`.
//! 3. `u = (h >> 11) * 2^-53`, uniform on `[0, 1)`.
//! 4. The level is the first level with non-zero probability whose
//!    cumulative probability is `>= u`, so a draw landing exactly on a
//!    boundary goes to the lower level. Zero-probability levels are never
//!    returned.
//!
//! `mix64` is the SplitMix64 finalizer and `fnv1a64` is 64-bit FNV-1a.
//! [`sample_level`] applies steps 2 to 4 to a caller-provided seed directly.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::imaging::BlurLevel;
use crate::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Probability distribution over the four blur levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    probs: [f64; 4],
}

impl Schedule {
    /// No augmentation: every sample stays at MB0.
    pub const CLEAN: Schedule = Schedule {
        probs: [1.0, 0.0, 0.0, 0.0],
    };
    /// Detector-stage augmentation; MB3 is never used.
    pub const DETECTOR: Schedule = Schedule {
        probs: [0.8, 0.1, 0.1, 0.0],
    };
    /// Captioner-stage augmentation.
    pub const CAPTIONER: Schedule = Schedule {
        probs: [0.5, 0.2, 0.2, 0.1],
    };

    pub fn probs(&self) -> [f64; 4] {
        self.probs
    }

    pub fn prob(&self, level: BlurLevel) -> f64 {
        self.probs[level.index()]
    }
}

/// Validates and normalizes a probability vector indexed MB0..MB3.
///
/// Entries must be finite and non-negative and sum to 1 within `1e-9`. They
/// are stored as given; [`invert_cdf`] absorbs the residual.
pub fn validate_schedule(probs: [f64; 4]) -> Result<Schedule> {
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::NegativeProbability {
                level: BlurLevel::ALL[i],
                value: p,
            });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::ProbabilitySum(sum));
    }
    Ok(Schedule { probs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Detector,
    Captioner,
}

impl Stage {
    pub const ALL: [Stage; 2] = [Stage::Detector, Stage::Captioner];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Detector => "detector",
            Stage::Captioner => "captioner",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Stage::Detector => 0x6465_7465_6374_6f72, // "detector"
            Stage::Captioner => 0x6361_7074_696f_6e65, // "captione"
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s.trim() {
            "detector" => Ok(Stage::Detector),
            "captioner" => Ok(Stage::Captioner),
            other => Err(alloc::format!("unknown stage `{other}`")),
        }
    }
}

/// The four training techniques.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Technique {
    NoAug,
    ObjDetAug,
    CapAug,
    ObjDetCapAug,
}

impl Technique {
    /// In reporting order.
    pub const ALL: [Technique; 4] = [
        Technique::NoAug,
        Technique::ObjDetAug,
        Technique::CapAug,
        Technique::ObjDetCapAug,
    ];

    /// Display name, e.g. `ObjDet-Cap-Aug`.
    pub fn name(self) -> &'static str {
        match self {
            Technique::NoAug => "No-Aug",
            Technique::ObjDetAug => "ObjDet-Aug",
            Technique::CapAug => "Cap-Aug",
            Technique::ObjDetCapAug => "ObjDet-Cap-Aug",
        }
    }

    pub fn plan(self) -> TechniquePlan {
        let (detector, captioner) = match self {
            Technique::NoAug => (Schedule::CLEAN, Schedule::CLEAN),
            Technique::ObjDetAug => (Schedule::DETECTOR, Schedule::CLEAN),
            Technique::CapAug => (Schedule::CLEAN, Schedule::CAPTIONER),
            Technique::ObjDetCapAug => (Schedule::DETECTOR, Schedule::CAPTIONER),
        };
        TechniquePlan {
            technique: self,
            detector,
            captioner,
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = String;

    /// Accepts the display name or its unhyphenated form, case-insensitively
    /// (`ObjDet-Cap-Aug`, `objdetcapaug`, `objdet_cap_aug`).
    fn from_str(s: &str) -> core::result::Result<Self, String> {
        let squash = |t: &str| -> String {
            t.chars()
                .filter(|c| !matches!(c, '-' | '_' | ' '))
                .flat_map(char::to_lowercase)
                .collect()
        };
        let wanted = squash(s);
        Technique::ALL
            .into_iter()
            .find(|t| squash(t.name()) == wanted)
            .ok_or_else(|| alloc::format!("unknown technique `{}`", s.trim()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechniquePlan {
    pub technique: Technique,
    pub detector: Schedule,
    pub captioner: Schedule,
}

impl TechniquePlan {
    pub fn schedule(&self, stage: Stage) -> &Schedule {
        match stage {
            Stage::Detector => &self.detector,
            Stage::Captioner => &self.captioner,
        }
    }
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of `key` under `seed`.
pub fn key_hash(key: &str, seed: u64) -> u64 {
    let mut h = FNV_OFFSET ^ mix64(seed);
    for &b in key.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    mix64(h)
}

/// Maps a key to a uniform draw on `[0, 1)`.
pub fn unit_draw(key: &str, seed: u64) -> f64 {
    (key_hash(key, seed) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverts the schedule CDF at `u`.
pub fn invert_cdf(schedule: &Schedule, u: f64) -> BlurLevel {
    let mut cumulative = 0.0;
    let mut last = BlurLevel::Mb0;
    for level in BlurLevel::ALL {
        let p = schedule.prob(level);
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last = level;
        if u <= cumulative {
            return level;
        }
    }
    // Rounding can leave the final cumulative sum a hair under 1.
    last
}

pub fn sample_level(sample_key: &str, schedule: &Schedule, seed: u64) -> BlurLevel {
    invert_cdf(schedule, unit_draw(sample_key, seed))
}

/// Seed used for a given stage, so the two stages draw independently.
pub fn stage_seed(seed: u64, stage: Stage) -> u64 {
    mix64(seed.wrapping_add(stage.salt()))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ManifestEntry {
    pub sample_key: String,
    pub stage: Stage,
    pub level: BlurLevel,
}

/// Per-sample, per-stage blur assignments for one technique and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationManifest {
    pub seed: u64,
    pub plan: TechniquePlan,
    /// Sorted by `(sample_key, stage)`.
    pub entries: Vec<ManifestEntry>,
}

/// Assigns a level to every key at both stages.
pub fn plan_dataset<S: AsRef<str>>(
    sample_keys: &[S],
    plan: TechniquePlan,
    seed: u64,
) -> Result<AugmentationManifest> {
    let mut keys: Vec<&str> = sample_keys.iter().map(AsRef::as_ref).collect();
    keys.sort_unstable();
    if let Some(pair) = keys.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateKey(pair[0].into()));
    }
    let seeds = Stage::ALL.map(|s| stage_seed(seed, s));
    let mut entries = Vec::with_capacity(keys.len() * 2);
    for key in keys {
        for (stage, &sseed) in Stage::ALL.iter().zip(&seeds) {
            entries.push(ManifestEntry {
                sample_key: key.into(),
                stage: *stage,
                level: sample_level(key, plan.schedule(*stage), sseed),
            });
        }
    }
    Ok(AugmentationManifest {
        seed,
        plan,
        entries,
    })
}

impl AugmentationManifest {
    /// Level counts for one stage, indexed MB0..MB3.
    pub fn level_counts(&self, stage: Stage) -> [u64; 4] {
        let mut counts = [0u64; 4];
        for e in self.entries.iter().filter(|e| e.stage == stage) {
            counts[e.level.index()] += 1;
        }
        counts
    }
}

/// Fraction of a stage's entries at each level.
pub fn empirical_frequencies(manifest: &AugmentationManifest, stage: Stage) -> Result<[f64; 4]> {
    let counts = manifest.level_counts(stage);
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyManifest);
    }
    Ok(counts.map(|c| c as f64 / total as f64))
}

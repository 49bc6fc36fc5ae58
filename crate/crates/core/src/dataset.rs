//! Caption datasets, model predictions, blur-flag annotations and
//! region-feature counts.
//!
//! Image ids are opaque strings: COCO uses integers, VizWiz uses file names.
//! Captions are stored verbatim; tokenization happens in [`crate::cider`].

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::imaging::BlurLevel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageEntry {
    pub image_id: String,
    pub file_name: String,
}

/// A split of images with their reference captions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    split_name: String,
    images: Vec<ImageEntry>,
    references: BTreeMap<String, Vec<String>>,
}

impl Dataset {
    /// Builds a dataset, checking that every reference belongs to a listed
    /// image and every image has at least one reference.
    pub fn new(
        split_name: impl Into<String>,
        images: Vec<ImageEntry>,
        references: BTreeMap<String, Vec<String>>,
    ) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for img in &images {
            if seen.insert(img.image_id.as_str(), ()).is_some() {
                return Err(Error::DuplicateKey(img.image_id.clone()));
            }
        }
        if let Some(id) = references.keys().find(|id| !seen.contains_key(id.as_str())) {
            return Err(Error::UnknownImage(id.clone()));
        }
        if let Some(img) = images
            .iter()
            .find(|img| references.get(&img.image_id).is_none_or(Vec::is_empty))
        {
            return Err(Error::MissingReferences(img.image_id.clone()));
        }
        Ok(Self {
            split_name: split_name.into(),
            images,
            references,
        })
    }

    pub fn split_name(&self) -> &str {
        &self.split_name
    }

    /// Images in source order.
    pub fn images(&self) -> &[ImageEntry] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn references(&self, image_id: &str) -> Option<&[String]> {
        self.references.get(image_id).map(Vec::as_slice)
    }

    /// `(image, references)` pairs in image order.
    pub fn iter(&self) -> impl Iterator<Item = (&ImageEntry, &[String])> {
        self.images
            .iter()
            .map(|img| (img, self.references[&img.image_id].as_slice()))
    }
}

/// One candidate caption per `(image_id, level)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionSet {
    candidates: BTreeMap<(String, BlurLevel), String>,
}

impl PredictionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        image_id: impl Into<String>,
        level: BlurLevel,
        caption: impl Into<String>,
    ) -> Result<()> {
        let image_id = image_id.into();
        let key = (image_id, level);
        if self.candidates.contains_key(&key) {
            return Err(Error::DuplicatePrediction {
                image_id: key.0,
                level,
            });
        }
        self.candidates.insert(key, caption.into());
        Ok(())
    }

    pub fn get(&self, image_id: &str, level: BlurLevel) -> Option<&str> {
        // BTreeMap<(String, _)> cannot be probed with a borrowed tuple.
        self.candidates
            .get(&(String::from(image_id), level))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Levels that have at least one candidate, ascending.
    pub fn levels(&self) -> Vec<BlurLevel> {
        let mut present = [false; 4];
        for (_, level) in self.candidates.keys() {
            present[level.index()] = true;
        }
        BlurLevel::ALL
            .into_iter()
            .filter(|l| present[l.index()])
            .collect()
    }

    /// `(image_id, level, caption)` sorted by id then level.
    pub fn iter(&self) -> impl Iterator<Item = (&str, BlurLevel, &str)> {
        self.candidates
            .iter()
            .map(|((id, level), c)| (id.as_str(), *level, c.as_str()))
    }

    /// Dataset images with no candidate at `level`, in dataset order.
    pub fn missing(&self, ds: &Dataset, level: BlurLevel) -> Vec<String> {
        ds.images()
            .iter()
            .filter(|img| self.get(&img.image_id, level).is_none())
            .map(|img| img.image_id.clone())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlurFlag {
    WithBlur,
    NoBlur,
}

impl BlurFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            BlurFlag::WithBlur => "with_blur",
            BlurFlag::NoBlur => "no_blur",
        }
    }
}

impl fmt::Display for BlurFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlurFlag {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s.trim() {
            "with_blur" => Ok(BlurFlag::WithBlur),
            "no_blur" => Ok(BlurFlag::NoBlur),
            other => Err(alloc::format!("unknown blur flag `{other}`")),
        }
    }
}

/// Crowd-sourced per-image blur flags.
pub type BlurFlagAnnotation = BTreeMap<String, BlurFlag>;

/// Sub-dataset of the images carrying `flag`, in original order.
pub fn filter_by_blur_flag(ds: &Dataset, ann: &BlurFlagAnnotation, flag: BlurFlag) -> Result<Dataset> {
    let mut images = Vec::new();
    let mut references = BTreeMap::new();
    for (img, refs) in ds.iter() {
        let f = ann
            .get(&img.image_id)
            .ok_or_else(|| Error::MissingFlag(img.image_id.clone()))?;
        if *f == flag {
            images.push(img.clone());
            references.insert(img.image_id.clone(), refs.to_vec());
        }
    }
    let mut name = ds.split_name.clone();
    name.push(':');
    name.push_str(flag.as_str());
    Ok(Dataset {
        split_name: name,
        images,
        references,
    })
}

/// Number of region-proposal features the detector emitted for one image.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureCountRecord {
    pub image_id: String,
    pub level: BlurLevel,
    pub count: u64,
}

//! Pure algorithms for motion-blur robustness studies of image captioning
//! pipelines.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem (raster codecs, JSON/CSV parsing, the command line) lives in the
//! companion `blurbench` crate.
//!
//! * [`imaging`]: box-kernel motion blur at the four intensity levels.
//! * [`schedule`]: per-stage augmentation schedules and seeded manifests.
//! * [`dataset`]: caption datasets, predictions, blur flags, feature counts.
//! * [`cider`]: the CIDEr-D captioning metric.
//! * [`report`]: score tables, degradation deltas and feature histograms.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cider;
pub mod dataset;
mod error;
pub mod imaging;
pub mod report;
pub mod schedule;

pub use error::Error;
pub use imaging::{BlurKernel, BlurLevel, Image};

pub type Result<T, E = Error> = core::result::Result<T, E>;

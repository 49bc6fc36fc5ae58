//! CIDEr-D caption scoring.
//!
//! For each n-gram order `n = 1..=max_n`, a sentence becomes a vector of
//! `count(g) * idf(g)` with `idf(g) = ln(|I| / max(1, df(g)))`, where `df`
//! counts the corpus images whose references contain `g`. Against each
//! reference the candidate scores
//!
//! ```text
//! sum_g min(c_g, r_g) * r_g / (|c| * |r|) * exp(-(len_c - len_r)^2 / (2 sigma^2))
//! ```
//!
//! which is averaged over references, then over `n`, and multiplied by
//! `scale`. Terms with a zero-norm vector contribute 0.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::{Dataset, PredictionSet};
use crate::imaging::BlurLevel;
use crate::{Error, Result};

/// Lowercased word tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercases, turns every non-alphanumeric character into a space and
/// splits on whitespace.
pub fn tokenize(text: &str) -> TokenSeq {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    TokenSeq(cleaned.split_whitespace().map(String::from).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiderConfig {
    pub max_n: usize,
    /// Width of the Gaussian length penalty.
    pub sigma: f64,
    pub scale: f64,
}

impl Default for CiderConfig {
    fn default() -> Self {
        Self {
            max_n: 4,
            sigma: 6.0,
            scale: 10.0,
        }
    }
}

impl CiderConfig {
    pub fn is_valid(&self) -> bool {
        self.max_n >= 1 && self.sigma > 0.0 && self.scale > 0.0
    }
}

/// N-gram occurrence counts for orders `1..=max_n`. An n-gram is keyed by
/// its tokens joined with single spaces (tokens never contain whitespace).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramCounts {
    orders: Vec<BTreeMap<String, u32>>,
}

impl NGramCounts {
    pub fn max_n(&self) -> usize {
        self.orders.len()
    }

    /// Counts for order `n` (1-based).
    pub fn order(&self, n: usize) -> &BTreeMap<String, u32> {
        &self.orders[n - 1]
    }
}

pub fn ngram_counts(seq: &TokenSeq, max_n: usize) -> NGramCounts {
    let orders = (1..=max_n)
        .map(|n| {
            let mut counts = BTreeMap::new();
            for window in seq.0.windows(n) {
                *counts.entry(window.join(" ")).or_insert(0) += 1;
            }
            counts
        })
        .collect();
    NGramCounts { orders }
}

/// Corpus document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    corpus_size: usize,
    df: Vec<BTreeMap<String, u32>>,
}

impl IdfTable {
    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn max_n(&self) -> usize {
        self.df.len()
    }

    /// Number of images whose references contain `gram` (order `n`).
    pub fn df(&self, n: usize, gram: &str) -> u32 {
        self.df[n - 1].get(gram).copied().unwrap_or(0)
    }

    pub fn idf(&self, n: usize, gram: &str) -> f64 {
        let df = self.df(n, gram).max(1) as f64;
        libm::log(self.corpus_size as f64) - libm::log(df)
    }

    /// Builds the table from one reference set per image.
    pub fn from_reference_sets<'a, I, R>(sets: I, max_n: usize) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = &'a str>,
    {
        let mut df: Vec<BTreeMap<String, u32>> = (0..max_n).map(|_| BTreeMap::new()).collect();
        let mut corpus_size = 0;
        for refs in sets {
            corpus_size += 1;
            let mut seen: Vec<BTreeMap<String, ()>> = (0..max_n).map(|_| BTreeMap::new()).collect();
            for r in refs {
                let counts = ngram_counts(&tokenize(r), max_n);
                for (seen_n, order) in seen.iter_mut().zip(&counts.orders) {
                    seen_n.extend(order.keys().map(|g| (g.clone(), ())));
                }
            }
            for (df_n, seen_n) in df.iter_mut().zip(seen) {
                for (g, ()) in seen_n {
                    *df_n.entry(g).or_insert(0) += 1;
                }
            }
        }
        if corpus_size == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { corpus_size, df })
    }
}

pub fn build_idf(ds: &Dataset, max_n: usize) -> Result<IdfTable> {
    IdfTable::from_reference_sets(
        ds.iter().map(|(_, refs)| refs.iter().map(String::as_str)),
        max_n,
    )
}

/// idf-weighted n-gram vectors of one sentence.
struct TfIdf {
    weights: Vec<BTreeMap<String, f64>>,
    norms: Vec<f64>,
    length: usize,
}

impl TfIdf {
    fn new(seq: &TokenSeq, idf: &IdfTable, max_n: usize) -> Self {
        let counts = ngram_counts(seq, max_n);
        let mut weights = Vec::with_capacity(max_n);
        let mut norms = Vec::with_capacity(max_n);
        for (i, order) in counts.orders.into_iter().enumerate() {
            let w: BTreeMap<String, f64> = order
                .into_iter()
                .map(|(g, c)| {
                    let v = c as f64 * idf.idf(i + 1, &g);
                    (g, v)
                })
                .collect();
            norms.push(libm::sqrt(w.values().map(|v| v * v).sum()));
            weights.push(w);
        }
        Self {
            weights,
            norms,
            length: seq.len(),
        }
    }

    /// Per-order similarity to `reference`, length penalty included.
    fn similarity(&self, reference: &TfIdf, sigma: f64) -> Vec<f64> {
        let delta = self.length as f64 - reference.length as f64;
        let penalty = libm::exp(-(delta * delta) / (2.0 * sigma * sigma));
        self.weights
            .iter()
            .zip(&reference.weights)
            .enumerate()
            .map(|(i, (cand, refw))| {
                let denom = self.norms[i] * reference.norms[i];
                if denom == 0.0 {
                    return 0.0;
                }
                let clipped: f64 = cand
                    .iter()
                    .filter_map(|(g, &c)| refw.get(g).map(|&r| c.min(r) * r))
                    .sum();
                clipped / denom * penalty
            })
            .collect()
    }
}

/// CIDEr-D of one candidate against its references.
pub fn cider_d(candidate: &TokenSeq, refs: &[TokenSeq], idf: &IdfTable, cfg: &CiderConfig) -> Result<f64> {
    if refs.is_empty() {
        return Err(Error::EmptyReferences);
    }
    let max_n = cfg.max_n.min(idf.max_n());
    let cand = TfIdf::new(candidate, idf, max_n);
    let mut per_order = alloc::vec![0.0; max_n];
    for r in refs {
        let rv = TfIdf::new(r, idf, max_n);
        for (acc, s) in per_order.iter_mut().zip(cand.similarity(&rv, cfg.sigma)) {
            *acc += s;
        }
    }
    let mean_over_n = per_order.iter().sum::<f64>() / max_n as f64;
    Ok(mean_over_n / refs.len() as f64 * cfg.scale)
}

/// Per-image CIDEr-D at `level`, in dataset order, with the idf table built
/// from the dataset's own references.
pub fn per_image_cider_d(
    preds: &PredictionSet,
    ds: &Dataset,
    level: BlurLevel,
    cfg: &CiderConfig,
) -> Result<Vec<(String, f64)>> {
    if let Some(id) = preds.missing(ds, level).into_iter().next() {
        return Err(Error::MissingPrediction { image_id: id, level });
    }
    let idf = build_idf(ds, cfg.max_n)?;
    ds.iter()
        .map(|(img, refs)| {
            let cand = tokenize(preds.get(&img.image_id, level).unwrap_or_default());
            let refs: Vec<TokenSeq> = refs.iter().map(|r| tokenize(r)).collect();
            Ok((img.image_id.clone(), cider_d(&cand, &refs, &idf, cfg)?))
        })
        .collect()
}

/// Mean per-image CIDEr-D over the dataset at `level`.
pub fn corpus_cider_d(preds: &PredictionSet, ds: &Dataset, level: BlurLevel, cfg: &CiderConfig) -> Result<f64> {
    let scores = per_image_cider_d(preds, ds, level, cfg)?;
    Ok(scores.iter().map(|(_, s)| s).sum::<f64>() / scores.len() as f64)
}

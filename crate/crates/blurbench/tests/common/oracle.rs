//! Straight-from-the-formula CIDEr-D, written without the library's data
//! structures: n-grams are token vectors, documents are scanned linearly,
//! and nothing is cached between calls.

pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn grams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].to_vec()).collect()
}

fn occurrences(tokens: &[String], n: usize, g: &[String]) -> usize {
    grams(tokens, n).iter().filter(|x| x.as_slice() == g).count()
}

/// Number of images (reference sets) with `g` in at least one reference.
pub fn document_frequency(corpus: &[Vec<String>], n: usize, g: &[String]) -> usize {
    corpus
        .iter()
        .filter(|refs| refs.iter().any(|r| occurrences(&words(r), n, g) > 0))
        .count()
}

fn idf(corpus: &[Vec<String>], n: usize, g: &[String]) -> f64 {
    let df = document_frequency(corpus, n, g).max(1);
    (corpus.len() as f64 / df as f64).ln()
}

fn distinct(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for g in grams(tokens, n) {
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

/// CIDEr-D of `candidate` against `refs`, with document frequencies taken
/// over `corpus` (one reference list per image).
pub fn cider_d(candidate: &str, refs: &[String], corpus: &[Vec<String>], sigma: f64, scale: f64) -> f64 {
    let c = words(candidate);
    let mut total = 0.0;
    for n in 1..=4 {
        let mut sum_over_refs = 0.0;
        for r in refs {
            let rt = words(r);
            let weight = |toks: &[String], g: &[String]| occurrences(toks, n, g) as f64 * idf(corpus, n, g);
            let norm = |toks: &[String]| -> f64 {
                distinct(toks, n)
                    .iter()
                    .map(|g| weight(toks, g).powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            let (nc, nr) = (norm(&c), norm(&rt));
            if nc == 0.0 || nr == 0.0 {
                continue;
            }
            let numer: f64 = distinct(&c, n)
                .iter()
                .map(|g| weight(&c, g).min(weight(&rt, g)) * weight(&rt, g))
                .sum();
            let d = c.len() as f64 - rt.len() as f64;
            sum_over_refs += numer / (nc * nr) * (-(d * d) / (2.0 * sigma * sigma)).exp();
        }
        total += sum_over_refs / refs.len() as f64;
    }
    total / 4.0 * scale
}

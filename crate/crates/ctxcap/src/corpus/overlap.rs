//! Caption/context overlap measurement and the movie-level filter.
//!
//! Overlap counts caption token *types* (stopwords, special tokens and pure
//! punctuation excluded) that occur anywhere in the context token set. This
//! is the reconstruction choice behind the corpus split thresholds.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use super::tokenize::{is_punctuation, is_special_token, is_stopword};

/// Fraction of caption content-token types present in the context token set.
/// Empty or all-stopword captions yield 0.
pub fn compute_overlap(caption: &[String], context: &[String]) -> f64 {
    let content: HashSet<&String> = caption
        .iter()
        .filter(|t| !is_stopword(t) && !is_special_token(t) && !is_punctuation(t))
        .collect();
    if content.is_empty() {
        return 0.0;
    }
    let ctx: HashSet<&String> = context.iter().collect();
    let hits = content.iter().filter(|t| ctx.contains(**t)).count();
    hits as f64 / content.len() as f64
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MovieOverlap {
    pub movie: String,
    pub mean_overlap: f64,
    pub clips: usize,
    pub kept: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OverlapReport {
    pub threshold: f64,
    pub movies: Vec<MovieOverlap>,
}

/// Keep the movies whose mean caption/context overlap is at least
/// `threshold`; returns the filtered manifest and a per-movie report.
pub fn filter_movies(manifest: &DatasetManifest, threshold: f64) -> (DatasetManifest, OverlapReport) {
    let mut per_movie: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for rec in &manifest.records {
        let o = compute_overlap(&rec.caption_tokens, &rec.context_tokens);
        let e = per_movie.entry(rec.movie.as_str()).or_insert((0.0, 0));
        e.0 += o;
        e.1 += 1;
    }
    let movies: Vec<MovieOverlap> = per_movie
        .iter()
        .map(|(movie, (sum, n))| {
            let mean = sum / *n as f64;
            MovieOverlap {
                movie: movie.to_string(),
                mean_overlap: mean,
                clips: *n,
                kept: mean >= threshold,
            }
        })
        .collect();
    let keep: HashSet<&str> = movies
        .iter()
        .filter(|m| m.kept)
        .map(|m| m.movie.as_str())
        .collect();
    let filtered = DatasetManifest {
        records: manifest
            .records
            .iter()
            .filter(|r| keep.contains(r.movie.as_str()))
            .cloned()
            .collect(),
    };
    (
        filtered,
        OverlapReport {
            threshold,
            movies,
        },
    )
}

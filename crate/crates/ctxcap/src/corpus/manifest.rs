//! Dataset manifest (one JSON record per line) and the binary feature file
//! format: magic `CTXF`, u32 rank (always 2), u32 dims, then row-major
//! little-endian f32 payload.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One training instance: a clip's feature file, its contextual text, the
/// reference caption and the movie's character-name set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub clip_id: String,
    pub movie: String,
    pub feature_path: String,
    /// Provenance of the context (scene span or article id).
    pub context_source: String,
    pub context_tokens: Vec<String>,
    pub caption_tokens: Vec<String>,
    pub split: Split,
    /// Character names for the movie, lowercased and sorted.
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub records: Vec<SampleRecord>,
}

impl DatasetManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for rec in &self.records {
            out.push_str(&serde_json::to_string(rec)?);
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut records = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SampleRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::ManifestRecord {
                    index: i,
                    message: e.to_string(),
                })?;
            records.push(rec);
        }
        Ok(DatasetManifest { records })
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Check that every referenced feature file exists under `base`.
    pub fn validate_features(&self, base: &Path) -> Result<()> {
        for rec in &self.records {
            let p = base.join(&rec.feature_path);
            if !p.exists() {
                return Err(CorpusError::MissingFile(p.display().to_string()));
            }
        }
        Ok(())
    }
}

/// Assign train/val/test splits movie-by-movie so a movie never straddles
/// splits. Movies are processed in descending clip count (seeded shuffle for
/// ties) and greedily assigned to the split furthest below its quota.
pub fn assign_splits(
    records: &mut [SampleRecord],
    ratios: (f64, f64, f64),
    seed: u64,
) -> BTreeMap<String, Split> {
    let mut per_movie: BTreeMap<String, usize> = BTreeMap::new();
    for r in records.iter() {
        *per_movie.entry(r.movie.clone()).or_insert(0) += 1;
    }
    let mut movies: Vec<(String, usize)> = per_movie.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    movies.shuffle(&mut rng);
    movies.sort_by(|a, b| b.1.cmp(&a.1));

    let total: usize = movies.iter().map(|m| m.1).sum();
    let targets = [
        ratios.0 * total as f64,
        ratios.1 * total as f64,
        ratios.2 * total as f64,
    ];
    let mut filled = [0usize; 3];
    let splits = [Split::Train, Split::Val, Split::Test];
    let mut assignment = BTreeMap::new();
    for (movie, clips) in movies {
        let pick = (0..3)
            .max_by(|&a, &b| {
                let da = targets[a] - filled[a] as f64;
                let db = targets[b] - filled[b] as f64;
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        filled[pick] += clips;
        assignment.insert(movie, splits[pick]);
    }
    for r in records.iter_mut() {
        r.split = assignment[&r.movie];
    }
    assignment
}

const FEATURE_MAGIC: &[u8; 4] = b"CTXF";

/// Write a frame-feature matrix (one row per frame), 32-bit little-endian.
pub fn write_features(path: &Path, rows: &[Vec<f32>]) -> Result<()> {
    let cols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut buf = Vec::with_capacity(16 + rows.len() * cols * 4);
    buf.extend_from_slice(FEATURE_MAGIC);
    buf.extend_from_slice(&2u32.to_le_bytes());
    buf.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(cols as u32).to_le_bytes());
    for row in rows {
        if row.len() != cols {
            return Err(CorpusError::FeatureFormat {
                path: path.display().to_string(),
                message: "ragged feature rows".into(),
            });
        }
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<Vec<Vec<f32>>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let err = |message: &str| CorpusError::FeatureFormat {
        path: path.display().to_string(),
        message: message.to_string(),
    };
    if bytes.len() < 16 || &bytes[0..4] != FEATURE_MAGIC {
        return Err(err("missing CTXF magic"));
    }
    let rank = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if rank != 2 {
        return Err(err(&format!("rank {rank}, expected 2")));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = 16 + rows * cols * 4;
    if bytes.len() != expected {
        return Err(err(&format!(
            "payload of {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(rows);
    let mut off = 16;
    for _ in 0..rows {
        let mut row = Vec::with_capacity(cols);
        for _ in 0..cols {
            row.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        out.push(row);
    }
    Ok(out)
}

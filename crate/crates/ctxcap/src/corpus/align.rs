//! Coarse `<script scene, video time>` alignment from scripted dialogue
//! matched against timed subtitle cues.
//!
//! The mapping is built in three rounds:
//! 1. exact matches of normalized dialogue lines anchor scenes to cue times;
//! 2. fuzzy matches (token-overlap ratio above a threshold) fill unmapped
//!    scenes lying in the gap between two anchors;
//! 3. scenes still unmapped between two mapped neighbours receive an
//!    interpolated slice of the gap.
//!
//! Scenes before the first or after the last anchor stay unmapped. Accepted
//! intervals are kept monotone non-decreasing in scene order; a match that
//! would run backwards is discarded.

use std::collections::HashSet;

use super::script::ScriptDocument;
use super::srt::SubtitleTrack;
use super::tokenize::{is_punctuation, tokenize, TokenizeMode};

#[derive(Debug, Clone)]
pub struct AlignConfig {
    /// Minimum token-overlap ratio for a round-2 fuzzy match.
    pub fuzzy_threshold: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            fuzzy_threshold: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneAlignment {
    pub interval: Option<(u64, u64)>,
    pub matched_lines: usize,
    pub total_lines: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMap {
    pub scenes: Vec<SceneAlignment>,
    /// Fraction of dialogue lines matched across the whole script.
    pub score: f64,
}

impl AlignmentMap {
    /// Scene index whose interval contains `t_ms`, if any.
    pub fn scene_at(&self, t_ms: u64) -> Option<usize> {
        self.scenes
            .iter()
            .position(|s| matches!(s.interval, Some((a, b)) if a <= t_ms && t_ms <= b))
    }
}

fn norm_tokens(text: &str) -> Vec<String> {
    tokenize(text, TokenizeMode::Plain)
        .into_iter()
        .filter(|t| !is_punctuation(t))
        .collect()
}

fn overlap_ratio(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let sa: HashSet<&String> = a.iter().collect();
    let sb: HashSet<&String> = b.iter().collect();
    let inter = sa.intersection(&sb).count();
    inter as f64 / sa.len().max(sb.len()) as f64
}

pub fn align_script_to_time(
    script: &ScriptDocument,
    subs: &SubtitleTrack,
    cfg: &AlignConfig,
) -> AlignmentMap {
    let scene_lines: Vec<Vec<Vec<String>>> = script
        .scenes
        .iter()
        .map(|s| s.dialogues.iter().map(|d| norm_tokens(&d.line)).collect())
        .collect();
    let cue_tokens: Vec<Vec<String>> = subs
        .cues
        .iter()
        .map(|c| norm_tokens(&c.text))
        .collect();

    let n_scenes = script.scenes.len();
    let mut intervals: Vec<Option<(u64, u64)>> = vec![None; n_scenes];
    let mut matched_per_scene = vec![0usize; n_scenes];
    let mut used_cues: HashSet<usize> = HashSet::new();

    // Round 1: exact normalized-line matches.
    let mut last_start: u64 = 0;
    for (si, lines) in scene_lines.iter().enumerate() {
        let mut cue_times: Vec<(u64, u64)> = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let hit = cue_tokens
                .iter()
                .enumerate()
                .find(|(ci, toks)| !used_cues.contains(ci) && *toks == line);
            if let Some((ci, _)) = hit {
                used_cues.insert(ci);
                matched_per_scene[si] += 1;
                cue_times.push((subs.cues[ci].start_ms, subs.cues[ci].end_ms));
            }
        }
        if let Some(interval) = interval_of(&cue_times) {
            if interval.0 >= last_start {
                intervals[si] = Some(interval);
                last_start = interval.0;
            }
        }
    }

    // Round 2: fuzzy matches for scenes strictly between two anchors.
    let anchor_ids: Vec<usize> = (0..n_scenes).filter(|&i| intervals[i].is_some()).collect();
    for (si, lines) in scene_lines.iter().enumerate() {
        if intervals[si].is_some() || lines.is_empty() {
            continue;
        }
        let prev = anchor_ids.iter().rev().find(|&&a| a < si);
        let next = anchor_ids.iter().find(|&&a| a > si);
        let (Some(&prev), Some(&next)) = (prev, next) else {
            continue;
        };
        let window_lo = intervals[prev].unwrap().1;
        let window_hi = intervals[next].unwrap().0;
        let mut cue_times: Vec<(u64, u64)> = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (ci, toks) in cue_tokens.iter().enumerate() {
                if used_cues.contains(&ci) {
                    continue;
                }
                let cue = &subs.cues[ci];
                if cue.start_ms < window_lo || cue.end_ms > window_hi {
                    continue;
                }
                let ratio = overlap_ratio(line, toks);
                if ratio >= cfg.fuzzy_threshold && best.map_or(true, |(_, r)| ratio > r) {
                    best = Some((ci, ratio));
                }
            }
            if let Some((ci, _)) = best {
                used_cues.insert(ci);
                matched_per_scene[si] += 1;
                cue_times.push((subs.cues[ci].start_ms, subs.cues[ci].end_ms));
            }
        }
        if let Some(interval) = interval_of(&cue_times) {
            let prev_start = intervals[..si]
                .iter()
                .rev()
                .flatten()
                .map(|iv| iv.0)
                .next()
                .unwrap_or(0);
            if interval.0 >= prev_start {
                intervals[si] = Some(interval);
            }
        }
    }

    // Round 3: interpolate runs of unmapped scenes between mapped neighbours.
    let mapped: Vec<usize> = (0..n_scenes).filter(|&i| intervals[i].is_some()).collect();
    for pair in mapped.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a <= 1 {
            continue;
        }
        let lo = intervals[a].unwrap().1;
        let hi = intervals[b].unwrap().0.max(lo);
        let k = (b - a - 1) as u64;
        for (offset, si) in (a + 1..b).enumerate() {
            let step = (hi - lo) / k;
            let start = lo + step * offset as u64;
            let end = if offset as u64 == k - 1 {
                hi
            } else {
                lo + step * (offset as u64 + 1)
            };
            intervals[si] = Some((start, end));
        }
    }

    let total_lines: usize = scene_lines.iter().map(|l| l.len()).sum();
    let matched_total: usize = matched_per_scene.iter().sum();
    let score = if total_lines == 0 {
        0.0
    } else {
        matched_total as f64 / total_lines as f64
    };

    AlignmentMap {
        scenes: (0..n_scenes)
            .map(|i| SceneAlignment {
                interval: intervals[i],
                matched_lines: matched_per_scene[i],
                total_lines: scene_lines[i].len(),
            })
            .collect(),
        score,
    }
}

fn interval_of(times: &[(u64, u64)]) -> Option<(u64, u64)> {
    if times.is_empty() {
        return None;
    }
    let start = times.iter().map(|t| t.0).min().unwrap();
    let end = times.iter().map(|t| t.1).max().unwrap();
    Some((start, end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::srt::Cue;
    use crate::corpus::{parse_script, parse_srt, serialize_srt};

    fn fixture_script() -> ScriptDocument {
        parse_script(
            "\
INT. DINER - NIGHT

          JENNY
     You never told me about the war.

          FORREST
     I got shot in the buttocks.

EXT. ROAD - DAY

          FORREST
     I just felt like running.

INT. HOUSE - NIGHT

          JENNY
     Why are you so good to me.
",
        )
        .unwrap()
    }

    /// Subtitles generated verbatim from the script's dialogue lines.
    fn self_subtitles(script: &ScriptDocument) -> SubtitleTrack {
        let mut cues = Vec::new();
        let mut t = 1000u64;
        let mut idx = 1;
        for scene in &script.scenes {
            for d in &scene.dialogues {
                cues.push(Cue {
                    index: idx,
                    start_ms: t,
                    end_ms: t + 1500,
                    text: d.line.clone(),
                });
                idx += 1;
                t += 2000;
            }
        }
        SubtitleTrack { cues }
    }

    #[test]
    fn self_generated_subtitles_align_perfectly() {
        let script = fixture_script();
        let subs = self_subtitles(&script);
        // Round-trip the track through the SRT format on the way in.
        let subs = parse_srt(&serialize_srt(&subs)).unwrap();
        let map = align_script_to_time(&script, &subs, &AlignConfig::default());
        assert_eq!(map.score, 1.0);
        for (scene, sa) in script.scenes.iter().zip(&map.scenes) {
            if !scene.dialogues.is_empty() {
                assert!(sa.interval.is_some());
                assert_eq!(sa.matched_lines, scene.dialogues.len());
            }
        }
        // Intervals are monotone non-decreasing.
        let starts: Vec<u64> = map.scenes.iter().flat_map(|s| s.interval).map(|iv| iv.0).collect();
        assert!(starts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn disjoint_dialogue_scores_zero() {
        let script = fixture_script();
        let subs = SubtitleTrack {
            cues: vec![Cue {
                index: 1,
                start_ms: 0,
                end_ms: 1000,
                text: "completely unrelated words".into(),
            }],
        };
        let map = align_script_to_time(&script, &subs, &AlignConfig::default());
        assert_eq!(map.score, 0.0);
        assert!(map.scenes.iter().all(|s| s.interval.is_none()));
    }

    #[test]
    fn single_match_leaves_neighbours_unmapped() {
        // Only the middle scene's line exists in the subtitles; the first and
        // last scenes lack anchors on both sides, so rounds 2-3 cannot fire.
        let script = fixture_script();
        let subs = SubtitleTrack {
            cues: vec![Cue {
                index: 1,
                start_ms: 5000,
                end_ms: 6000,
                text: "I just felt like running.".into(),
            }],
        };
        let map = align_script_to_time(&script, &subs, &AlignConfig::default());
        assert!(map.scenes[0].interval.is_none());
        assert!(map.scenes[1].interval.is_some());
        assert!(map.scenes[2].interval.is_none());
        assert!((map.score - 0.25).abs() < 1e-12);
    }

    #[test]
    fn interpolation_fills_gap_between_anchors() {
        let script = parse_script(
            "\
INT. A - DAY

          X
     alpha beta gamma.

INT. B - DAY

No dialogue here at all.

INT. C - DAY

          Y
     delta epsilon zeta.
",
        )
        .unwrap();
        let subs = SubtitleTrack {
            cues: vec![
                Cue {
                    index: 1,
                    start_ms: 1000,
                    end_ms: 2000,
                    text: "alpha beta gamma.".into(),
                },
                Cue {
                    index: 2,
                    start_ms: 9000,
                    end_ms: 10000,
                    text: "delta epsilon zeta.".into(),
                },
            ],
        };
        let map = align_script_to_time(&script, &subs, &AlignConfig::default());
        assert_eq!(map.scenes[0].interval, Some((1000, 2000)));
        assert_eq!(map.scenes[1].interval, Some((2000, 9000)));
        assert_eq!(map.scenes[2].interval, Some((9000, 10000)));
        assert_eq!(map.score, 1.0);
    }

    #[test]
    fn fuzzy_round_fills_gaps_between_anchors() {
        let script = parse_script(
            "\
INT. A - DAY

          X
     the quick brown fox jumps.

INT. B - DAY

          Y
     strange words appear here tonight.

INT. C - DAY

          Z
     every good boy does fine.
",
        )
        .unwrap();
        let subs = SubtitleTrack {
            cues: vec![
                Cue {
                    index: 1,
                    start_ms: 1000,
                    end_ms: 2000,
                    text: "the quick brown fox jumps.".into(),
                },
                // 4 of 5 types shared with scene B's line: ratio 0.8.
                Cue {
                    index: 2,
                    start_ms: 4000,
                    end_ms: 5000,
                    text: "strange words appear here now.".into(),
                },
                Cue {
                    index: 3,
                    start_ms: 9000,
                    end_ms: 10000,
                    text: "every good boy does fine.".into(),
                },
            ],
        };
        let map = align_script_to_time(&script, &subs, &AlignConfig::default());
        assert_eq!(map.scenes[1].interval, Some((4000, 5000)));
        assert_eq!(map.score, 1.0);
    }
}

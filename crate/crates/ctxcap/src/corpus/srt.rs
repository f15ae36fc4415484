//! SubRip (`.srt`) subtitle parsing and serialization.

use std::sync::OnceLock;

use regex::Regex;

use super::{CorpusError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cue {
    pub index: u32,
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

/// Parsed subtitle file; cues are kept sorted by start time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubtitleTrack {
    pub cues: Vec<Cue>,
}

impl SubtitleTrack {
    pub fn start_ms(&self) -> u64 {
        self.cues.first().map(|c| c.start_ms).unwrap_or(0)
    }

    pub fn end_ms(&self) -> u64 {
        self.cues.iter().map(|c| c.end_ms).max().unwrap_or(0)
    }
}

fn timestamp_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^(\d{2,}):(\d{2}):(\d{2})[,.](\d{1,3})\s*-->\s*(\d{2,}):(\d{2}):(\d{2})[,.](\d{1,3})$",
        )
        .expect("static regex")
    })
}

fn markup_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[^>]*>|\{[^}]*\}").expect("static regex"))
}

fn ms_of(h: &str, m: &str, s: &str, ms: &str) -> u64 {
    let h: u64 = h.parse().unwrap_or(0);
    let m: u64 = m.parse().unwrap_or(0);
    let s: u64 = s.parse().unwrap_or(0);
    // Fractional part is milliseconds, zero-padded on the right if short.
    let ms_val: u64 = format!("{ms:0<3}").parse().unwrap_or(0);
    ((h * 60 + m) * 60 + s) * 1000 + ms_val
}

/// Parse SRT text into cues sorted by start time. Markup tags (`<i>`,
/// `{\an8}`, ...) are stripped from cue text; whitespace is normalized.
pub fn parse_srt(text: &str) -> Result<SubtitleTrack> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let mut cues = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let index_line = lines[i].trim().trim_start_matches('\u{feff}');
        let index: u32 = index_line.parse().map_err(|_| CorpusError::SrtParse {
            line: i + 1,
            message: format!("expected numeric cue index, got `{index_line}`"),
        })?;
        i += 1;
        let ts_line = lines.get(i).map(|l| l.trim()).unwrap_or("");
        let caps = timestamp_re()
            .captures(ts_line)
            .ok_or_else(|| CorpusError::SrtParse {
                line: i + 1,
                message: format!("malformed timestamp line `{ts_line}`"),
            })?;
        let start_ms = ms_of(&caps[1], &caps[2], &caps[3], &caps[4]);
        let end_ms = ms_of(&caps[5], &caps[6], &caps[7], &caps[8]);
        if start_ms >= end_ms {
            return Err(CorpusError::SrtParse {
                line: i + 1,
                message: format!("cue start {start_ms}ms is not before end {end_ms}ms"),
            });
        }
        i += 1;
        let mut text_lines = Vec::new();
        while i < lines.len() && !lines[i].trim().is_empty() {
            let clean = markup_re().replace_all(lines[i], "");
            let clean = clean.split_whitespace().collect::<Vec<_>>().join(" ");
            if !clean.is_empty() {
                text_lines.push(clean);
            }
            i += 1;
        }
        cues.push(Cue {
            index,
            start_ms,
            end_ms,
            text: text_lines.join("\n"),
        });
    }
    cues.sort_by_key(|c| c.start_ms);
    Ok(SubtitleTrack { cues })
}

/// Render a track back to SRT text. `parse_srt(serialize_srt(t)) == t`.
pub fn serialize_srt(track: &SubtitleTrack) -> String {
    let mut out = String::new();
    for cue in &track.cues {
        out.push_str(&format!(
            "{}\n{} --> {}\n{}\n\n",
            cue.index,
            fmt_ms(cue.start_ms),
            fmt_ms(cue.end_ms),
            cue.text
        ));
    }
    out
}

fn fmt_ms(ms: u64) -> String {
    let h = ms / 3_600_000;
    let m = (ms / 60_000) % 60;
    let s = (ms / 1000) % 60;
    let frac = ms % 1000;
    format!("{h:02}:{m:02}:{s:02},{frac:03}")
}

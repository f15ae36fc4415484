//! Plain-text screenplay parsing into a location-scene structure.
//!
//! Line classification rules, in order:
//! 1. `INT.`/`EXT.`-prefixed lines (optionally numbered) open a new scene.
//! 2. A fully-capitalized line followed by a more-indented line containing
//!    lowercase text is a speaker cue; the block below it is dialogue.
//!    Parenthetical lines inside the block go to action text.
//! 3. A fully-capitalized line at the left margin with a ` - ` segment or a
//!    trailing time-of-day word (`KITCHEN - DAY`) is also a scene heading,
//!    covering scripts that omit the INT./EXT. prefix. Transitions
//!    (`CUT TO:`) are excluded.
//! 4. Everything else folds into the current scene's action text; nothing
//!    is dropped. Lines before the first heading become front matter.

use std::collections::BTreeSet;

use super::{CorpusError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntExt {
    Interior,
    Exterior,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneHeading {
    pub raw: String,
    pub int_ext: Option<IntExt>,
    pub location: String,
    pub time_of_day: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub speaker: String,
    pub line: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scene {
    pub heading: SceneHeading,
    pub action: Vec<String>,
    pub dialogues: Vec<Dialogue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScriptDocument {
    pub front_matter: Vec<String>,
    pub scenes: Vec<Scene>,
}

impl ScriptDocument {
    /// Character names: dialogue speakers, lowercased and deduplicated.
    pub fn speaker_names(&self) -> BTreeSet<String> {
        self.scenes
            .iter()
            .flat_map(|s| s.dialogues.iter())
            .map(|d| d.speaker.to_lowercase())
            .collect()
    }

    pub fn dialogue_line_count(&self) -> usize {
        self.scenes.iter().map(|s| s.dialogues.len()).sum()
    }
}

const TIME_WORDS: [&str; 12] = [
    "DAY",
    "NIGHT",
    "MORNING",
    "EVENING",
    "AFTERNOON",
    "DAWN",
    "DUSK",
    "CONTINUOUS",
    "LATER",
    "SAME TIME",
    "SUNSET",
    "SUNRISE",
];

fn indent_of(line: &str) -> usize {
    line.chars().take_while(|c| *c == ' ' || *c == '\t').count()
}

fn is_upper_line(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty()
        && t.chars().any(|c| c.is_ascii_alphabetic())
        && !t.chars().any(|c| c.is_lowercase())
}

fn int_ext_prefix(trimmed: &str) -> Option<(IntExt, &str)> {
    let unnumbered = trimmed.trim_start_matches(|c: char| c.is_ascii_digit() || c == '.');
    let unnumbered = unnumbered.trim_start();
    for (prefix, kind) in [
        ("INT./EXT.", IntExt::Both),
        ("INT/EXT", IntExt::Both),
        ("I/E", IntExt::Both),
        ("INT.", IntExt::Interior),
        ("INT ", IntExt::Interior),
        ("EXT.", IntExt::Exterior),
        ("EXT ", IntExt::Exterior),
    ] {
        if let Some(rest) = unnumbered.strip_prefix(prefix) {
            return Some((kind, rest));
        }
    }
    None
}

fn parse_heading(raw: &str) -> SceneHeading {
    let trimmed = raw.trim();
    let (int_ext, rest) = match int_ext_prefix(trimmed) {
        Some((kind, rest)) => (Some(kind), rest),
        None => (None, trimmed),
    };
    let rest = rest.trim_start_matches(['.', ' ']).trim();
    let mut segments: Vec<&str> = rest.split(" - ").map(str::trim).collect();
    let time_of_day = match segments.last() {
        Some(last) if TIME_WORDS.contains(&last.trim_end_matches('.')) => {
            let t = segments.pop().unwrap().trim_end_matches('.').to_string();
            Some(t)
        }
        _ => None,
    };
    SceneHeading {
        raw: trimmed.to_string(),
        int_ext,
        location: segments.join(" - ").trim().to_string(),
        time_of_day,
    }
}

fn is_transition(trimmed: &str) -> bool {
    trimmed.ends_with(':')
}

/// Strip a trailing parenthetical from a speaker cue: `JENNY (V.O.)` -> `JENNY`.
fn speaker_name(trimmed: &str) -> String {
    match trimmed.find('(') {
        Some(pos) => trimmed[..pos].trim().to_string(),
        None => trimmed.to_string(),
    }
}

pub fn parse_script(text: &str) -> Result<ScriptDocument> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end()).collect();
    let mut doc = ScriptDocument::default();
    let mut current: Option<Scene> = None;
    let mut i = 0;

    while i < lines.len() {
        let line = lines[i];
        let trimmed = line.trim();
        if trimmed.is_empty() {
            i += 1;
            continue;
        }

        let heading_by_prefix = int_ext_prefix(trimmed).is_some() && is_upper_line(line);

        // Speaker cue: uppercase, indented, next nonblank line is a more
        // deeply meaningful text line (contains lowercase) or parenthetical.
        let mut is_speaker = false;
        if !heading_by_prefix && is_upper_line(line) && !is_transition(trimmed) {
            if let Some(next) = lines[i + 1..].iter().find(|l| !l.trim().is_empty()) {
                let next_trim = next.trim();
                let textual = next_trim.chars().any(|c| c.is_lowercase())
                    || next_trim.starts_with('(');
                if textual && indent_of(line) >= 2 && indent_of(next) >= 1 {
                    is_speaker = true;
                }
            }
        }

        let caps_heading_shape = trimmed.contains(" - ")
            || TIME_WORDS
                .iter()
                .any(|w| trimmed.trim_end_matches('.').ends_with(w));
        let heading_by_caps = !heading_by_prefix
            && !is_speaker
            && is_upper_line(line)
            && indent_of(line) < 2
            && caps_heading_shape
            && !is_transition(trimmed);

        if heading_by_prefix || heading_by_caps {
            if let Some(scene) = current.take() {
                doc.scenes.push(scene);
            }
            current = Some(Scene {
                heading: parse_heading(trimmed),
                action: Vec::new(),
                dialogues: Vec::new(),
            });
            i += 1;
            continue;
        }

        if is_speaker {
            let speaker = speaker_name(trimmed);
            let mut spoken = Vec::new();
            let mut parentheticals = Vec::new();
            i += 1;
            while i < lines.len() {
                let dl = lines[i];
                let dt = dl.trim();
                if dt.is_empty() || int_ext_prefix(dt).is_some() {
                    break;
                }
                if dt.starts_with('(') && dt.ends_with(')') {
                    parentheticals.push(dt.to_string());
                } else {
                    spoken.push(dt.to_string());
                }
                i += 1;
            }
            match current.as_mut() {
                Some(scene) => {
                    scene.action.extend(parentheticals);
                    if spoken.is_empty() {
                        // Not a real dialogue block after all; keep the cue.
                        scene.action.push(trimmed.to_string());
                    } else {
                        scene.dialogues.push(Dialogue {
                            speaker,
                            line: spoken.join(" "),
                        });
                    }
                }
                None => {
                    doc.front_matter.push(trimmed.to_string());
                    doc.front_matter.extend(parentheticals);
                    doc.front_matter.extend(spoken);
                }
            }
            continue;
        }

        match current.as_mut() {
            Some(scene) => scene.action.push(trimmed.to_string()),
            None => doc.front_matter.push(trimmed.to_string()),
        }
        i += 1;
    }

    if let Some(scene) = current.take() {
        doc.scenes.push(scene);
    }
    if doc.scenes.is_empty() {
        return Err(CorpusError::NotAScreenplay);
    }
    Ok(doc)
}

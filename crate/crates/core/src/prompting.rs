//! Text prompt construction and inpainting-mask composition.
//!
//! The prompt lists object class nouns only ("A fork, a knife, a plate, and
//! a spoon, top-down"); visual attributes from captions are dropped. The
//! inpainting mask marks pixels the generator has to keep:
//!
//! * contours of objects the robot may not move,
//! * the table edge band,
//! * minus the dilated footprint of every movable object, applied last.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::BinaryMask;
use crate::scene::SceneDescription;

pub const DEFAULT_SUFFIX: &str = "top-down";
pub const DEFAULT_CONTOUR_THICKNESS: u32 = 3;
pub const DEFAULT_MOVABLE_DILATION: u32 = 7;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("caption is empty")]
    EmptyCaption,
    #[error("no class noun found in caption {0:?}")]
    NoNounFound(String),
    #[error("noun list is empty")]
    EmptyList,
}

/// Maps a free-form caption to the noun naming the object's class.
pub trait NounTagger: Send + Sync {
    fn class_noun(&self, caption: &str) -> Result<String, PromptError>;
}

const STOP_WORDS: &[&str] = &["table", "desk", "surface", "counter", "background", "top", "wall", "floor"];

const NOUNS: &[&str] = &[
    "apple", "avocado", "ball", "banana", "basket", "book", "bottle", "bowl", "box", "bread", "calculator",
    "candle", "carrot", "chopstick", "clock", "controller", "cucumber", "cup", "egg", "eraser", "fork",
    "frisbee", "glass", "glasses", "grape", "headphones", "ipad", "jar", "kettle", "key", "keyboard",
    "knife", "laptop", "lemon", "lime", "marker", "monitor", "mouse", "mug", "napkin", "notebook", "onion",
    "orange", "pan", "peach", "pear", "pen", "pencil", "pepper", "phone", "plant", "plate", "pot", "potato",
    "remote", "ruler", "saucer", "scissors", "smartphone", "spatula", "sponge", "spoon", "stapler",
    "strawberry", "tablet", "teapot", "tomato", "toy", "tray", "vase", "wallet", "watch",
    // stop-list nouns are still nouns; they are filtered separately
    "table", "desk", "surface", "counter", "background", "top", "wall", "floor",
];

/// Deterministic rule-based tagger: the first token found in a noun lexicon
/// that is not a background word.
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    nouns: BTreeSet<String>,
    stop_words: BTreeSet<String>,
}

impl Default for LexiconTagger {
    fn default() -> Self {
        Self::new(NOUNS.iter().copied(), STOP_WORDS.iter().copied())
    }
}

impl LexiconTagger {
    pub fn new<'a>(nouns: impl IntoIterator<Item = &'a str>, stop_words: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            nouns: nouns.into_iter().map(str::to_lowercase).collect(),
            stop_words: stop_words.into_iter().map(str::to_lowercase).collect(),
        }
    }

    pub fn with_nouns<'a>(mut self, extra: impl IntoIterator<Item = &'a str>) -> Self {
        self.nouns.extend(extra.into_iter().map(str::to_lowercase));
        self
    }

    pub fn with_stop_words<'a>(mut self, words: impl IntoIterator<Item = &'a str>) -> Self {
        self.stop_words = words.into_iter().map(str::to_lowercase).collect();
        self
    }

    fn is_noun(&self, token: &str) -> bool {
        self.nouns.contains(token) || singular_candidates(token).iter().any(|s| self.nouns.contains(s))
    }

    fn is_stop(&self, token: &str) -> bool {
        self.stop_words.contains(token) || singular_candidates(token).iter().any(|s| self.stop_words.contains(s))
    }
}

fn singular_candidates(token: &str) -> Vec<String> {
    if let Some(&(_, singular)) = IRREGULAR_PLURALS.iter().find(|(_, p)| *p == token) {
        return vec![singular.to_string()];
    }
    let mut out = Vec::new();
    if let Some(stem) = token.strip_suffix("ies") {
        out.push(format!("{stem}y"));
    }
    if let Some(stem) = token.strip_suffix("es") {
        out.push(stem.to_string());
    }
    if let Some(stem) = token.strip_suffix('s') {
        out.push(stem.to_string());
    }
    out
}

impl NounTagger for LexiconTagger {
    fn class_noun(&self, caption: &str) -> Result<String, PromptError> {
        if caption.trim().is_empty() {
            return Err(PromptError::EmptyCaption);
        }
        caption
            .split(|c: char| !(c.is_alphanumeric() || c == '-' || c == '\''))
            .map(|t| t.trim_matches(|c| c == '-' || c == '\'').to_lowercase())
            .filter(|t| !t.is_empty())
            .find(|t| self.is_noun(t) && !self.is_stop(t))
            .ok_or_else(|| PromptError::NoNounFound(caption.to_string()))
    }
}

/// Extracts the class noun with the default lexicon tagger.
pub fn extract_class_noun(caption: &str) -> Result<String, PromptError> {
    LexiconTagger::default().class_noun(caption)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub noun_list: Vec<String>,
}

const COUNT_WORDS: [&str; 11] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("knife", "knives"),
    ("mouse", "mice"),
    ("leaf", "leaves"),
    ("loaf", "loaves"),
    ("shelf", "shelves"),
    ("half", "halves"),
    ("person", "people"),
    ("child", "children"),
    ("foot", "feet"),
    ("tooth", "teeth"),
    ("goose", "geese"),
    ("tomato", "tomatoes"),
    ("potato", "potatoes"),
    ("scissors", "scissors"),
    ("glasses", "glasses"),
    ("headphones", "headphones"),
];

pub fn pluralize(noun: &str) -> String {
    if let Some(&(_, p)) = IRREGULAR_PLURALS.iter().find(|(s, _)| *s == noun) {
        return p.to_string();
    }
    let sibilant = ["s", "x", "z", "ch", "sh"].iter().any(|e| noun.ends_with(e));
    if sibilant {
        return format!("{noun}es");
    }
    let mut chars = noun.chars().rev();
    if let (Some('y'), Some(c)) = (chars.next(), chars.next()) {
        if !"aeiou".contains(c) {
            return format!("{}ies", &noun[..noun.len() - 1]);
        }
    }
    format!("{noun}s")
}

fn article(noun: &str) -> &'static str {
    match noun.chars().next() {
        Some(c) if "aeiouAEIOU".contains(c) => "an",
        _ => "a",
    }
}

fn noun_phrase(noun: &str, count: usize) -> String {
    match count {
        1 => format!("{} {noun}", article(noun)),
        n if n < COUNT_WORDS.len() => format!("{} {}", COUNT_WORDS[n], pluralize(noun)),
        n => format!("{n} {}", pluralize(noun)),
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Builds the generator prompt from class nouns. Repeated nouns are grouped
/// at their first occurrence ("Two apples and an orange").
pub fn build_prompt(nouns: &[String], suffix: &str) -> Result<Prompt, PromptError> {
    if nouns.is_empty() {
        return Err(PromptError::EmptyList);
    }
    let mut groups: Vec<(&str, usize)> = Vec::new();
    for n in nouns {
        match groups.iter_mut().find(|(g, _)| *g == n.as_str()) {
            Some((_, c)) => *c += 1,
            None => groups.push((n.as_str(), 1)),
        }
    }
    let phrases: Vec<String> = groups.iter().map(|&(n, c)| noun_phrase(n, c)).collect();
    let body = match phrases.as_slice() {
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
        [] => unreachable!(),
    };
    let mut text = capitalize(&body);
    if !suffix.is_empty() {
        text.push_str(", ");
        text.push_str(suffix);
    }
    Ok(Prompt {
        text,
        noun_list: nouns.to_vec(),
    })
}

/// Foreground pixels are the ones the generator must preserve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InpaintMask {
    pub mask: BinaryMask,
}

impl InpaintMask {
    pub fn preserved(&self, x: i64, y: i64) -> bool {
        self.mask.contains(x, y)
    }
}

/// `(edge band ∪ stationary contours) − dilate(movable union, radius)`.
pub fn compose_inpaint_mask(scene: &SceneDescription, contour_thickness: u32, dilation_radius: u32) -> InpaintMask {
    let (w, h) = (scene.image_width, scene.image_height);
    let mut preserve = scene.table_edge_band.to_dense();
    let mut movable = vec![false; preserve.len()];
    for o in &scene.objects {
        if o.movable {
            for (x, y) in o.mask.pixels() {
                movable[(y * w + x) as usize] = true;
            }
        } else {
            for (x, y) in o.mask.contour(contour_thickness).pixels() {
                preserve[(y * w + x) as usize] = true;
            }
        }
    }
    let cut = BinaryMask::from_dense(w, h, &movable).dilate(dilation_radius);
    for (x, y) in cut.pixels() {
        preserve[(y * w + x) as usize] = false;
    }
    InpaintMask {
        mask: BinaryMask::from_dense(w, h, &preserve),
    }
}

/// Preserve exactly the full masks of the listed objects and nothing else.
pub fn preserve_only(scene: &SceneDescription, ids: &[&str]) -> InpaintMask {
    let (w, h) = (scene.image_width, scene.image_height);
    let mut bits = vec![false; (w * h) as usize];
    for o in scene.objects.iter().filter(|o| ids.contains(&o.id.as_str())) {
        for (x, y) in o.mask.pixels() {
            bits[(y * w + x) as usize] = true;
        }
    }
    InpaintMask {
        mask: BinaryMask::from_dense(w, h, &bits),
    }
}

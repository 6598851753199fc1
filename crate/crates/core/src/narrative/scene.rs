use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{NarrativeError, Result};
use crate::text::sentence_spans;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Artifact,
    Insight,
    Expression,
}

impl ElementKind {
    pub const ALL: [ElementKind; 3] = [ElementKind::Artifact, ElementKind::Insight, ElementKind::Expression];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Artifact => "artifact",
            ElementKind::Insight => "insight",
            ElementKind::Expression => "expression",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A collectible element tagged in a scene.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CulturalElementSpec {
    pub name: String,
    pub kind: ElementKind,
    /// The description sentence that mentions the element.
    pub snippet: String,
    /// Byte offset of the name inside the description.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Scene text with tags replaced by element names. Paragraphs are
    /// separated by a blank line.
    pub description: String,
    pub choices: [String; 3],
    pub elements: Vec<CulturalElementSpec>,
}

impl SceneSpec {
    pub fn element(&self, name: &str) -> Option<&CulturalElementSpec> {
        self.elements.iter().find(|e| e.name.eq_ignore_ascii_case(name.trim()))
    }

    /// Last sentence of the description, used to carry context into the
    /// next retrieval.
    pub fn final_sentence(&self) -> &str {
        sentence_spans(&self.description).last().map(|&(s, e)| &self.description[s..e]).unwrap_or("")
    }

    pub fn first_sentence(&self) -> &str {
        sentence_spans(&self.description).first().map(|&(s, e)| &self.description[s..e]).unwrap_or("")
    }

    /// Renders the scene back into the model output grammar.
    pub fn to_grammar(&self) -> String {
        let mut text = self.description.clone();
        let mut elements: Vec<&CulturalElementSpec> = self.elements.iter().collect();
        elements.sort_by(|a, b| b.offset.cmp(&a.offset));
        for e in elements {
            let end = e.offset + e.name.len();
            if text.get(e.offset..end) == Some(e.name.as_str()) {
                text.replace_range(e.offset..end, &format!("⟦{}|{}⟧", e.kind, e.name));
            }
        }
        let mut out = format!("SCENE:\n{text}\nCHOICES:\n");
        for (i, c) in self.choices.iter().enumerate() {
            out.push_str(&format!("{}. {c}\n", i + 1));
        }
        out
    }
}

fn tag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"⟦\s*([^|⟧\n]*?)\s*\|\s*([^⟧\n]*?)\s*⟧|\[\[\s*([^|\]\n]*?)\s*\|\s*([^\]\n]*?)\s*\]\]").expect("valid regex")
    })
}

fn choice_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:[-*]\s*)?\(?(\d+)[.):]\s*(.*?)\s*$").expect("valid regex"))
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Matches `SCENE:` / `CHOICES:` marker lines, tolerating markdown emphasis
/// and case. Returns the text after the colon.
fn marker<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let t = line.trim().trim_start_matches(['*', '#', ' ']);
    let head = t.get(..label.len())?;
    if !head.eq_ignore_ascii_case(label) {
        return None;
    }
    let rest = t[label.len()..].trim_start_matches('*').strip_prefix(':')?;
    Some(rest.trim_start_matches('*').trim())
}

/// Replaces tags by their names, returning the plain text and the tags found
/// as `(kind text, name, offset)`.
fn strip_tags(text: &str) -> (String, Vec<(String, String, usize)>) {
    let mut out = String::with_capacity(text.len());
    let mut tags = Vec::new();
    let mut last = 0;
    for cap in tag_re().captures_iter(text) {
        let whole = cap.get(0).expect("group 0");
        out.push_str(&text[last..whole.start()]);
        let kind = cap.get(1).or(cap.get(3)).map_or("", |m| m.as_str());
        let name = collapse(cap.get(2).or(cap.get(4)).map_or("", |m| m.as_str()));
        tags.push((kind.to_string(), name.clone(), out.len()));
        out.push_str(&name);
        last = whole.end();
    }
    out.push_str(&text[last..]);
    (out, tags)
}

/// Parses a scene completion: a `SCENE:` section with inline
/// `⟦kind|name⟧` tags (or `[[kind|name]]`) followed by `CHOICES:` with
/// exactly three numbered, distinct options.
///
/// Tags of unknown kind become plain text. A repeated element name keeps
/// only its first tag.
pub fn parse_scene(completion: &str) -> Result<SceneSpec> {
    let err = |m: &str| NarrativeError::SceneParse(m.to_string());
    let lines: Vec<&str> = completion.lines().collect();
    let scene_at = lines.iter().position(|l| marker(l, "SCENE").is_some()).ok_or_else(|| err("missing SCENE: section"))?;
    let choices_at = lines[scene_at + 1..]
        .iter()
        .position(|l| marker(l, "CHOICES").is_some())
        .map(|i| i + scene_at + 1)
        .ok_or_else(|| err("missing CHOICES: section after SCENE:"))?;

    let mut body: Vec<&str> = Vec::new();
    if let Some(first) = marker(lines[scene_at], "SCENE").filter(|s| !s.is_empty()) {
        body.push(first);
    }
    body.extend(&lines[scene_at + 1..choices_at]);
    let raw = body.join("\n");
    let paragraphs: Vec<String> =
        raw.split("\n\n").map(collapse).filter(|p| !p.is_empty()).collect::<Vec<_>>();
    let (description, tags) = strip_tags(&paragraphs.join("\n\n"));
    if description.trim().is_empty() {
        return Err(err("empty scene description"));
    }

    let spans = sentence_spans(&description);
    let mut seen = BTreeSet::new();
    let mut elements = Vec::new();
    for (kind, name, offset) in tags {
        let Some(kind) = ElementKind::parse(&kind) else { continue };
        if name.is_empty() || !seen.insert(name.to_lowercase()) {
            continue;
        }
        let snippet = spans
            .iter()
            .find(|&&(s, e)| s <= offset && offset < e)
            .map_or(description.as_str(), |&(s, e)| &description[s..e])
            .to_string();
        elements.push(CulturalElementSpec { name, kind, snippet, offset });
    }

    let mut choices = Vec::new();
    if let Some(inline) = marker(lines[choices_at], "CHOICES").filter(|s| !s.is_empty()) {
        if let Some(c) = choice_re().captures(inline) {
            choices.push(c[2].to_string());
        }
    }
    for line in &lines[choices_at + 1..] {
        if let Some(c) = choice_re().captures(line) {
            choices.push(c[2].to_string());
        }
    }
    let choices: Vec<String> = choices.iter().map(|c| collapse(&strip_tags(c).0)).collect();
    if choices.len() != 3 {
        return Err(NarrativeError::SceneParse(format!("expected 3 choices, found {}", choices.len())));
    }
    if choices.iter().any(|c| c.is_empty()) {
        return Err(err("empty choice"));
    }
    let distinct: BTreeSet<String> = choices.iter().map(|c| c.to_lowercase()).collect();
    if distinct.len() != 3 {
        return Err(err("choices are not distinct"));
    }
    let choices: [String; 3] = choices.try_into().expect("length checked");
    Ok(SceneSpec { description, choices, elements })
}

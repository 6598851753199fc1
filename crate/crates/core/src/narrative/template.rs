use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{NarrativeError, Result};
use crate::corpus::RetrievalResult;
use crate::providers::ChatRequest;

pub type Bindings = BTreeMap<String, String>;

/// Templates every [`TemplateSet`] must provide.
pub const REQUIRED_TEMPLATES: [&str; 6] = ["scene", "quiz", "hint", "book_qa", "term_lookup", "gloss_fill"];

const BUILTIN: [(&str, &str); 7] = [
    ("scene", include_str!("../../assets/templates/scene.tmpl")),
    ("quiz", include_str!("../../assets/templates/quiz.tmpl")),
    ("hint", include_str!("../../assets/templates/hint.tmpl")),
    ("book_qa", include_str!("../../assets/templates/book_qa.tmpl")),
    ("term_lookup", include_str!("../../assets/templates/term_lookup.tmpl")),
    ("gloss_fill", include_str!("../../assets/templates/gloss_fill.tmpl")),
    ("summarize", include_str!("../../assets/templates/summarize.tmpl")),
];

/// A versioned prompt template with `{{name}}` placeholders.
///
/// File layout: optional `#` comment lines, `@key value` headers (`name`,
/// `version`, `max_tokens`, `temperature`), then `=== system` and
/// `=== user` sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub name: String,
    pub version: u32,
    pub max_tokens: u32,
    pub temperature: f64,
    pub system: String,
    pub user: String,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self> {
        let err = |m: String| NarrativeError::Template(m);
        let mut headers: BTreeMap<&str, &str> = BTreeMap::new();
        let mut sections: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut current: Option<&str> = None;
        for line in text.lines() {
            if let Some(name) = line.strip_prefix("===") {
                let name = name.trim();
                if !matches!(name, "system" | "user") {
                    return Err(err(format!("unknown section {name:?}")));
                }
                if sections.insert(name, Vec::new()).is_some() {
                    return Err(err(format!("duplicate section {name:?}")));
                }
                current = Some(name);
                continue;
            }
            match current {
                Some(sec) => sections.get_mut(sec).expect("section was inserted").push(line),
                None if line.starts_with('#') || line.trim().is_empty() => {}
                None => {
                    let rest = line.strip_prefix('@').ok_or_else(|| err(format!("unexpected line before sections: {line:?}")))?;
                    let (k, v) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                    headers.insert(k, v.trim());
                }
            }
        }
        let header = |k: &str| headers.get(k).copied().ok_or_else(|| err(format!("missing @{k} header")));
        let number = |k: &str| -> Result<f64> { header(k)?.parse().map_err(|_| err(format!("@{k} is not a number"))) };
        let body = |k: &str| -> Result<String> {
            let text = sections.get(k).ok_or_else(|| err(format!("missing === {k} section")))?.join("\n");
            let text = text.trim().to_string();
            if text.is_empty() {
                return Err(err(format!("empty === {k} section")));
            }
            Ok(text)
        };
        Ok(Self {
            name: header("name")?.to_string(),
            version: number("version")? as u32,
            max_tokens: number("max_tokens")? as u32,
            temperature: number("temperature")?,
            system: body("system")?,
            user: body("user")?,
        })
    }

    /// Placeholder names in first-appearance order, deduplicated.
    pub fn placeholders(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for part in [&self.system, &self.user] {
            for name in scan(part).into_iter().filter_map(|p| p.placeholder) {
                if seen.insert(name.to_string()) {
                    out.push(name.to_string());
                }
            }
        }
        out
    }

    pub fn render(&self, bindings: &Bindings) -> Result<ChatRequest> {
        Ok(ChatRequest {
            system: self.substitute(&self.system, bindings)?,
            user: self.substitute(&self.user, bindings)?,
            max_tokens: self.max_tokens,
            temperature: self.temperature,
            seed: None,
            template: Some(self.name.clone()),
        })
    }

    // single pass, so bound values containing "{{" are never expanded again
    fn substitute(&self, text: &str, bindings: &Bindings) -> Result<String> {
        let mut out = String::with_capacity(text.len());
        for piece in scan(text) {
            match piece.placeholder {
                Some(name) => match bindings.get(name) {
                    Some(v) => out.push_str(v),
                    None => {
                        return Err(NarrativeError::UnboundPlaceholder {
                            template: self.name.clone(),
                            placeholder: name.to_string(),
                        })
                    }
                },
                None => out.push_str(piece.literal),
            }
        }
        Ok(out)
    }
}

struct Piece<'a> {
    literal: &'a str,
    placeholder: Option<&'a str>,
}

fn scan(text: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("{{") {
        let Some(close) = rest[open + 2..].find("}}") else { break };
        let name = rest[open + 2..open + 2 + close].trim();
        let valid = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if valid {
            out.push(Piece { literal: &rest[..open], placeholder: None });
            out.push(Piece { literal: "", placeholder: Some(name) });
        } else {
            out.push(Piece { literal: &rest[..open + 2 + close + 2], placeholder: None });
        }
        rest = &rest[open + 2 + close + 2..];
    }
    out.push(Piece { literal: rest, placeholder: None });
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    templates: BTreeMap<String, Template>,
}

impl TemplateSet {
    /// The compiled-in templates.
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(name, text)| {
                let t = Template::parse(text).unwrap_or_else(|e| panic!("builtin template {name} is invalid: {e}"));
                (name.to_string(), t)
            })
            .collect();
        Self { templates }
    }

    /// Builtins overridden by every `*.tmpl` file in `dir` (keyed by its
    /// `@name` header).
    pub fn with_overrides(dir: &Path) -> Result<Self> {
        let mut set = Self::builtin();
        let entries = std::fs::read_dir(dir).map_err(|e| NarrativeError::Template(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for path in paths.into_iter().filter(|p| p.extension().is_some_and(|x| x == "tmpl")) {
            let text =
                std::fs::read_to_string(&path).map_err(|e| NarrativeError::Template(format!("{}: {e}", path.display())))?;
            let t = Template::parse(&text)
                .map_err(|e| NarrativeError::Template(format!("{}: {e}", path.display())))?;
            set.templates.insert(t.name.clone(), t);
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Result<&Template> {
        self.templates.get(name).ok_or_else(|| NarrativeError::UnknownTemplate(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

pub fn render_template(set: &TemplateSet, name: &str, bindings: &Bindings) -> Result<ChatRequest> {
    set.get(name)?.render(bindings)
}

/// `[chunk N]` blocks, blank-line separated, for the `passages` binding.
pub fn format_passages(results: &[RetrievalResult]) -> String {
    results
        .iter()
        .map(|r| format!("[chunk {}]\n{}", r.chunk.id, r.chunk.text.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

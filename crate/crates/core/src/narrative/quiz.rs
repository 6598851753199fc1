use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{NarrativeError, Result};

pub const QUIZ_LENGTH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    BookQuote,
    Theory,
    Vocabulary,
    Artifact,
    Narrative,
}

/// Required number of questions per category.
pub const REQUIRED_COMPOSITION: [(Category, usize); 5] = [
    (Category::BookQuote, 1),
    (Category::Theory, 1),
    (Category::Vocabulary, 3),
    (Category::Artifact, 2),
    (Category::Narrative, 3),
];

pub fn required_count(c: Category) -> usize {
    REQUIRED_COMPOSITION.iter().find(|(k, _)| *k == c).map_or(0, |(_, n)| *n)
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::BookQuote, Category::Theory, Category::Vocabulary, Category::Artifact, Category::Narrative];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::BookQuote => "book_quote",
            Category::Theory => "theory",
            Category::Vocabulary => "vocabulary",
            Category::Artifact => "artifact",
            Category::Narrative => "narrative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim().to_lowercase().replace([' ', '-'], "_");
        match norm.as_str() {
            "artefact" => Some(Category::Artifact),
            "quote" | "book" => Some(Category::BookQuote),
            _ => Self::ALL.into_iter().find(|c| c.as_str() == norm),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizQuestion {
    /// 1-based position in the quiz.
    pub id: u32,
    pub category: Category,
    pub stem: String,
    pub options: [String; 4],
    pub correct_index: u8,
}

impl QuizQuestion {
    pub fn correct_option(&self) -> &str {
        &self.options[usize::from(self.correct_index)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizSpec {
    pub questions: Vec<QuizQuestion>,
}

impl QuizSpec {
    pub fn question(&self, id: u32) -> Option<&QuizQuestion> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn histogram(&self) -> BTreeMap<Category, usize> {
        let mut h: BTreeMap<Category, usize> = Category::ALL.iter().map(|&c| (c, 0)).collect();
        for q in &self.questions {
            *h.entry(q.category).or_default() += 1;
        }
        h
    }

    /// Renders the quiz back into the model output grammar.
    pub fn to_grammar(&self) -> String {
        let mut out = String::new();
        for q in &self.questions {
            out.push_str(&format!("Q{} [{}] {}\n", q.id, q.category, q.stem));
            for (i, o) in q.options.iter().enumerate() {
                out.push_str(&format!("{}) {o}\n", letter_for(i)));
            }
            out.push_str(&format!("ANSWER: {}\n\n", letter_for(usize::from(q.correct_index))));
        }
        out
    }
}

pub fn letter_for(index: usize) -> char {
    (b'A' + index as u8) as char
}

/// Per-category count deltas (found minus required) for every category
/// that misses its quota.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub struct CompositionError {
    pub deltas: BTreeMap<Category, i64>,
}

impl fmt::Display for CompositionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.deltas.iter().map(|(c, d)| format!("{c}:{d:+}")).collect();
        write!(f, "quiz composition off by {}", parts.join(", "))
    }
}

pub fn validate_quiz_composition(quiz: &QuizSpec) -> std::result::Result<(), CompositionError> {
    let hist = quiz.histogram();
    let deltas: BTreeMap<Category, i64> = REQUIRED_COMPOSITION
        .iter()
        .map(|&(c, want)| (c, hist.get(&c).copied().unwrap_or(0) as i64 - want as i64))
        .filter(|&(_, d)| d != 0)
        .collect();
    if deltas.is_empty() {
        Ok(())
    } else {
        Err(CompositionError { deltas })
    }
}

fn question_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*\**Q(\d+)[.:]?\**[.:]?\s*[\[(]\s*([A-Za-z_ -]+?)\s*[\])][.:]?\s*(.*?)\s*$").expect("valid regex"))
}

fn option_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*\(?([A-Da-d])[).:]\s*(.*?)\s*$").expect("valid regex"))
}

fn answer_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*\**answer\**\s*[:=]?\s*\**\s*\(?([a-d])\b").expect("valid regex"))
}

#[derive(Default)]
struct Draft {
    number: u32,
    category: Option<Category>,
    stem: Vec<String>,
    options: Vec<(char, String)>,
    answer: Option<char>,
}

impl Draft {
    fn finish(self, id: u32) -> Result<QuizQuestion> {
        let err = |m: String| NarrativeError::QuizParse(format!("question {}: {m}", self.number));
        let category = self.category.ok_or_else(|| err("missing category".into()))?;
        let stem = self.stem.join(" ").trim().to_string();
        if stem.is_empty() {
            return Err(err("empty stem".into()));
        }
        if self.options.len() != 4 {
            return Err(err(format!("expected 4 options, found {}", self.options.len())));
        }
        for (i, (letter, text)) in self.options.iter().enumerate() {
            if *letter != letter_for(i) {
                return Err(err(format!("option {letter} out of order")));
            }
            if text.is_empty() {
                return Err(err(format!("option {letter} is empty")));
            }
        }
        let distinct: BTreeSet<String> = self.options.iter().map(|(_, t)| t.to_lowercase()).collect();
        if distinct.len() != 4 {
            return Err(err("options are not distinct".into()));
        }
        let answer = self.answer.ok_or_else(|| err("missing ANSWER line".into()))?;
        let options: [String; 4] =
            self.options.into_iter().map(|(_, t)| t).collect::<Vec<_>>().try_into().expect("length checked");
        Ok(QuizQuestion { id, category, stem, options, correct_index: answer as u8 - b'A' })
    }
}

/// Parses the quiz grammar: `Q<n> [<category>] stem`, options `A)`–`D)`,
/// then `ANSWER: <letter>`. Structure only; composition is checked by
/// [`validate_quiz_composition`].
pub fn parse_quiz(completion: &str) -> Result<QuizSpec> {
    let mut drafts: Vec<Draft> = Vec::new();
    for line in completion.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(c) = question_re().captures(line) {
            let label = &c[2];
            let category = Category::parse(label)
                .ok_or_else(|| NarrativeError::QuizParse(format!("question {}: unknown category {label:?}", &c[1])))?;
            drafts.push(Draft {
                number: c[1].parse().unwrap_or(0),
                category: Some(category),
                stem: vec![c[3].to_string()],
                ..Draft::default()
            });
            continue;
        }
        let Some(d) = drafts.last_mut() else { continue };
        if let Some(c) = answer_re().captures(line) {
            d.answer = Some(c[1].to_ascii_uppercase().chars().next().expect("one letter"));
        } else if let Some(c) = option_re().captures(line).filter(|_| d.answer.is_none()) {
            d.options.push((c[1].to_ascii_uppercase().chars().next().expect("one letter"), c[2].to_string()));
        } else if d.options.is_empty() && d.answer.is_none() {
            d.stem.push(line.trim().to_string());
        }
    }
    if drafts.len() != QUIZ_LENGTH {
        return Err(NarrativeError::QuizParse(format!("expected {QUIZ_LENGTH} questions, found {}", drafts.len())));
    }
    let questions = drafts.into_iter().zip(1..).map(|(d, id)| d.finish(id)).collect::<Result<Vec<_>>>()?;
    Ok(QuizSpec { questions })
}

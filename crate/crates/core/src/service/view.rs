use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::VocabEntry;
use crate::engine::{AskRecord, Choice, CollectedElement, CollectedVocab, GameSession, Phase, QuizRuntime, Scoreboard, Theme};
use crate::narrative::{letter_for, Category, CulturalElementSpec, ElementKind};

/// What a client sees of a session. Correct answers stay hidden until the
/// question is answered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub seed: u64,
    pub phase: Phase,
    pub day: u32,
    pub theme: Theme,
    pub intro: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loading: Option<LoadingView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub current: Option<DayView>,
    /// Days available for review, oldest first.
    pub days: Vec<DaySummary>,
    pub inventory: Vec<CollectedElement>,
    pub counts: BTreeMap<ElementKind, usize>,
    pub vocab: Vec<CollectedVocab>,
    pub artifacts_needed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quiz: Option<QuizView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scoreboard: Option<Scoreboard>,
    pub asks: Vec<AskRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadingView {
    pub day: u32,
    pub quote: String,
    pub vocab: Vec<VocabEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayView {
    pub day: u32,
    pub description: String,
    pub choices: [String; 3],
    pub elements: Vec<CulturalElementSpec>,
    pub image_url: String,
    /// First sentence of the scene, for image alt text.
    pub alt: String,
    pub loading_quote: String,
    pub vocab: Vec<VocabEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen: Option<Choice>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySummary {
    pub day: u32,
    pub summary: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizView {
    pub questions: Vec<QuestionView>,
    pub answered: usize,
    pub score: u32,
    pub hints_left: u32,
    pub fifty_fifty_left: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionView {
    pub id: u32,
    pub category: Category,
    pub stem: String,
    pub options: [String; 4],
    /// Letters removed by the fifty-fifty lifeline.
    pub eliminated: Vec<char>,
    pub hints: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<char>,
    /// Revealed only once answered.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct: Option<char>,
}

fn quiz_view(q: &QuizRuntime, hint_budget: u32, fifty_budget: u32) -> QuizView {
    let questions = q
        .spec
        .questions
        .iter()
        .map(|qq| {
            let answer = q.answers.get(&qq.id).copied();
            QuestionView {
                id: qq.id,
                category: qq.category,
                stem: qq.stem.clone(),
                options: qq.options.clone(),
                eliminated: q.eliminated.get(&qq.id).map(|e| e.iter().map(|&i| letter_for(usize::from(i))).collect()).unwrap_or_default(),
                hints: q.hints.get(&qq.id).cloned().unwrap_or_default(),
                answer: answer.map(|a| letter_for(usize::from(a))),
                correct: answer.map(|_| letter_for(usize::from(qq.correct_index))),
            }
        })
        .collect();
    QuizView {
        questions,
        answered: q.answers.len(),
        score: q.score,
        hints_left: hint_budget.saturating_sub(q.hints_used),
        fifty_fifty_left: fifty_budget.saturating_sub(q.fifty_fifty_used),
    }
}

pub fn image_url(session_id: &str, day: u32) -> String {
    format!("/sessions/{session_id}/image/{day}")
}

impl SessionView {
    pub fn new(s: &GameSession, config: &crate::engine::EngineConfig) -> Self {
        let mut counts: BTreeMap<ElementKind, usize> = ElementKind::ALL.iter().map(|&k| (k, 0)).collect();
        for e in &s.inventory {
            *counts.entry(e.kind).or_default() += 1;
        }
        let loading = (s.phase == Phase::Loading)
            .then_some(s.pending.as_ref())
            .flatten()
            .map(|p| LoadingView { day: p.day, quote: p.loading_quote.clone(), vocab: p.vocab_spawned.clone() });
        let current = s.turns.last().map(|t| DayView {
            day: t.day,
            description: t.scene.description.clone(),
            choices: t.scene.choices.clone(),
            elements: t.scene.elements.clone(),
            image_url: image_url(&s.id, t.day),
            alt: t.scene.first_sentence().to_string(),
            loading_quote: t.loading_quote.clone(),
            vocab: t.vocab_spawned.clone(),
            chosen: t.chosen.clone(),
        });
        let days = s
            .turns
            .iter()
            .map(|t| DaySummary {
                day: t.day,
                summary: t.scene.first_sentence().to_string(),
                chosen: t.chosen_text().map(str::to_string),
            })
            .collect();
        Self {
            id: s.id.clone(),
            seed: s.seed,
            phase: s.phase,
            day: s.day,
            theme: s.theme,
            intro: s.intro.clone(),
            loading,
            current,
            days,
            inventory: s.inventory.clone(),
            counts,
            vocab: s.vocab_collected.clone(),
            artifacts_needed: config.artifact_threshold.saturating_sub(s.distinct_artifacts()),
            quiz: s.quiz.as_ref().map(|q| quiz_view(q, config.hint_budget, config.fifty_fifty_budget)),
            scoreboard: s.scoreboard.clone(),
            asks: s.asks.clone(),
        }
    }
}

use serde::{Deserialize, Serialize};

use super::Theme;

/// Introduction shown before day 1; instructors can replace it in config.
pub const DEFAULT_INTRO: &str = include_str!("../../assets/intro.txt");

/// Retrieval query for the first day, before any choice exists.
pub const OPENING_QUERY: &str = "arrival at the field camp on the Trobriand Islands";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub intro_text: String,
    pub theme: Theme,
    pub retrieval_k: usize,
    pub vocab_spawn_min: usize,
    pub vocab_spawn_max: usize,
    /// Distinct artifacts that close the fieldwork phase.
    pub artifact_threshold: usize,
    /// Allows an explicit jump from fieldwork to review below the threshold.
    pub manual_advance: bool,
    /// Allows further fieldwork turns while in review.
    pub continue_in_review: bool,
    pub hint_budget: u32,
    pub fifty_fifty_budget: u32,
    pub scene_reprompts: u32,
    pub quiz_reprompts: u32,
    pub theory_concepts: Vec<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            intro_text: DEFAULT_INTRO.trim().to_string(),
            theme: Theme::Yellow,
            retrieval_k: 4,
            vocab_spawn_min: 2,
            vocab_spawn_max: 4,
            artifact_threshold: 4,
            manual_advance: false,
            continue_in_review: false,
            hint_budget: 2,
            fifty_fifty_budget: 1,
            scene_reprompts: 1,
            quiz_reprompts: 2,
            theory_concepts: vec!["participant observation".into(), "Kula ring".into()],
        }
    }
}

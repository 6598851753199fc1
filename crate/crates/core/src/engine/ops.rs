use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rng::stream;
use super::{
    AskKind, AskRecord, Choice, CollectedElement, CollectedVocab, EngineConfig, EngineError, GameSession, ImageCache,
    Lifeline, PendingTurn, Phase, QuizRuntime, Result, Scoreboard, Theme, TurnRecord, OPENING_QUERY,
};
use crate::corpus::{lexicon_mentions, pick_loading_quote, retrieve, Chunk, CorpusIndex, Embedder, RetrievalResult, VocabEntry};
use crate::narrative::{
    distill_image_prompt, fit_excerpt, format_passages, ground_quotes, letter_for, parse_quiz, parse_scene, sanitize_hint,
    validate_quiz_composition, Bindings, Category, Citation, ElementKind, ImagePromptInput, NarrativeError, QuizSpec,
    SceneSpec, TemplateSet, EXCERPT_MAX_WORDS,
};
use crate::providers::{record_usage, ChatRequest, Denylist, Gateway, ImageRef, ImageRequest, ProviderError, UsageKind};

const MAX_CUSTOM_CHARS: usize = 500;
const MAX_QUESTION_CHARS: usize = 1000;

/// Loading-screen content plus the generated day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnStart {
    pub day: u32,
    pub loading_quote: String,
    pub vocab_spawned: Vec<VocabEntry>,
    pub scene: SceneSpec,
    pub image: ImageRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectOutcome {
    /// False when the item was already collected.
    pub added: bool,
    pub phase: Phase,
    pub counts: BTreeMap<ElementKind, usize>,
    pub vocab: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gloss: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOutcome {
    pub correct: bool,
    pub running_score: u32,
    pub answered: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scoreboard: Option<Scoreboard>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AskAnswer {
    pub answer: String,
    /// Chunks backing the answer: those quoted verbatim, else all retrieved.
    pub chunk_ids: Vec<usize>,
    pub citations: Vec<Citation>,
}

/// Performs every session operation against a shared corpus and gateway.
pub struct Engine {
    index: Option<Arc<CorpusIndex>>,
    embedder: Arc<dyn Embedder>,
    gateway: Arc<Gateway>,
    templates: TemplateSet,
    denylist: Denylist,
    config: EngineConfig,
    images: Arc<ImageCache>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("index_chunks", &self.index.as_ref().map(|i| i.chunks().len()))
            .field("embedder", &self.embedder.name())
            .field("gateway", &self.gateway)
            .field("config", &self.config)
            .finish()
    }
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn invalid_phase(op: &str, phase: Phase) -> EngineError {
    EngineError::InvalidPhase { op: op.to_string(), phase }
}

fn bindings(pairs: &[(&str, String)]) -> Bindings {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

impl Engine {
    pub fn new(index: Option<Arc<CorpusIndex>>, embedder: Arc<dyn Embedder>, gateway: Arc<Gateway>, config: EngineConfig) -> Self {
        Self {
            index,
            embedder,
            gateway,
            templates: TemplateSet::builtin(),
            denylist: Denylist::empty(),
            config,
            images: Arc::new(ImageCache::in_memory()),
        }
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_denylist(mut self, denylist: Denylist) -> Self {
        self.denylist = denylist;
        self
    }

    pub fn with_images(mut self, images: Arc<ImageCache>) -> Self {
        self.images = images;
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn images(&self) -> &ImageCache {
        &self.images
    }

    pub fn index(&self) -> Result<&CorpusIndex> {
        self.index.as_deref().ok_or(EngineError::NotReady)
    }

    fn draw(&self, s: &mut GameSession) -> ChaCha8Rng {
        let rng = stream(s.seed, s.rng_draws);
        s.rng_draws += 1;
        rng
    }

    fn retrieve(&self, query: &str) -> Result<Vec<RetrievalResult>> {
        retrieve(self.index()?, query, self.config.retrieval_k, self.embedder.as_ref())
            .map_err(|e| EngineError::Unavailable(format!("retrieval: {e}")))
    }

    fn chat(&self, s: &mut GameSession, label: &str, req: &ChatRequest) -> std::result::Result<String, ProviderError> {
        let out = self.gateway.chat_complete(req)?;
        let price = self.gateway.prices().unit_price(UsageKind::Text);
        record_usage(&mut s.ledger, label, UsageKind::Text, out.units as i64, price)?;
        Ok(out.text)
    }

    fn render(&self, name: &str, b: &Bindings, seed: u64) -> std::result::Result<ChatRequest, NarrativeError> {
        let mut req = self.templates.get(name)?.render(b)?;
        req.seed = Some(seed);
        Ok(req)
    }

    fn image(&self, s: &mut GameSession, prompt: &str) -> std::result::Result<ImageRef, ProviderError> {
        let generated = self.gateway.generate_image(&ImageRequest::canvas(prompt))?;
        self.images.put(&generated.image.digest, &generated.png);
        let price = self.gateway.prices().unit_price(UsageKind::Image);
        record_usage(&mut s.ledger, "fieldwork", UsageKind::Image, 1, price)?;
        Ok(generated.image)
    }

    /// Starts a session in the intro phase. Fails with `NotReady` when no
    /// corpus index is loaded.
    pub fn new_session(&self, id: impl Into<String>, seed: u64, theme: Option<Theme>) -> Result<GameSession> {
        self.index()?;
        Ok(GameSession {
            id: id.into(),
            seed,
            rng_draws: 0,
            phase: Phase::Intro,
            day: 1,
            theme: theme.unwrap_or(self.config.theme),
            intro: self.config.intro_text.clone(),
            turns: Vec::new(),
            pending: None,
            inventory: Vec::new(),
            vocab_collected: Vec::new(),
            quiz: None,
            scoreboard: None,
            asks: Vec::new(),
            ledger: Default::default(),
        })
    }

    /// Runs both halves of a turn: the loading screen and the scene.
    pub fn begin_turn(&self, s: &mut GameSession) -> Result<TurnStart> {
        self.prepare_turn(s)?;
        self.complete_turn(s)
    }

    /// Retrieval, loading quote and vocabulary spawn. Moves the session to
    /// `Loading`.
    pub fn prepare_turn(&self, s: &mut GameSession) -> Result<PendingTurn> {
        self.index()?;
        match s.phase {
            Phase::Intro | Phase::Fieldwork => {}
            Phase::Review if self.config.continue_in_review => {}
            other => return Err(invalid_phase("begin_turn", other)),
        }
        if s.turn_open() {
            return Err(EngineError::ChoicePending);
        }
        let day = s.turns.len() as u32 + 1;
        let query = match s.turns.last() {
            Some(prev) => collapse(&format!("{} {}", prev.chosen_text().unwrap_or(OPENING_QUERY), prev.scene.final_sentence())),
            None => OPENING_QUERY.to_string(),
        };
        let failed = |cause: String| EngineError::TurnFailed { cause };
        let results = self.retrieve(&query).map_err(|e| failed(e.to_string()))?;
        let mut rng = self.draw(s);
        let loading_quote = pick_loading_quote(&results, &mut rng).map_err(|e| failed(e.to_string()))?;
        let vocab_spawned = self.spawn_vocab(&results, &mut rng)?;
        let pending = PendingTurn {
            day,
            query,
            loading_quote,
            vocab_spawned,
            retrieved_chunk_ids: results.iter().map(|r| r.chunk.id).collect(),
            return_phase: s.phase,
        };
        s.pending = Some(pending.clone());
        s.phase = Phase::Loading;
        Ok(pending)
    }

    fn spawn_vocab(&self, results: &[RetrievalResult], rng: &mut ChaCha8Rng) -> Result<Vec<VocabEntry>> {
        let lexicon = self.index()?.lexicon();
        let mut candidates: Vec<&VocabEntry> =
            lexicon.iter().filter(|e| results.iter().any(|r| lexicon_mentions(&r.chunk.text, &e.term))).collect();
        if candidates.is_empty() {
            candidates = lexicon.iter().collect();
        }
        let lo = self.config.vocab_spawn_min.min(self.config.vocab_spawn_max);
        let want = rng.gen_range(lo..=self.config.vocab_spawn_max).min(candidates.len());
        Ok(candidates.choose_multiple(rng, want).map(|e| (*e).clone()).collect())
    }

    /// Generates the scene and images for the pending turn. On failure the
    /// session returns to where it was before `prepare_turn`.
    pub fn complete_turn(&self, s: &mut GameSession) -> Result<TurnStart> {
        let Some(pending) = s.pending.clone().filter(|_| s.phase == Phase::Loading) else {
            return Err(invalid_phase("complete_turn", s.phase));
        };
        match self.generate_turn(s, &pending) {
            Ok(record) => {
                let start = TurnStart {
                    day: record.day,
                    loading_quote: record.loading_quote.clone(),
                    vocab_spawned: record.vocab_spawned.clone(),
                    scene: record.scene.clone(),
                    image: record.image.clone(),
                };
                s.turns.push(record);
                s.day = pending.day;
                s.pending = None;
                s.phase = if pending.return_phase == Phase::Review { Phase::Review } else { Phase::Fieldwork };
                Ok(start)
            }
            Err(cause) => {
                tracing::warn!(session = %s.id, day = pending.day, %cause, "turn failed");
                s.pending = None;
                s.phase = pending.return_phase;
                Err(EngineError::TurnFailed { cause })
            }
        }
    }

    fn generate_turn(&self, s: &mut GameSession, pending: &PendingTurn) -> std::result::Result<TurnRecord, String> {
        let index = self.index().map_err(|e| e.to_string())?;
        let chunks: Vec<RetrievalResult> = pending
            .retrieved_chunk_ids
            .iter()
            .filter_map(|&id| index.chunk(id).cloned())
            .map(|chunk| RetrievalResult { chunk, score: 0.0 })
            .collect();
        let previous_action = s
            .turns
            .last()
            .and_then(TurnRecord::chosen_text)
            .unwrap_or("Arriving on the island for the first time.")
            .to_string();
        let collected = if s.inventory.is_empty() {
            "nothing yet".to_string()
        } else {
            s.inventory.iter().map(|e| format!("{} ({})", e.name, e.kind)).collect::<Vec<_>>().join(", ")
        };
        let b = bindings(&[
            ("day", pending.day.to_string()),
            ("previous_action", previous_action),
            ("collected", collected),
            ("passages", format_passages(&chunks)),
        ]);
        let mut req = self.render("scene", &b, s.seed).map_err(|e| e.to_string())?;
        let user = req.user.clone();
        let mut attempt = 0;
        let scene = loop {
            let text = self.chat(s, "fieldwork", &req).map_err(|e| e.to_string())?;
            match parse_scene(&text) {
                Ok(scene) => break scene,
                Err(e) if attempt < self.config.scene_reprompts => {
                    tracing::debug!(%e, attempt, "re-prompting scene");
                    attempt += 1;
                    req.user = format!(
                        "{user}\n\nYour previous reply could not be used ({e}). Reply again using exactly the SCENE: and CHOICES: format with three numbered choices."
                    );
                }
                Err(e) => return Err(e.to_string()),
            }
        };

        let words = scene.description.split_whitespace().count();
        let summary = if words > EXCERPT_MAX_WORDS {
            let b = bindings(&[("scene", collapse(&scene.description))]);
            let req = self.render("summarize", &b, s.seed).map_err(|e| e.to_string())?;
            match self.chat(s, "fieldwork", &req) {
                Ok(text) => Some(text),
                Err(e) => {
                    tracing::debug!(%e, "summary call failed; truncating instead");
                    None
                }
            }
        } else {
            None
        };
        let excerpt = fit_excerpt(&scene.description, summary.as_deref());
        let new_artifacts: Vec<String> = scene
            .elements
            .iter()
            .filter(|e| e.kind == ElementKind::Artifact)
            .filter(|e| !s.turns.iter().any(|t| t.scene.element(&e.name).is_some_and(|p| p.kind == ElementKind::Artifact)))
            .map(|e| e.name.clone())
            .collect();
        let lines = distill_image_prompt(&ImagePromptInput {
            day_number: pending.day,
            narrative_excerpt: excerpt,
            new_artifact_names: new_artifacts.clone(),
        })
        .map_err(|e| e.to_string())?;
        let image = self.image(s, &lines[0]).map_err(|e| e.to_string())?;
        let mut artifact_images = BTreeMap::new();
        for (name, prompt) in new_artifacts.iter().zip(&lines[1..]) {
            artifact_images.insert(name.clone(), self.image(s, prompt).map_err(|e| e.to_string())?);
        }
        Ok(TurnRecord {
            day: pending.day,
            scene,
            image,
            image_prompt: lines[0].clone(),
            artifact_images,
            loading_quote: pending.loading_quote.clone(),
            vocab_spawned: pending.vocab_spawned.clone(),
            chosen: None,
            retrieved_chunk_ids: pending.retrieved_chunk_ids.clone(),
        })
    }

    /// Records the player's choice for the open turn. Custom text is
    /// moderated first; a rejection leaves the turn open.
    pub fn submit_choice(&self, s: &mut GameSession, choice: Choice) -> Result<()> {
        if !matches!(s.phase, Phase::Fieldwork | Phase::Review) {
            return Err(invalid_phase("submit_choice", s.phase));
        }
        if !s.turn_open() {
            return Err(EngineError::NoOpenTurn);
        }
        let choice = match choice {
            Choice::Index(i) if i > 2 => return Err(EngineError::InvalidChoice(format!("index {i} is not 0, 1 or 2"))),
            Choice::Index(i) => Choice::Index(i),
            Choice::Custom(text) => {
                let text = collapse(&text);
                if text.is_empty() {
                    return Err(EngineError::InvalidChoice("custom action is empty".into()));
                }
                if text.chars().count() > MAX_CUSTOM_CHARS {
                    return Err(EngineError::InvalidChoice(format!("custom action exceeds {MAX_CUSTOM_CHARS} characters")));
                }
                let verdict = self.gateway.moderate(&text, &self.denylist);
                if !verdict.allowed {
                    tracing::info!(session = %s.id, reason = %verdict.reason(), "custom action rejected");
                    return Err(EngineError::ChoiceRejected { reason: verdict.reason() });
                }
                Choice::Custom(text)
            }
        };
        s.turns.last_mut().expect("open turn exists").chosen = Some(choice);
        Ok(())
    }

    fn outcome(&self, s: &GameSession, added: bool, gloss: Option<String>) -> CollectOutcome {
        let mut counts: BTreeMap<ElementKind, usize> = ElementKind::ALL.iter().map(|&k| (k, 0)).collect();
        for e in &s.inventory {
            *counts.entry(e.kind).or_default() += 1;
        }
        CollectOutcome { added, phase: s.phase, counts, vocab: s.vocab_collected.len(), gloss }
    }

    /// Adds a tagged element of the current scene to the inventory.
    /// Collecting the same element again changes nothing.
    pub fn collect_element(&self, s: &mut GameSession, name: &str) -> Result<CollectOutcome> {
        if !matches!(s.phase, Phase::Fieldwork | Phase::Review) {
            return Err(invalid_phase("collect_element", s.phase));
        }
        let turn = s.turns.last().ok_or_else(|| EngineError::NotInScene(name.to_string()))?;
        let element = turn.scene.element(name).ok_or_else(|| EngineError::NotInScene(name.to_string()))?.clone();
        let day = turn.day;
        let added = !s.has_element(element.kind, &element.name);
        if added {
            s.inventory.push(CollectedElement { name: element.name, kind: element.kind, day_collected: day });
            self.advance_phase(s);
        }
        Ok(self.outcome(s, added, None))
    }

    /// Collects a spawned vocabulary entry and reveals its gloss, asking the
    /// provider when the glossary has none.
    pub fn collect_vocab(&self, s: &mut GameSession, term: &str) -> Result<CollectOutcome> {
        let (spawn, day) = match s.phase {
            Phase::Loading => {
                let p = s.pending.as_ref().ok_or(EngineError::NoOpenTurn)?;
                (&p.vocab_spawned, p.day)
            }
            Phase::Fieldwork | Phase::Review => {
                let t = s.turns.last().ok_or_else(|| EngineError::NotInScene(term.to_string()))?;
                (&t.vocab_spawned, t.day)
            }
            other => return Err(invalid_phase("collect_vocab", other)),
        };
        let entry =
            spawn.iter().find(|e| e.term.eq_ignore_ascii_case(term.trim())).cloned().ok_or_else(|| EngineError::NotInScene(term.to_string()))?;
        if let Some(existing) = s.has_vocab(&entry.term) {
            let gloss = existing.gloss.clone();
            return Ok(self.outcome(s, false, Some(gloss)));
        }
        let gloss = if entry.has_gloss() { entry.gloss.clone() } else { self.fill_gloss(s, &entry.term)? };
        s.vocab_collected.push(CollectedVocab { term: entry.term, gloss: gloss.clone(), day_collected: day });
        Ok(self.outcome(s, true, Some(gloss)))
    }

    fn fill_gloss(&self, s: &mut GameSession, term: &str) -> Result<String> {
        let results = self.retrieve(term)?;
        let b = bindings(&[("term", term.to_string()), ("passages", format_passages(&results))]);
        let req = self.render("gloss_fill", &b, s.seed).map_err(|e| EngineError::Unavailable(e.to_string()))?;
        let text = self.chat(s, "fieldwork", &req).map_err(|e| EngineError::Unavailable(e.to_string()))?;
        let line = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or_default();
        Ok(line.trim_matches(['"', '“', '”']).trim().to_string())
    }

    /// Closes fieldwork once enough distinct artifacts are collected.
    pub fn advance_phase(&self, s: &mut GameSession) -> Phase {
        if s.phase == Phase::Fieldwork && s.distinct_artifacts() >= self.config.artifact_threshold {
            s.phase = Phase::Review;
        }
        s.phase
    }

    /// Instructor override: ends fieldwork below the artifact threshold.
    pub fn manual_advance(&self, s: &mut GameSession) -> Result<Phase> {
        if !self.config.manual_advance {
            return Err(EngineError::ManualAdvanceDisabled);
        }
        if s.phase != Phase::Fieldwork {
            return Err(invalid_phase("manual_advance", s.phase));
        }
        s.phase = Phase::Review;
        Ok(s.phase)
    }

    pub fn review_day(&self, s: &GameSession, day: u32) -> Result<TurnRecord> {
        if s.phase.rank() < Phase::Review.rank() {
            return Err(invalid_phase("review_day", s.phase));
        }
        if day == 0 {
            return Err(EngineError::InvalidDay(day));
        }
        s.turns.get(day as usize - 1).cloned().ok_or(EngineError::InvalidDay(day))
    }

    fn transcript_bindings(&self, s: &GameSession, quote: &str, concept: &str, passages: String) -> Bindings {
        let or_none = |lines: Vec<String>| if lines.is_empty() { "(none)".to_string() } else { lines.join("\n") };
        let vocabulary = or_none(s.vocab_collected.iter().map(|v| format!("- {}: {}", v.term, v.gloss)).collect());
        let artifacts = or_none(
            s.inventory.iter().filter(|e| e.kind == ElementKind::Artifact).map(|e| format!("- {}", e.name)).collect(),
        );
        let scenes =
            or_none(s.turns.iter().map(|t| format!("- Day {}: {}", t.day, collapse(&t.scene.description))).collect());
        bindings(&[
            ("quote_passage", collapse(quote)),
            ("theory_concept", concept.to_string()),
            ("vocabulary", vocabulary),
            ("artifacts", artifacts),
            ("scenes", scenes),
            ("passages", passages),
        ])
    }

    /// Generates and validates the ten-question defense from the session
    /// transcript, re-prompting on malformed or mis-composed quizzes.
    pub fn start_defense(&self, s: &mut GameSession) -> Result<QuizSpec> {
        if s.phase != Phase::Review {
            return Err(invalid_phase("start_defense", s.phase));
        }
        let failed = |cause: String| EngineError::DefenseFailed { cause };
        let mut rng = self.draw(s);
        let concept = self.config.theory_concepts.choose(&mut rng).cloned().unwrap_or_else(|| "participant observation".into());
        let anchor = s.turns.last().map(|t| t.scene.final_sentence().to_string()).unwrap_or_default();
        let results = self.retrieve(&collapse(&format!("{concept} {anchor}"))).map_err(|e| failed(e.to_string()))?;
        let quote = pick_loading_quote(&results, &mut rng).map_err(|e| failed(e.to_string()))?;
        let b = self.transcript_bindings(s, &quote, &concept, format_passages(&results));
        let mut req = self.render("quiz", &b, s.seed).map_err(|e| failed(e.to_string()))?;
        let user = req.user.clone();
        let mut attempt = 0;
        let spec = loop {
            let text = self.chat(s, "defense", &req).map_err(|e| failed(e.to_string()))?;
            let checked = parse_quiz(&text).and_then(|q| validate_quiz_composition(&q).map(|_| q).map_err(Into::into));
            match checked {
                Ok(q) => break q,
                Err(e) if attempt < self.config.quiz_reprompts => {
                    tracing::debug!(%e, attempt, "re-prompting quiz");
                    attempt += 1;
                    req.user = format!(
                        "{user}\n\nYour previous reply could not be used ({e}). Reply again with exactly ten questions in the required format and composition."
                    );
                }
                Err(e) => return Err(failed(e.to_string())),
            }
        };
        s.quiz = Some(QuizRuntime::new(spec.clone(), quote, concept));
        s.phase = Phase::Defense;
        Ok(spec)
    }

    fn quiz_mut<'a>(&self, s: &'a mut GameSession, op: &str) -> Result<&'a mut QuizRuntime> {
        if s.phase != Phase::Defense {
            return Err(invalid_phase(op, s.phase));
        }
        s.quiz.as_mut().ok_or_else(|| invalid_phase(op, Phase::Defense))
    }

    pub fn answer_question(&self, s: &mut GameSession, qid: u32, option: u8) -> Result<AnswerOutcome> {
        let quiz = self.quiz_mut(s, "answer_question")?;
        let correct_index = quiz.spec.question(qid).ok_or(EngineError::UnknownQuestion(qid))?.correct_index;
        if option > 3 {
            return Err(EngineError::InvalidChoice(format!("option {option} is not 0-3")));
        }
        if quiz.answers.contains_key(&qid) {
            return Err(EngineError::AlreadyAnswered(qid));
        }
        if quiz.eliminated.get(&qid).is_some_and(|gone| gone.contains(&option)) {
            return Err(EngineError::OptionEliminated { qid, option });
        }
        let correct = option == correct_index;
        quiz.answers.insert(qid, option);
        if correct {
            quiz.score += 1;
        }
        let (running_score, answered, complete) = (quiz.score, quiz.answers.len(), quiz.is_complete());
        let scoreboard = if complete { Some(self.finish_defense(s)?) } else { None };
        Ok(AnswerOutcome { correct, running_score, answered, scoreboard })
    }

    fn lifeline_target<'a>(&self, s: &'a mut GameSession, qid: u32, kind: Lifeline) -> Result<&'a mut QuizRuntime> {
        let op = match kind {
            Lifeline::Hint => "request_hint",
            Lifeline::FiftyFifty => "use_fifty_fifty",
        };
        let (hint_budget, fifty_budget) = (self.config.hint_budget, self.config.fifty_fifty_budget);
        let quiz = self.quiz_mut(s, op)?;
        let exhausted = match kind {
            Lifeline::Hint => quiz.hints_used >= hint_budget,
            Lifeline::FiftyFifty => quiz.fifty_fifty_used >= fifty_budget,
        };
        if exhausted {
            return Err(EngineError::LifelineExhausted(kind));
        }
        if quiz.spec.question(qid).is_none() {
            return Err(EngineError::UnknownQuestion(qid));
        }
        if quiz.answers.contains_key(&qid) {
            return Err(EngineError::AlreadyAnswered(qid));
        }
        Ok(quiz)
    }

    /// A hint for an unanswered question, with any answer reveal removed.
    pub fn request_hint(&self, s: &mut GameSession, qid: u32) -> Result<String> {
        let quiz = self.lifeline_target(s, qid, Lifeline::Hint)?;
        let question = quiz.spec.question(qid).expect("checked").clone();
        let gone = quiz.eliminated.get(&qid).copied().unwrap_or([4, 4]);
        let options = question
            .options
            .iter()
            .enumerate()
            .filter(|(i, _)| !gone.contains(&(*i as u8)))
            .map(|(i, o)| format!("{}) {o}", letter_for(i)))
            .collect::<Vec<_>>()
            .join("\n");
        let results = self.retrieve(&question.stem)?;
        let b = bindings(&[("stem", question.stem.clone()), ("options", options), ("passages", format_passages(&results))]);
        let req = self.render("hint", &b, s.seed).map_err(|e| EngineError::Unavailable(e.to_string()))?;
        let text = self.chat(s, "defense", &req).map_err(|e| EngineError::Unavailable(e.to_string()))?;
        let hint = sanitize_hint(&text, &question);
        let quiz = s.quiz.as_mut().expect("checked");
        quiz.hints_used += 1;
        quiz.hints.entry(qid).or_default().push(hint.clone());
        Ok(hint)
    }

    /// Removes two seeded-random incorrect options; returns the two that
    /// remain (the correct one and one distractor), ascending.
    pub fn use_fifty_fifty(&self, s: &mut GameSession, qid: u32) -> Result<[u8; 2]> {
        self.lifeline_target(s, qid, Lifeline::FiftyFifty)?;
        let mut rng = self.draw(s);
        let quiz = s.quiz.as_mut().expect("checked");
        let correct = quiz.spec.question(qid).expect("checked").correct_index;
        let mut wrong: Vec<u8> = (0..4).filter(|&i| i != correct).collect();
        wrong.shuffle(&mut rng);
        let mut removed = [wrong[0], wrong[1]];
        removed.sort_unstable();
        let mut kept = [correct, wrong[2]];
        kept.sort_unstable();
        quiz.eliminated.insert(qid, removed);
        quiz.fifty_fifty_used += 1;
        Ok(kept)
    }

    /// Scores the defense and completes the game.
    pub fn finish_defense(&self, s: &mut GameSession) -> Result<Scoreboard> {
        let quiz = self.quiz_mut(s, "finish_defense")?;
        if !quiz.is_complete() {
            return Err(EngineError::DefenseIncomplete { answered: quiz.answers.len() });
        }
        let mut per_category: BTreeMap<Category, u32> = Category::ALL.iter().map(|&c| (c, 0)).collect();
        for q in &quiz.spec.questions {
            if quiz.answers.get(&q.id) == Some(&q.correct_index) {
                *per_category.entry(q.category).or_default() += 1;
            }
        }
        let board = Scoreboard {
            score: per_category.values().sum(),
            per_category,
            artifacts: s.distinct_artifacts(),
            vocab: s.vocab_collected.len(),
        };
        s.scoreboard = Some(board.clone());
        s.phase = Phase::Complete;
        Ok(board)
    }

    fn answer_from_source(
        &self,
        s: &mut GameSession,
        kind: AskKind,
        question: &str,
        template: &str,
        mut b: Bindings,
        query: &str,
    ) -> Result<AskAnswer> {
        let results = self.retrieve(query)?;
        b.insert("passages".into(), format_passages(&results));
        let req = self.render(template, &b, s.seed).map_err(|e| EngineError::Unavailable(e.to_string()))?;
        let answer = self.chat(s, "companion", &req).map_err(|e| EngineError::Unavailable(e.to_string()))?;
        let chunks: Vec<Chunk> = results.iter().map(|r| r.chunk.clone()).collect();
        let (citations, ungrounded) = ground_quotes(&answer, &chunks);
        if !ungrounded.is_empty() {
            tracing::info!(count = ungrounded.len(), "answer quotes text not found in the retrieved passages");
        }
        let mut chunk_ids: Vec<usize> = Vec::new();
        for c in &citations {
            if !chunk_ids.contains(&c.chunk_id) {
                chunk_ids.push(c.chunk_id);
            }
        }
        if chunk_ids.is_empty() {
            chunk_ids = results.iter().map(|r| r.chunk.id).collect();
        }
        let out = AskAnswer { answer, chunk_ids, citations };
        s.asks.push(AskRecord {
            kind,
            day: s.day,
            question: question.to_string(),
            answer: out.answer.clone(),
            chunk_ids: out.chunk_ids.clone(),
            citations: out.citations.clone(),
        });
        Ok(out)
    }

    fn check_ask(&self, s: &GameSession, op: &str, text: &str) -> Result<String> {
        if s.phase == Phase::Intro {
            return Err(invalid_phase(op, s.phase));
        }
        let text = collapse(text);
        if text.is_empty() {
            return Err(EngineError::InvalidInput("question is empty".into()));
        }
        if text.chars().count() > MAX_QUESTION_CHARS {
            return Err(EngineError::InvalidInput(format!("question exceeds {MAX_QUESTION_CHARS} characters")));
        }
        Ok(text)
    }

    /// Explains a term using passages retrieved for the term and the
    /// current scene.
    pub fn ask_about_term(&self, s: &mut GameSession, term: &str) -> Result<AskAnswer> {
        let term = self.check_ask(s, "ask_about_term", term)?;
        let scene = s.turns.last().map(|t| collapse(&t.scene.description)).unwrap_or_default();
        let query = collapse(&format!("{term} {scene}"));
        let b = bindings(&[("term", term.clone()), ("scene", if scene.is_empty() { "(none)".into() } else { scene })]);
        self.answer_from_source(s, AskKind::Term, &term, "term_lookup", b, &query)
    }

    /// Answers a moderated free-form question about the source text.
    pub fn ask_about_book(&self, s: &mut GameSession, question: &str) -> Result<AskAnswer> {
        let question = self.check_ask(s, "ask_about_book", question)?;
        let verdict = self.gateway.moderate(&question, &self.denylist);
        if !verdict.allowed {
            return Err(EngineError::QuestionRejected { reason: verdict.reason() });
        }
        let b = bindings(&[("question", question.clone())]);
        self.answer_from_source(s, AskKind::Book, &question, "book_qa", b, &question)
    }
}

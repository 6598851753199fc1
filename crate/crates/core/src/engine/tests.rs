use std::sync::Arc;

use super::*;
use crate::assets;
use crate::corpus::{build_index, parse_glossary, HashEmbedder, IndexConfig, LexiconConfig};
use crate::narrative::ElementKind;
use crate::providers::{Backend, ChatRequest, Completion, Denylist, Gateway, ImageRequest, MockBackend, RetryPolicy};

fn index(raw: &str) -> Arc<crate::corpus::CorpusIndex> {
    let config = IndexConfig {
        lexicon: LexiconConfig { glossary: parse_glossary(assets::GLOSSARY).unwrap(), ..Default::default() },
        ..Default::default()
    };
    Arc::new(build_index(raw, &config, &HashEmbedder::default()).unwrap())
}

fn engine_with(backend: Arc<dyn Backend>, config: EngineConfig) -> Engine {
    let gateway = Gateway::new(backend).with_retry(RetryPolicy::no_backoff(0));
    Engine::new(Some(index(assets::SAMPLE_CORPUS)), Arc::new(HashEmbedder::default()), Arc::new(gateway), config)
        .with_denylist(Denylist::parse(assets::DENYLIST))
}

fn engine() -> Engine {
    engine_with(Arc::new(MockBackend::new()), EngineConfig::default())
}

/// Plays days, collecting every artifact, until fieldwork closes.
fn play_to_review(e: &Engine, s: &mut GameSession) {
    for _ in 0..12 {
        if s.phase == Phase::Review {
            return;
        }
        let start = e.begin_turn(s).unwrap();
        for el in start.scene.elements.iter().filter(|el| el.kind == ElementKind::Artifact) {
            e.collect_element(s, &el.name).unwrap();
        }
        if s.phase == Phase::Fieldwork {
            e.submit_choice(s, Choice::Index(0)).unwrap();
        }
    }
    panic!("fieldwork never closed");
}

fn defended(e: &Engine, seed: u64) -> GameSession {
    let mut s = e.new_session("t", seed, None).unwrap();
    play_to_review(e, &mut s);
    e.start_defense(&mut s).unwrap();
    s
}

#[test]
fn new_session_is_deterministic_and_themed() {
    let e = engine();
    assert_eq!(e.new_session("a", 42, None).unwrap(), e.new_session("a", 42, None).unwrap());
    let s = e.new_session("a", 42, Some(Theme::Blue)).unwrap();
    assert_eq!((s.phase, s.theme, s.day), (Phase::Intro, Theme::Blue, 1));
    assert!(s.intro.contains("1914"));
}

#[test]
fn missing_index_is_not_ready() {
    let e = Engine::new(
        None,
        Arc::new(HashEmbedder::default()),
        Arc::new(Gateway::new(Arc::new(MockBackend::new()))),
        EngineConfig::default(),
    );
    assert_eq!(e.new_session("x", 1, None), Err(EngineError::NotReady));
}

#[test]
fn first_turn_is_grounded() {
    let e = engine();
    let mut s = e.new_session("t", 42, None).unwrap();
    let start = e.begin_turn(&mut s).unwrap();
    assert_eq!((s.phase, s.day, s.turns.len()), (Phase::Fieldwork, 1, 1));
    assert_eq!(start.scene.choices.len(), 3);
    assert!(assets::SAMPLE_CORPUS.contains(&start.loading_quote));
    assert!((1..=4).contains(&start.vocab_spawned.len()));
    let lexicon = e.index().unwrap().lexicon();
    assert!(start.vocab_spawned.iter().all(|v| lexicon.contains(v)));
    assert_eq!(s.turns[0].retrieved_chunk_ids.len(), 4);
    assert!(e.images().get(&start.image.digest).is_some());
    assert!(s.turns[0].image_prompt.starts_with("pixel-art:"));
    assert_eq!(e.begin_turn(&mut s), Err(EngineError::ChoicePending));
}

#[test]
fn day_counter_tracks_turns() {
    let e = engine();
    let mut s = e.new_session("t", 7, None).unwrap();
    for day in 1..=3 {
        e.begin_turn(&mut s).unwrap();
        assert_eq!(s.day, day);
        assert_eq!(s.turns.len(), day as usize);
        assert_eq!(s.completed_turns(), day as usize - 1);
        e.submit_choice(&mut s, Choice::Index(1)).unwrap();
    }
}

#[test]
fn choices_validated_and_moderated() {
    let e = engine();
    let mut s = e.new_session("t", 3, None).unwrap();
    assert_eq!(e.submit_choice(&mut s, Choice::Index(0)).unwrap_err().name(), "invalid_phase");
    e.begin_turn(&mut s).unwrap();
    assert!(matches!(e.submit_choice(&mut s, Choice::Index(3)), Err(EngineError::InvalidChoice(_))));
    let rejected = e.submit_choice(&mut s, Choice::Custom("kill them all".into())).unwrap_err();
    assert!(matches!(&rejected, EngineError::ChoiceRejected { reason } if reason == "denylist"));
    assert!(s.turn_open());
    e.submit_choice(&mut s, Choice::Custom("rob the yam and run away".into())).unwrap();
    assert_eq!(s.turns[0].chosen_text(), Some("rob the yam and run away"));
    assert_eq!(e.submit_choice(&mut s, Choice::Index(0)), Err(EngineError::NoOpenTurn));
}

#[test]
fn custom_choice_steers_next_query() {
    let e = engine();
    let mut s = e.new_session("t", 3, None).unwrap();
    e.begin_turn(&mut s).unwrap();
    e.submit_choice(&mut s, Choice::Custom("ask about the canoes".into())).unwrap();
    let pending = e.prepare_turn(&mut s).unwrap();
    assert!(pending.query.starts_with("ask about the canoes "));
    assert_eq!(s.phase, Phase::Loading);
    e.complete_turn(&mut s).unwrap();
    assert_eq!(s.phase, Phase::Fieldwork);
}

#[test]
fn collection_is_idempotent() {
    let e = engine();
    let mut s = e.new_session("t", 5, None).unwrap();
    let start = e.begin_turn(&mut s).unwrap();
    let artifact = start.scene.elements.iter().find(|el| el.kind == ElementKind::Artifact).unwrap().name.clone();
    let first = e.collect_element(&mut s, &artifact).unwrap();
    let second = e.collect_element(&mut s, &artifact).unwrap();
    assert!(first.added && !second.added);
    assert_eq!(s.inventory.len(), 1);
    assert_eq!(second.counts[&ElementKind::Artifact], 1);
    assert_eq!(e.collect_element(&mut s, "steam engine"), Err(EngineError::NotInScene("steam engine".into())));
}

#[test]
fn vocab_gloss_from_glossary_or_provider() {
    let e = engine();
    let mut s = e.new_session("t", 11, None).unwrap();
    let start = e.begin_turn(&mut s).unwrap();
    let entry = &start.vocab_spawned[0];
    let out = e.collect_vocab(&mut s, &entry.term).unwrap();
    assert!(out.added);
    if entry.has_gloss() {
        assert_eq!(out.gloss.as_deref(), Some(entry.gloss.as_str()));
    } else {
        assert!(out.gloss.unwrap().contains(&entry.term));
    }
    assert!(!e.collect_vocab(&mut s, &entry.term).unwrap().added);
    assert_eq!(s.vocab_collected.len(), 1);
    assert!(matches!(e.collect_vocab(&mut s, "not-a-term"), Err(EngineError::NotInScene(_))));
}

#[test]
fn vocab_spawn_clamped_to_candidates() {
    let raw = "In the evening the men talked about the _kula_ and the long voyages to the east.";
    let gateway = Arc::new(Gateway::new(Arc::new(MockBackend::new())));
    let e = Engine::new(Some(index(raw)), Arc::new(HashEmbedder::default()), gateway, EngineConfig::default());
    let mut s = e.new_session("t", 9, None).unwrap();
    let pending = e.prepare_turn(&mut s).unwrap();
    assert_eq!(pending.vocab_spawned.len(), 1);
    assert_eq!(pending.vocab_spawned[0].term, "kula");
}

#[test]
fn four_distinct_artifacts_close_fieldwork() {
    let e = engine();
    let mut s = e.new_session("t", 42, None).unwrap();
    play_to_review(&e, &mut s);
    assert_eq!(s.phase, Phase::Review);
    assert_eq!(s.distinct_artifacts(), 4);
    assert_eq!(e.review_day(&s, 0), Err(EngineError::InvalidDay(0)));
    assert_eq!(e.review_day(&s, 1).unwrap(), s.turns[0]);
    assert_eq!(e.review_day(&s, 1).unwrap(), e.review_day(&s, 1).unwrap());
    let last = s.turns.len() as u32;
    assert_eq!(e.review_day(&s, last + 1), Err(EngineError::InvalidDay(last + 1)));
    assert!(matches!(e.begin_turn(&mut s), Err(EngineError::InvalidPhase { .. })));
}

#[test]
fn repeated_artifact_does_not_close_fieldwork() {
    let e = engine();
    let mut s = e.new_session("t", 1, None).unwrap();
    let start = e.begin_turn(&mut s).unwrap();
    let artifact = start.scene.elements.iter().find(|el| el.kind == ElementKind::Artifact).unwrap().name.clone();
    for _ in 0..4 {
        e.collect_element(&mut s, &artifact).unwrap();
    }
    assert_eq!(e.advance_phase(&mut s), Phase::Fieldwork);
}

#[test]
fn manual_advance_respects_flag() {
    let e = engine();
    let mut s = e.new_session("t", 1, None).unwrap();
    e.begin_turn(&mut s).unwrap();
    assert_eq!(e.manual_advance(&mut s), Err(EngineError::ManualAdvanceDisabled));
    let e = engine_with(Arc::new(MockBackend::new()), EngineConfig { manual_advance: true, ..Default::default() });
    let mut s = e.new_session("t", 1, None).unwrap();
    e.begin_turn(&mut s).unwrap();
    assert_eq!(e.manual_advance(&mut s), Ok(Phase::Review));
}

#[test]
fn continue_in_review_flag() {
    let e = engine_with(Arc::new(MockBackend::new()), EngineConfig { continue_in_review: true, ..Default::default() });
    let mut s = e.new_session("t", 42, None).unwrap();
    play_to_review(&e, &mut s);
    if s.turn_open() {
        e.submit_choice(&mut s, Choice::Index(2)).unwrap();
    }
    let before = s.turns.len();
    e.begin_turn(&mut s).unwrap();
    assert_eq!((s.phase, s.turns.len()), (Phase::Review, before + 1));
}

#[test]
fn perfect_and_zero_defense() {
    let e = engine();
    let mut s = defended(&e, 42);
    assert_eq!(s.phase, Phase::Defense);
    let questions = s.quiz.as_ref().unwrap().spec.questions.clone();
    assert_eq!(e.finish_defense(&mut s), Err(EngineError::DefenseIncomplete { answered: 0 }));
    let mut last = None;
    for q in &questions {
        last = Some(e.answer_question(&mut s, q.id, q.correct_index).unwrap());
    }
    let board = last.unwrap().scoreboard.unwrap();
    assert_eq!(board.score, 10);
    assert_eq!(board.per_category.values().sum::<u32>(), 10);
    assert_eq!(s.phase, Phase::Complete);

    let mut s = defended(&e, 42);
    for q in &questions {
        e.answer_question(&mut s, q.id, (q.correct_index + 1) % 4).unwrap();
    }
    assert_eq!(s.scoreboard.as_ref().unwrap().score, 0);
}

#[test]
fn partial_score_matches_recount() {
    let e = engine();
    let mut s = defended(&e, 8);
    let questions = s.quiz.as_ref().unwrap().spec.questions.clone();
    for (i, q) in questions.iter().enumerate() {
        let pick = if i < 7 { q.correct_index } else { (q.correct_index + 2) % 4 };
        e.answer_question(&mut s, q.id, pick).unwrap();
    }
    let board = s.scoreboard.clone().unwrap();
    let recount = questions.iter().filter(|q| s.quiz.as_ref().unwrap().answers[&q.id] == q.correct_index).count();
    assert_eq!((board.score, recount), (7, 7));
    assert_eq!(board.per_category.values().sum::<u32>(), 7);
}

#[test]
fn answer_errors() {
    let e = engine();
    let mut s = defended(&e, 2);
    let q = s.quiz.as_ref().unwrap().spec.questions[0].clone();
    assert_eq!(e.answer_question(&mut s, 99, 0), Err(EngineError::UnknownQuestion(99)));
    e.answer_question(&mut s, q.id, 0).unwrap();
    assert_eq!(e.answer_question(&mut s, q.id, 1), Err(EngineError::AlreadyAnswered(q.id)));
}

#[test]
fn lifelines_have_budgets() {
    let e = engine();
    let mut s = defended(&e, 4);
    let qs = s.quiz.as_ref().unwrap().spec.questions.clone();
    let hint = e.request_hint(&mut s, qs[0].id).unwrap();
    assert!(!hint.is_empty());
    e.request_hint(&mut s, qs[1].id).unwrap();
    assert_eq!(e.request_hint(&mut s, qs[2].id), Err(EngineError::LifelineExhausted(Lifeline::Hint)));

    let kept = e.use_fifty_fifty(&mut s, qs[3].id).unwrap();
    assert!(kept.contains(&qs[3].correct_index));
    let removed = s.quiz.as_ref().unwrap().eliminated[&qs[3].id];
    assert!(!removed.contains(&qs[3].correct_index));
    assert_eq!(
        e.answer_question(&mut s, qs[3].id, removed[0]),
        Err(EngineError::OptionEliminated { qid: qs[3].id, option: removed[0] })
    );
    assert_eq!(e.use_fifty_fifty(&mut s, qs[4].id), Err(EngineError::LifelineExhausted(Lifeline::FiftyFifty)));
}

#[test]
fn companion_answers_are_grounded() {
    let e = engine();
    let mut s = e.new_session("t", 6, None).unwrap();
    assert!(matches!(e.ask_about_book(&mut s, "What is the kula?"), Err(EngineError::InvalidPhase { .. })));
    e.begin_turn(&mut s).unwrap();
    let book = e.ask_about_book(&mut s, "How are the armbands exchanged?").unwrap();
    assert!(!book.citations.is_empty());
    for c in &book.citations {
        assert!(assets::SAMPLE_CORPUS.contains(&c.span));
        assert!(book.chunk_ids.contains(&c.chunk_id));
    }
    let term = e.ask_about_term(&mut s, "pandanus streamer").unwrap();
    assert!(!term.chunk_ids.is_empty());
    assert!(matches!(e.ask_about_book(&mut s, "   "), Err(EngineError::InvalidInput(_))));
    assert!(matches!(e.ask_about_book(&mut s, "kill them all"), Err(EngineError::QuestionRejected { .. })));
    assert_eq!(s.asks.len(), 2);
}

struct Garbage;

impl Backend for Garbage {
    fn name(&self) -> &str {
        "garbage"
    }
    fn chat(&self, _: &ChatRequest) -> crate::providers::Result<Completion> {
        Ok(Completion { text: "I would rather not.".into(), units: 3 })
    }
    fn image(&self, req: &ImageRequest) -> crate::providers::Result<Vec<u8>> {
        MockBackend::new().image(req)
    }
    fn moderation(&self, _: &str) -> crate::providers::Result<Option<Vec<String>>> {
        Ok(None)
    }
}

#[test]
fn unparseable_scene_fails_turn_without_advancing() {
    let e = engine_with(Arc::new(Garbage), EngineConfig::default());
    let mut s = e.new_session("t", 1, None).unwrap();
    let err = e.begin_turn(&mut s).unwrap_err();
    assert!(matches!(&err, EngineError::TurnFailed { cause } if cause.contains("SCENE")), "{err}");
    assert_eq!((s.phase, s.day, s.turns.len(), s.pending.is_none()), (Phase::Intro, 1, 0, true));
    // original attempt plus one re-prompt
    assert_eq!(s.ledger.entries().len(), 2);
}

#[test]
fn replay_is_byte_identical() {
    let run = || {
        let e = engine();
        let s = defended(&e, 42);
        s.transcript_json()
    };
    assert_eq!(run(), run());
}

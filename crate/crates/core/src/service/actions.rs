//! Session actions shared by the HTTP handlers and the headless runner.

use serde::Deserialize;
use serde_json::{json, Value};

use super::api_error::ApiError;
use super::view::SessionView;
use crate::engine::{Choice, Engine, EngineError, GameSession};
use crate::narrative::{letter_for, ElementKind};

/// One state-changing request against a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Turn,
    /// 1-based, as the choices are numbered on screen.
    Choose(u8),
    Custom(String),
    Collect { kind: Option<ElementKind>, name: String },
    Vocab(String),
    Advance,
    Defense,
    Answer { qid: u32, option: u8 },
    Hint(u32),
    Fifty(u32),
    AskTerm(String),
    AskBook(String),
    Finish,
}

/// `"B"`, `"b"` → 1.
pub fn parse_option_letter(s: &str) -> Option<u8> {
    match s.trim().to_ascii_uppercase().as_str() {
        "A" => Some(0),
        "B" => Some(1),
        "C" => Some(2),
        "D" => Some(3),
        _ => None,
    }
}

fn body<'a, T: Deserialize<'a>>(bytes: &'a [u8]) -> Result<T, ApiError> {
    let bytes = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}".as_slice() } else { bytes };
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiceBody {
    index: Option<u8>,
    custom: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CollectBody {
    kind: Option<String>,
    name: Option<String>,
    term: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerBody {
    qid: u32,
    option: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QidBody {
    qid: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermBody {
    term: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestionBody {
    question: String,
}

impl Action {
    pub fn choice_body(bytes: &[u8]) -> Result<Self, ApiError> {
        match body::<ChoiceBody>(bytes)? {
            ChoiceBody { index: Some(i), custom: None } => Ok(Action::Choose(i)),
            ChoiceBody { index: None, custom: Some(c) } => Ok(Action::Custom(c)),
            _ => Err(ApiError::bad_request("expected exactly one of `index` or `custom`")),
        }
    }

    pub fn collect_body(bytes: &[u8]) -> Result<Self, ApiError> {
        let b: CollectBody = body(bytes)?;
        let kind = b.kind.as_deref().map(str::trim).filter(|k| !k.is_empty());
        match (kind, b.name, b.term) {
            (Some("vocab") | None, None, Some(term)) | (Some("vocab"), Some(term), None) => Ok(Action::Vocab(term)),
            (kind, Some(name), None) => {
                let kind = kind
                    .map(|k| ElementKind::parse(k).ok_or_else(|| ApiError::bad_request(format!("unknown kind {k:?}"))))
                    .transpose()?;
                Ok(Action::Collect { kind, name })
            }
            _ => Err(ApiError::bad_request("expected `name` (with optional `kind`) or `term`")),
        }
    }

    pub fn answer_body(bytes: &[u8]) -> Result<Self, ApiError> {
        let b: AnswerBody = body(bytes)?;
        let option = parse_option_letter(&b.option).ok_or_else(|| ApiError::bad_request("option must be one of A, B, C or D"))?;
        Ok(Action::Answer { qid: b.qid, option })
    }

    pub fn hint_body(bytes: &[u8]) -> Result<Self, ApiError> {
        Ok(Action::Hint(body::<QidBody>(bytes)?.qid))
    }

    pub fn fifty_body(bytes: &[u8]) -> Result<Self, ApiError> {
        Ok(Action::Fifty(body::<QidBody>(bytes)?.qid))
    }

    pub fn ask_term_body(bytes: &[u8]) -> Result<Self, ApiError> {
        Ok(Action::AskTerm(body::<TermBody>(bytes)?.term))
    }

    pub fn ask_book_body(bytes: &[u8]) -> Result<Self, ApiError> {
        Ok(Action::AskBook(body::<QuestionBody>(bytes)?.question))
    }

    /// Rejects bodies on endpoints that take none, unless empty or `{}`.
    pub fn empty_body(bytes: &[u8], action: Action) -> Result<Self, ApiError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Empty {}
        body::<Empty>(bytes)?;
        Ok(action)
    }
}

/// Applies `action` and returns its JSON result.
pub fn apply(engine: &Engine, s: &mut GameSession, action: Action) -> Result<Value, ApiError> {
    let value = match action {
        Action::Turn => json!(engine.begin_turn(s)?),
        Action::Choose(n) => {
            if !(1..=3).contains(&n) {
                return Err(EngineError::InvalidChoice(format!("choice {n} is not 1, 2 or 3")).into());
            }
            engine.submit_choice(s, Choice::Index(n - 1))?;
            json!({ "chosen": Choice::Index(n - 1) })
        }
        Action::Custom(text) => {
            engine.submit_choice(s, Choice::Custom(text))?;
            json!({ "chosen": s.turns.last().and_then(|t| t.chosen.clone()) })
        }
        Action::Collect { kind, name } => {
            if let Some(kind) = kind {
                let found = s.turns.last().and_then(|t| t.scene.element(&name)).map(|e| e.kind);
                if found.is_some_and(|k| k != kind) {
                    return Err(EngineError::NotInScene(format!("{name} ({})", kind.as_str())).into());
                }
            }
            json!(engine.collect_element(s, &name)?)
        }
        Action::Vocab(term) => json!(engine.collect_vocab(s, &term)?),
        Action::Advance => json!({ "phase": engine.manual_advance(s)? }),
        Action::Defense => {
            engine.start_defense(s)?;
            json!(SessionView::new(s, engine.config()).quiz)
        }
        Action::Answer { qid, option } => json!(engine.answer_question(s, qid, option)?),
        Action::Hint(qid) => json!({ "hint": engine.request_hint(s, qid)? }),
        Action::Fifty(qid) => {
            let kept = engine.use_fifty_fifty(s, qid)?;
            let eliminated: Vec<char> = s
                .quiz
                .as_ref()
                .and_then(|q| q.eliminated.get(&qid))
                .map(|e| e.iter().map(|&i| letter_for(usize::from(i))).collect())
                .unwrap_or_default();
            json!({ "kept": kept.map(|i| letter_for(usize::from(i))), "eliminated": eliminated })
        }
        Action::AskTerm(term) => json!(engine.ask_about_term(s, &term)?),
        Action::AskBook(question) => json!(engine.ask_about_book(s, &question)?),
        Action::Finish => json!(engine.finish_defense(s)?),
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bodies() {
        assert_eq!(Action::choice_body(br#"{"index":2}"#).unwrap(), Action::Choose(2));
        assert_eq!(Action::choice_body(br#"{"custom":"wait"}"#).unwrap(), Action::Custom("wait".into()));
        assert!(Action::choice_body(br#"{"index":2,"custom":"x"}"#).is_err());
        assert!(Action::choice_body(b"{").is_err());
        assert_eq!(Action::collect_body(br#"{"term":"kula"}"#).unwrap(), Action::Vocab("kula".into()));
        assert_eq!(
            Action::collect_body(br#"{"kind":"artifact","name":"mwali"}"#).unwrap(),
            Action::Collect { kind: Some(ElementKind::Artifact), name: "mwali".into() }
        );
        assert!(Action::collect_body(br#"{"kind":"spaceship","name":"x"}"#).is_err());
        assert_eq!(Action::answer_body(br#"{"qid":3,"option":"c"}"#).unwrap(), Action::Answer { qid: 3, option: 2 });
        assert!(Action::answer_body(br#"{"qid":3,"option":"E"}"#).is_err());
        assert!(Action::empty_body(b"", Action::Turn).is_ok());
        assert!(Action::empty_body(br#"{"x":1}"#, Action::Turn).is_err());
        let e = Action::hint_body(br#"{"qid":"one"}"#).unwrap_err();
        assert_eq!((e.code.as_str(), e.status), ("bad_request", 400));
    }
}

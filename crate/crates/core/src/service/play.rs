//! Headless playthroughs driven by a line-oriented script.
//!
//! ```text
//! # comments and blank lines are ignored
//! turn                         begin the next day
//! choose 2                     pick a listed action (1-3)
//! custom wait for the canoes   free-text action
//! collect mwali                collect a tagged element of the current scene
//! collect-artifacts            collect every new artifact of the current scene
//! collect-all                  collect every new element of the current scene
//! vocab kula                   collect a spawned vocabulary term
//! vocab-all                    collect every spawned term of the current day
//! explore [n]                  turn, collect-artifacts, then choose n (default 1)
//! explore-until-review [n] [max-days]
//! advance                      manual jump to review (when enabled)
//! review 2                     read back a past day
//! defense                      generate the quiz
//! answer 3 B                   answer a question
//! answer-rest                  answer open questions with their first live option
//! hint 3 | fifty 3             lifelines
//! ask-term kula | ask-book <question>
//! finish
//! try <command>                run a command, tolerating failure
//! expect-error <code> <command>
//! ```

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::actions::{apply, parse_option_letter, Action};
use super::api_error::ApiError;
use crate::engine::{Engine, GameSession, Phase, Theme};
use crate::narrative::ElementKind;

#[derive(Debug, thiserror::Error)]
pub enum PlayError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: `{command}` failed with {}: {}", error.code, error.message)]
    Step { line: usize, command: String, error: ApiError },
    #[error("line {line}: expected error {expected} from `{command}`, got {got}")]
    Expectation { line: usize, command: String, expected: String, got: String },
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Command {
    Act(Action),
    CollectKind(Option<ElementKind>),
    VocabAll,
    Explore(u8),
    ExploreUntilReview { choice: u8, max_days: u32 },
    Review(u32),
    AnswerRest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Mode {
    Strict,
    Try,
    Expect(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Step {
    line: usize,
    text: String,
    mode: Mode,
    command: Command,
}

/// A parsed script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Script {
    steps: Vec<Step>,
}

fn parse_command(line: usize, text: &str) -> Result<Command, PlayError> {
    let err = |message: String| PlayError::Syntax { line, message };
    let (verb, rest) = text.split_once(char::is_whitespace).map_or((text, ""), |(v, r)| (v, r.trim()));
    let number = |s: &str, what: &str| s.parse::<u32>().map_err(|_| err(format!("{verb}: {what} {s:?} is not a number")));
    let need = |what: &str| if rest.is_empty() { Err(err(format!("{verb} needs {what}"))) } else { Ok(rest.to_string()) };
    let args: Vec<&str> = rest.split_whitespace().collect();
    let choice_arg = |i: usize| -> Result<u8, PlayError> {
        match args.get(i) {
            None => Ok(1),
            Some(s) => match s.parse::<u8>() {
                Ok(n @ 1..=3) => Ok(n),
                _ => Err(err(format!("{verb}: choice {s:?} is not 1, 2 or 3"))),
            },
        }
    };
    let no_args = |c: Command| if rest.is_empty() { Ok(c) } else { Err(err(format!("{verb} takes no arguments"))) };
    Ok(match verb {
        "turn" => no_args(Command::Act(Action::Turn))?,
        "choose" => Command::Act(Action::Choose(choice_arg(0)?)),
        "custom" => Command::Act(Action::Custom(need("text")?)),
        "collect" => Command::Act(Action::Collect { kind: None, name: need("a name")? }),
        "collect-artifacts" => no_args(Command::CollectKind(Some(ElementKind::Artifact)))?,
        "collect-all" => no_args(Command::CollectKind(None))?,
        "vocab" => Command::Act(Action::Vocab(need("a term")?)),
        "vocab-all" => no_args(Command::VocabAll)?,
        "explore" => Command::Explore(choice_arg(0)?),
        "explore-until-review" => Command::ExploreUntilReview {
            choice: choice_arg(0)?,
            max_days: args.get(1).map(|s| number(s, "max-days")).transpose()?.unwrap_or(30),
        },
        "advance" => no_args(Command::Act(Action::Advance))?,
        "review" => Command::Review(number(&need("a day")?, "day")?),
        "defense" => no_args(Command::Act(Action::Defense))?,
        "answer" => match args.as_slice() {
            [qid, letter] => Command::Act(Action::Answer {
                qid: number(qid, "question")?,
                option: parse_option_letter(letter).ok_or_else(|| err(format!("answer: option {letter:?} is not A-D")))?,
            }),
            _ => return Err(err("answer needs a question number and a letter".into())),
        },
        "answer-rest" => no_args(Command::AnswerRest)?,
        "hint" => Command::Act(Action::Hint(number(&need("a question")?, "question")?)),
        "fifty" => Command::Act(Action::Fifty(number(&need("a question")?, "question")?)),
        "ask-term" => Command::Act(Action::AskTerm(need("a term")?)),
        "ask-book" => Command::Act(Action::AskBook(need("a question")?)),
        "finish" => no_args(Command::Act(Action::Finish))?,
        other => return Err(err(format!("unknown command {other:?}"))),
    })
}

impl Script {
    pub fn parse(text: &str) -> Result<Self, PlayError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (mode, body) = if let Some(rest) = t.strip_prefix("try ") {
                (Mode::Try, rest.trim())
            } else if let Some(rest) = t.strip_prefix("expect-error ") {
                let (code, cmd) = rest
                    .trim()
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| PlayError::Syntax { line, message: "expect-error needs a code and a command".into() })?;
                if !super::API_ERROR_CODES.contains(&code) {
                    return Err(PlayError::Syntax { line, message: format!("unknown error code {code:?}") });
                }
                (Mode::Expect(code.to_string()), cmd.trim())
            } else {
                (Mode::Strict, t)
            };
            steps.push(Step { line, text: body.to_string(), mode, command: parse_command(line, body)? });
        }
        Ok(Self { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Outcome of one script line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub line: usize,
    pub command: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ApiError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayReport {
    pub session: GameSession,
    pub steps: Vec<StepRecord>,
}

impl PlayReport {
    /// One line per step, for the CLI.
    pub fn log_lines(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|s| match &s.error {
                None => format!("{:>4}  ok     {}", s.line, s.command),
                Some(e) => format!("{:>4}  {:<6} {} -> {}", s.line, if s.ok { "ok" } else { "failed" }, s.command, e.code),
            })
            .collect()
    }
}

fn element_names(s: &GameSession, kind: Option<ElementKind>) -> Vec<(ElementKind, String)> {
    s.turns
        .last()
        .map(|t| {
            t.scene
                .elements
                .iter()
                .filter(|e| kind.is_none_or(|k| e.kind == k))
                .filter(|e| !s.has_element(e.kind, &e.name))
                .map(|e| (e.kind, e.name.clone()))
                .collect()
        })
        .unwrap_or_default()
}

fn run_command(engine: &Engine, s: &mut GameSession, command: &Command) -> Result<Value, ApiError> {
    match command {
        Command::Act(a) => apply(engine, s, a.clone()),
        Command::CollectKind(kind) => {
            let mut collected = Vec::new();
            for (_, name) in element_names(s, *kind) {
                apply(engine, s, Action::Collect { kind: None, name: name.clone() })?;
                collected.push(name);
            }
            Ok(json!({ "collected": collected, "phase": s.phase }))
        }
        Command::VocabAll => {
            let terms: Vec<String> = s.turns.last().map(|t| t.vocab_spawned.iter().map(|v| v.term.clone()).collect()).unwrap_or_default();
            let mut glosses = serde_json::Map::new();
            for term in terms {
                let v = apply(engine, s, Action::Vocab(term.clone()))?;
                glosses.insert(term, v["gloss"].clone());
            }
            Ok(Value::Object(glosses))
        }
        Command::Explore(choice) => {
            apply(engine, s, Action::Turn)?;
            let collected = run_command(engine, s, &Command::CollectKind(Some(ElementKind::Artifact)))?;
            if s.phase == Phase::Fieldwork {
                apply(engine, s, Action::Choose(*choice))?;
            }
            Ok(json!({ "day": s.day, "collected": collected["collected"], "phase": s.phase }))
        }
        Command::ExploreUntilReview { choice, max_days } => {
            let mut days = 0;
            while s.phase != Phase::Review {
                if days == *max_days {
                    return Err(ApiError::from(crate::engine::EngineError::InvalidInput(format!(
                        "fieldwork still open after {max_days} days"
                    ))));
                }
                run_command(engine, s, &Command::Explore(*choice))?;
                days += 1;
            }
            Ok(json!({ "days": days, "phase": s.phase }))
        }
        Command::Review(day) => Ok(json!(engine.review_day(s, *day)?)),
        Command::AnswerRest => {
            let open: Vec<(u32, u8)> = match &s.quiz {
                Some(q) => q
                    .spec
                    .questions
                    .iter()
                    .filter(|qq| !q.answers.contains_key(&qq.id))
                    .map(|qq| {
                        let gone = q.eliminated.get(&qq.id).copied().unwrap_or([4, 4]);
                        (qq.id, (0..4u8).find(|o| !gone.contains(o)).unwrap_or(0))
                    })
                    .collect(),
                None => Vec::new(),
            };
            let mut last = Value::Null;
            for (qid, option) in open {
                last = apply(engine, s, Action::Answer { qid, option })?;
            }
            Ok(last)
        }
    }
}

/// Plays `script` on a fresh session. Strict steps abort on failure.
pub fn play(engine: &Engine, script: &Script, id: &str, seed: u64, theme: Option<Theme>) -> Result<PlayReport, PlayError> {
    let mut s = engine.new_session(id, seed, theme)?;
    let mut steps = Vec::with_capacity(script.steps.len());
    for step in &script.steps {
        let outcome = run_command(engine, &mut s, &step.command);
        let record = |ok: bool, result: Option<Value>, error: Option<ApiError>| StepRecord {
            line: step.line,
            command: step.text.clone(),
            ok,
            result,
            error,
        };
        match (&step.mode, outcome) {
            (Mode::Expect(code), Ok(_)) => {
                return Err(PlayError::Expectation {
                    line: step.line,
                    command: step.text.clone(),
                    expected: code.clone(),
                    got: "success".into(),
                })
            }
            (Mode::Expect(code), Err(e)) if &e.code != code => {
                return Err(PlayError::Expectation { line: step.line, command: step.text.clone(), expected: code.clone(), got: e.code })
            }
            (Mode::Expect(_), Err(e)) => steps.push(record(true, None, Some(e))),
            (_, Ok(v)) => steps.push(record(true, Some(v), None)),
            (Mode::Try, Err(e)) => steps.push(record(false, None, Some(e))),
            (Mode::Strict, Err(e)) => return Err(PlayError::Step { line: step.line, command: step.text.clone(), error: e }),
        }
    }
    Ok(PlayReport { session: s, steps })
}

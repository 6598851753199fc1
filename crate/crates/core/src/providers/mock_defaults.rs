//! Grammar-valid default completions for unscripted mock requests.
//!
//! Each default reads the labelled sections of the rendered template
//! (`DAY:`, `SOURCE PASSAGES:`, `COLLECTED VOCABULARY:` ...) and builds an
//! answer from them plus fixed Trobriand-themed pools. Randomness is seeded
//! from the request digest, so the output is a pure function of the request.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ChatRequest;
use crate::text::sentences;

pub(crate) fn respond(req: &ChatRequest, digest: &str) -> String {
    let mut rng = rng_for(digest);
    let user = req.user.as_str();
    match req.template.as_deref() {
        Some("quiz") => quiz(user, &mut rng),
        Some("hint") => hint(user),
        Some("book_qa") => book_answer(user),
        Some("term_lookup") => term_explanation(user),
        Some("gloss_fill") => gloss(user),
        Some("summarize") => summary(user),
        _ => scene(user, &mut rng),
    }
}

fn rng_for(digest: &str) -> ChaCha8Rng {
    let seed = u64::from_str_radix(digest.get(..16).unwrap_or("0"), 16).unwrap_or(0);
    ChaCha8Rng::seed_from_u64(seed)
}

fn field<'a>(user: &'a str, label: &str) -> Option<&'a str> {
    user.lines()
        .find_map(|l| l.strip_prefix(label).and_then(|rest| rest.strip_prefix(':')))
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

/// `- item` lines directly under `label:`.
fn list_section(user: &str, label: &str) -> Vec<String> {
    let mut lines = user.lines().skip_while(|l| l.trim() != format!("{label}:"));
    lines.next();
    lines
        .map_while(|l| l.strip_prefix("- "))
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Texts of the `[chunk N]` blocks under `SOURCE PASSAGES:`.
fn passages(user: &str) -> Vec<String> {
    let Some(start) = user.find("SOURCE PASSAGES:") else { return Vec::new() };
    let mut out: Vec<String> = Vec::new();
    let mut current: Option<String> = None;
    for line in user[start..].lines().skip(1) {
        if line.starts_with("[chunk ") && line.ends_with(']') {
            if let Some(text) = current.take() {
                out.push(text.trim().to_string());
            }
            current = Some(String::new());
        } else if let Some(text) = current.as_mut() {
            text.push_str(line);
            text.push('\n');
        }
    }
    if let Some(text) = current {
        out.push(text.trim().to_string());
    }
    out.retain(|t| !t.is_empty());
    out
}

const OPENINGS: &[&str] = &[
    "Day {d} began with voices drifting in from the yam gardens.",
    "On day {d} the lagoon lay flat and bright when you stepped out of the tent.",
    "Rain drummed on the tent on the morning of day {d}, then cleared as suddenly as it came.",
    "By the morning of day {d} the children had stopped staring at you.",
];

const ARTIFACTS: &[(&str, &str)] = &[
    ("mwali", "The headman showed you a pair of {tag} armshells, polished white and hung with tiny shells."),
    ("soulava", "A visitor from the south wore a long {tag} necklace of red shell discs."),
    ("lime pot", "An old man tapped his {tag} with a spatula while he told the story of his partners."),
    ("prow board", "Carvers were finishing a {tag} painted red, white and black."),
    ("pandanus streamer", "A {tag} fluttered from the mast of the newest canoe."),
    ("axe blade", "A polished ceremonial {tag} lay wrapped in leaves, too precious ever to cut wood."),
    ("digging stick", "A woman handed you her {tag} and laughed at your first clumsy attempt."),
    ("yam basket", "Children dragged a heavy {tag} towards the storehouse."),
];

const INSIGHTS: &[(&str, &str)] = &[
    ("gift without haggling", "You noted the rule of the {tag}: nobody bargained over the valuables."),
    ("harvest obligation", "Your notebook filled with the {tag} that binds a man to his sister's household."),
    ("inherited partnership", "The headman explained that an {tag} outlives the men who first made it."),
    ("spell and labour", "You began to see that {tag} belong together in every garden."),
];

const EXPRESSIONS: &[(&str, &str)] = &[
    ("kula", "Everyone kept using the word {tag} when they spoke of their distant partners."),
    ("gimwali", "A young man dismissed a trade as mere {tag}, and the others laughed."),
    ("megwa", "At dusk the builder murmured {tag} over the lashings of the hull."),
    ("baloma", "An old woman warned you that the {tag} were watching the harvest."),
    ("vaygu'a", "The word {tag} was whispered whenever the valuables were brought out."),
];

const CLOSINGS: &[&str] = &[
    "You wrote until the lamp burned low.",
    "The village settled into its evening rhythm around you.",
    "Your interpreter yawned, but you kept asking questions.",
];

const CHOICES: &[&str] = &[
    "Follow the headman to the beach where the canoes are drawn up",
    "Sit with the gardeners and ask about this season's harvest",
    "Ask the carver to explain the patterns on the prow",
    "Join the women carrying yams to the storehouse",
    "Walk to the next village with your interpreter",
    "Write up your notes by the lamp and listen to the evening talk",
    "Ask an elder about the spirits of the dead",
    "Offer tobacco and ask about the last kula voyage",
    "Watch the builder recite spells over the new canoe",
];

fn tagged(sentence: &str, kind: &str, name: &str) -> String {
    sentence.replace("{tag}", &format!("⟦{kind}|{name}⟧"))
}

fn scene(user: &str, rng: &mut ChaCha8Rng) -> String {
    let day: usize = field(user, "DAY").and_then(|d| d.parse().ok()).filter(|&d| d >= 1).unwrap_or(1);
    let (artifact, a_sentence) = ARTIFACTS[(day - 1) % ARTIFACTS.len()];
    let (insight, i_sentence) = INSIGHTS.choose(rng).copied().unwrap_or(INSIGHTS[0]);
    let (expression, e_sentence) = EXPRESSIONS.choose(rng).copied().unwrap_or(EXPRESSIONS[0]);
    let opening = OPENINGS.choose(rng).copied().unwrap_or(OPENINGS[0]).replace("{d}", &day.to_string());
    let closing = CLOSINGS.choose(rng).copied().unwrap_or(CLOSINGS[0]);
    let choices: Vec<&str> = CHOICES.choose_multiple(rng, 3).copied().collect();
    format!(
        "SCENE:\n{opening} {} {} {} {closing}\nCHOICES:\n1. {}\n2. {}\n3. {}\n",
        tagged(a_sentence, "artifact", artifact),
        tagged(i_sentence, "insight", insight),
        tagged(e_sentence, "expression", expression),
        choices[0],
        choices[1],
        choices[2],
    )
}

struct Question {
    category: &'static str,
    stem: String,
    correct: String,
    distractors: Vec<String>,
}

const FALLBACK_VOCAB: &[(&str, &str)] = &[
    ("kula", "ceremonial exchange of shell valuables between island partners"),
    ("gimwali", "ordinary barter of goods, where haggling is allowed"),
    ("megwa", "spoken magic recited over gardens, canoes and valuables"),
    ("baloma", "spirits of the dead who return at harvest"),
    ("waga", "seagoing canoe built for exchange voyages"),
];

const FALSE_GLOSSES: &[&str] = &[
    "a fishing net woven from coconut fibre",
    "the chief's eldest son",
    "a dance performed only at weddings",
    "a tax paid to the colonial government",
    "a type of sweet potato grown on hillsides",
    "the monsoon wind from the north-west",
];

const FALLBACK_ARTIFACTS: &[&str] = &["mwali", "soulava", "lime pot", "prow board"];

const FOREIGN_OBJECTS: &[&str] = &[
    "a brass telescope",
    "a printed map of Sydney",
    "a porcelain tea set",
    "a steel rifle",
    "a gramophone",
    "a bicycle",
];

const FALSE_EVENTS: &[&str] = &[
    "You boarded a steamer back to Europe",
    "A colonial officer confiscated your notebooks",
    "You spent the day alone reading newspapers",
    "The village held a horse race on the beach",
    "You were appointed headman of the village",
    "A storm destroyed every canoe on the island",
];

fn concept_definition(concept: &str) -> String {
    let c = concept.to_lowercase();
    if c.contains("participant") {
        "Living within a community and taking part in daily life while observing it".into()
    } else if c.contains("kula") {
        "A ceremonial ring of exchange in which shell valuables circulate between partners".into()
    } else if c.contains("point of view") {
        "Understanding life as the people themselves see and feel it".into()
    } else {
        format!("A method concept central to the fieldwork: {concept}")
    }
}

fn pick_distinct(pool: &[&str], exclude: &str, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut candidates: Vec<&str> = pool.iter().copied().filter(|p| !p.eq_ignore_ascii_case(exclude)).collect();
    candidates.shuffle(rng);
    candidates.into_iter().take(n).map(str::to_string).collect()
}

fn quiz(user: &str, rng: &mut ChaCha8Rng) -> String {
    let quote = field(user, "QUOTE PASSAGE").unwrap_or("The goal is to grasp the native's point of view.");
    let concept = field(user, "THEORY CONCEPT").unwrap_or("participant observation");

    let mut vocab: Vec<(String, String)> = list_section(user, "COLLECTED VOCABULARY")
        .into_iter()
        .filter_map(|l| l.split_once(':').map(|(t, g)| (t.trim().to_string(), g.trim().to_string())))
        .collect();
    for (t, g) in FALLBACK_VOCAB {
        if vocab.len() >= 3 {
            break;
        }
        if !vocab.iter().any(|(v, _)| v.eq_ignore_ascii_case(t)) {
            vocab.push((t.to_string(), g.to_string()));
        }
    }
    let mut artifacts = list_section(user, "COLLECTED ARTIFACTS");
    for a in FALLBACK_ARTIFACTS {
        if artifacts.len() >= 2 {
            break;
        }
        if !artifacts.iter().any(|x| x.eq_ignore_ascii_case(a)) {
            artifacts.push(a.to_string());
        }
    }
    let mut scenes = list_section(user, "SCENES");
    if scenes.is_empty() {
        scenes.push("Day 1: You pitched your tent among the village houses.".into());
    }

    let mut questions = vec![
        Question {
            category: "book_quote",
            stem: format!("\"{quote}\" Which statement does this passage support?"),
            correct: "It records an observation from the ethnographic source".into(),
            distractors: vec![
                "It is a rule invented for the game".into(),
                "It describes life in a European city".into(),
                "It quotes a colonial newspaper".into(),
            ],
        },
        Question {
            category: "theory",
            stem: format!("Which best describes {concept}?"),
            correct: concept_definition(concept),
            distractors: vec![
                "Studying a culture only through questionnaires sent by post".into(),
                "Comparing museum collections without visiting the field".into(),
                "Trading goods for the highest possible profit".into(),
            ],
        },
    ];
    for (term, gloss) in vocab.iter().take(3) {
        let mut distractors: Vec<String> = vocab
            .iter()
            .filter(|(t, g)| t != term && g != gloss)
            .map(|(_, g)| g.clone())
            .collect();
        distractors.extend(pick_distinct(FALSE_GLOSSES, gloss, 3, rng));
        distractors.dedup();
        questions.push(Question {
            category: "vocabulary",
            stem: format!("What does the expression \"{term}\" mean?"),
            correct: gloss.clone(),
            distractors,
        });
    }
    for name in artifacts.iter().take(2) {
        questions.push(Question {
            category: "artifact",
            stem: "Which of these objects did you collect during your fieldwork?".into(),
            correct: name.clone(),
            distractors: pick_distinct(FOREIGN_OBJECTS, name, 3, rng),
        });
    }
    for i in 0..3 {
        let line = &scenes[i % scenes.len()];
        let (label, text) = line.split_once(':').unwrap_or(("Day 1", line));
        let first = sentences(text).first().copied().unwrap_or(text).trim().to_string();
        let stem = match i / scenes.len() {
            0 => format!("What happened on {} of your fieldwork?", label.trim().to_lowercase()),
            _ => format!("Which event belongs to {} of your fieldwork (question {})?", label.trim().to_lowercase(), i + 1),
        };
        questions.push(Question {
            category: "narrative",
            stem,
            correct: first.trim_end_matches('.').to_string(),
            distractors: pick_distinct(FALSE_EVENTS, &first, 3, rng),
        });
    }

    questions.shuffle(rng);
    let mut out = String::new();
    for (n, q) in questions.into_iter().enumerate() {
        let mut options: Vec<String> = vec![q.correct.clone()];
        for d in q.distractors {
            if options.len() == 4 {
                break;
            }
            if !options.iter().any(|o| o.eq_ignore_ascii_case(&d)) {
                options.push(d);
            }
        }
        let mut filler = 1;
        while options.len() < 4 {
            let f = format!("None of the other options ({filler})");
            filler += 1;
            if !options.contains(&f) {
                options.push(f);
            }
        }
        let correct_at = rng.gen_range(0..4);
        options.swap(0, correct_at);
        out.push_str(&format!("Q{} [{}] {}\n", n + 1, q.category, q.stem));
        for (i, o) in options.iter().enumerate() {
            out.push_str(&format!("{}) {}\n", (b'A' + i as u8) as char, o));
        }
        out.push_str(&format!("ANSWER: {}\n\n", (b'A' + correct_at as u8) as char));
    }
    out
}

fn first_words(text: &str, n: usize) -> String {
    text.split_whitespace().take(n).collect::<Vec<_>>().join(" ")
}

fn hint(user: &str) -> String {
    let p = passages(user);
    match p.iter().find_map(|t| quotable(t)) {
        Some(sentence) => format!(
            "Think back to what you saw in the field; the source touches on this where it says \"{}\".",
            first_words(sentence, 8)
        ),
        None => "Think back to the scenes where this came up during your fieldwork.".into(),
    }
}

/// A whole sentence worth quoting. Chunks are cut at character offsets, so
/// a leading fragment (starting lowercase) is skipped.
fn quotable(text: &str) -> Option<&str> {
    sentences(text).into_iter().find(|s| {
        s.split_whitespace().count() >= 6 && !s.contains('"') && !s.starts_with(|c: char| c.is_lowercase())
    })
}

fn book_answer(user: &str) -> String {
    let p = passages(user);
    match p.iter().find_map(|t| quotable(t)) {
        Some(sentence) => format!("The passages speak to this directly: \"{sentence}\""),
        None => "The retrieved passages do not answer this question.".into(),
    }
}

fn term_explanation(user: &str) -> String {
    let term = field(user, "TERM").unwrap_or("this term");
    let p = passages(user);
    let lower = term.to_lowercase();
    let hit = p
        .iter()
        .flat_map(|t| sentences(t))
        .find(|s| s.to_lowercase().contains(&lower))
        .or_else(|| p.first().and_then(|t| quotable(t)));
    match hit {
        Some(s) => format!("\"{term}\" comes up in the source text: \"{s}\""),
        None => format!("The source passages say little about \"{term}\"."),
    }
}

fn gloss(user: &str) -> String {
    let term = field(user, "TERM").unwrap_or("term");
    format!("local expression recorded in the field ({term})")
}

fn summary(user: &str) -> String {
    let scene = field(user, "SCENE TEXT").unwrap_or("");
    let words: Vec<&str> = scene.split_whitespace().collect();
    if words.len() >= 40 {
        return words[..words.len().min(50)].join(" ");
    }
    let mut out = words.join(" ");
    out.push_str(" A field camp beside a calm lagoon on the Trobriand Islands, palm-thatched houses, yam storehouses, outrigger canoes drawn up on white sand, islanders shown as dark silhouettes going about their daily work, and Malinowski in white shirt and pith helmet standing among them with an open notebook, watching closely as the afternoon light falls across the village clearing.");
    first_words(&out, 55)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_default_artifact_follows_day() {
        let mut rng = rng_for("00");
        let s = scene("DAY: 2\n", &mut rng);
        assert!(s.contains("⟦artifact|soulava⟧"), "{s}");
        assert!(s.contains("CHOICES:\n1. "));
    }

    #[test]
    fn sections_are_read() {
        let user = "COLLECTED VOCABULARY:\n- kula: exchange\n- waga: canoe\n\nSOURCE PASSAGES:\n[chunk 3]\nOne two three four five six seven.\n\n[chunk 4]\nSecond passage here.\n";
        assert_eq!(list_section(user, "COLLECTED VOCABULARY"), vec!["kula: exchange", "waga: canoe"]);
        assert_eq!(passages(user), vec!["One two three four five six seven.", "Second passage here."]);
    }

    #[test]
    fn summary_is_in_window() {
        let short = summary("SCENE TEXT: A short scene.");
        let n = short.split_whitespace().count();
        assert!((40..=60).contains(&n), "{n}");
    }
}

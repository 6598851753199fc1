use serde::{Deserialize, Serialize};

use super::{NarrativeError, Result};
use crate::providers::IMAGE_PREFIX;
use crate::text::sentences;

pub const EXCERPT_MIN_WORDS: usize = 40;
pub const EXCERPT_MAX_WORDS: usize = 60;

const STYLE: &str = "Rendered as an early-1990s point-and-click adventure game screen: 320x240 canvas, about 32 colours, \
    1-px dark outlines, classic ordered dithering for mid-tones, no smooth gradients or bloom.";
const FIGURES: &str = "Islanders must appear as dark silhouettes; Malinowski in full detail.";
const LIMITS: &str = "No text, no UI, no modern effects. Show only practices and objects described in the ethnographic \
    record, nothing fantastical.";
const ARTIFACT_STYLE: &str = "Single object centred on a plain woven mat, 320x240 canvas, about 32 colours, 1-px dark \
    outlines, dithered shading, no text.";

// appended when an excerpt is too short to reach the minimum length
const SETTING_PAD: &str = "The scene is set in a Trobriand village beside a calm lagoon, with palm-thatched houses, \
    yam storehouses and outrigger canoes drawn up on the white sand, while the ethnographer watches with a notebook \
    in hand as islanders go about their work.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImagePromptInput {
    pub day_number: u32,
    pub narrative_excerpt: String,
    pub new_artifact_names: Vec<String>,
}

/// One scene prompt plus one prompt per newly seen artifact, each on a
/// single line starting with `pixel-art:`.
pub fn distill_image_prompt(input: &ImagePromptInput) -> Result<Vec<String>> {
    if input.day_number < 1 {
        return Err(NarrativeError::InvalidDayNumber);
    }
    let excerpt = collapse(&input.narrative_excerpt);
    let words = excerpt.split_whitespace().count();
    if !(EXCERPT_MIN_WORDS..=EXCERPT_MAX_WORDS).contains(&words) {
        return Err(NarrativeError::InvalidExcerpt { words });
    }
    let mut lines = vec![format!(
        "{IMAGE_PREFIX} Day {} of fieldwork on the Trobriand Islands, 1915. {excerpt} {} {FIGURES} {LIMITS}",
        input.day_number,
        collapse(STYLE),
    )];
    for name in &input.new_artifact_names {
        lines.push(format!(
            "{IMAGE_PREFIX} Close-up of the Trobriand artifact \"{}\" as recorded in the ethnography. {}",
            collapse(name),
            collapse(ARTIFACT_STYLE),
        ));
    }
    Ok(lines)
}

/// Brings a scene description into the 40–60 word window without a model
/// call: a usable `summary` wins, then whole leading sentences, then a
/// word cut; short text is padded with a neutral setting description.
pub fn fit_excerpt(description: &str, summary: Option<&str>) -> String {
    let in_window = |s: &str| (EXCERPT_MIN_WORDS..=EXCERPT_MAX_WORDS).contains(&s.split_whitespace().count());
    let description = collapse(description);
    if in_window(&description) {
        return description;
    }
    if let Some(s) = summary.map(collapse).filter(|s| in_window(s)) {
        return s;
    }
    let mut words: Vec<&str> = Vec::new();
    for sentence in sentences(&description) {
        let n = sentence.split_whitespace().count();
        if words.len() + n > EXCERPT_MAX_WORDS {
            break;
        }
        words.extend(sentence.split_whitespace());
    }
    if words.len() < EXCERPT_MIN_WORDS {
        words = description.split_whitespace().take(EXCERPT_MAX_WORDS).collect();
    }
    let mut pad = SETTING_PAD.split_whitespace().cycle();
    while words.len() < EXCERPT_MIN_WORDS + 5 && words.len() < EXCERPT_MAX_WORDS {
        words.extend(pad.next());
    }
    words.join(" ")
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    fn input(n: usize, artifacts: &[&str]) -> ImagePromptInput {
        ImagePromptInput {
            day_number: 3,
            narrative_excerpt: words(n),
            new_artifact_names: artifacts.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn one_artifact_gives_two_prefixed_lines() {
        let lines = distill_image_prompt(&input(50, &["mwali"])).unwrap();
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| l.starts_with("pixel-art:") && !l.contains('\n')));
        let scene = &lines[0];
        for needle in ["320x240", "32 colours", "1-px", "dithering", "as dark silhouettes; Malinowski in full detail"] {
            assert!(scene.contains(needle), "missing {needle}");
        }
        assert!(lines[1].contains("mwali"));
    }

    #[test]
    fn no_artifacts_one_line() {
        assert_eq!(distill_image_prompt(&input(40, &[])).unwrap().len(), 1);
    }

    #[test]
    fn excerpt_bounds() {
        assert_eq!(distill_image_prompt(&input(39, &[])), Err(NarrativeError::InvalidExcerpt { words: 39 }));
        assert_eq!(distill_image_prompt(&input(61, &[])), Err(NarrativeError::InvalidExcerpt { words: 61 }));
        assert!(distill_image_prompt(&input(60, &[])).is_ok());
        let mut zero = input(50, &[]);
        zero.day_number = 0;
        assert_eq!(distill_image_prompt(&zero), Err(NarrativeError::InvalidDayNumber));
    }

    #[test]
    fn fit_prefers_summary_then_sentences() {
        let long = format!("{}. {}. {}.", words(30), words(25), words(30));
        assert_eq!(fit_excerpt(&long, Some(&words(45))), words(45));
        let cut = fit_excerpt(&long, None);
        assert_eq!(cut.split_whitespace().count(), 55);
        assert!(cut.ends_with('.'));
    }

    proptest! {
        #[test]
        fn line_count_matches_artifacts(n in 40usize..=60, names in prop::collection::vec("[a-z ]{1,12}", 0..6)) {
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let lines = distill_image_prompt(&input(n, &refs)).unwrap();
            prop_assert_eq!(lines.len(), 1 + names.len());
        }

        #[test]
        fn fitted_excerpt_always_in_window(text in "([a-z]{1,7}[ .]{1,2}){0,120}", summary in prop::option::of("([a-z]{1,6} ){0,80}")) {
            let out = fit_excerpt(&text, summary.as_deref());
            let n = out.split_whitespace().count();
            prop_assert!((EXCERPT_MIN_WORDS..=EXCERPT_MAX_WORDS).contains(&n), "{} words", n);
        }
    }
}

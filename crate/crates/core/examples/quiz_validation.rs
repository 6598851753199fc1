//! Parse a ten-question quiz and check its category mix.

use fieldwork::narrative::{parse_quiz, validate_quiz_composition};

fn quiz(categories: &[&str]) -> String {
    categories
        .iter()
        .enumerate()
        .map(|(i, c)| format!("Q{n} [{c}] Question {n}?\nA) one\nB) two\nC) three\nD) four\nANSWER: {}\n", ["A", "B", "C", "D"][i % 4], n = i + 1))
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cats = vec![
        "book quote", "theory", "vocabulary", "vocabulary", "vocabulary", "artifact", "artifact", "narrative", "narrative", "narrative",
    ];
    let good = parse_quiz(&quiz(&cats))?;
    validate_quiz_composition(&good)?;
    println!("valid quiz: {:?}", good.histogram());

    cats[9] = "theory";
    let bad = parse_quiz(&quiz(&cats))?;
    match validate_quiz_composition(&bad) {
        Ok(()) => println!("unexpectedly valid"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}

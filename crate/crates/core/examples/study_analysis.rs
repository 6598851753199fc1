//! SUS, quiz and cost reports over the bundled study data.

use fieldwork::analytics::{read_costs, read_likert, read_quiz_scores, CostReport, QuizReport, SusReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sus = SusReport::compute(&read_likert(include_str!("../assets/study/sus_responses.csv").as_bytes())?)?;
    println!("{}", sus.to_text());
    let quiz = QuizReport::compute(read_quiz_scores(include_str!("../assets/study/quiz_scores.csv").as_bytes())?)?;
    println!("{}", quiz.to_text());
    let cost = CostReport::compute(&read_costs(include_str!("../assets/study/costs.csv").as_bytes())?)?;
    println!("{}", cost.to_text());
    Ok(())
}

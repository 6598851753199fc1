//! Play the bundled script offline against the mock provider and print the
//! step log.

use fieldwork::service::{build_engine, play, Script, ServiceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ServiceConfig::default();
    config.server.image_dir = None;
    let engine = build_engine(&config)?;
    let script = Script::parse(include_str!("../assets/scripts/golden.play"))?;
    let report = play(&engine, &script, "example", 42, None)?;
    for line in report.log_lines() {
        println!("{line}");
    }
    let s = &report.session;
    println!("\nphase {}, {} days, {} artifacts, quiz {}/10", s.phase, s.turns.len(), s.distinct_artifacts(), s.quiz.as_ref().map_or(0, |q| q.score));
    Ok(())
}

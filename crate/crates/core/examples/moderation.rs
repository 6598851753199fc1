//! Screen free-text choices with the bundled denylist and the mock
//! provider's moderation endpoint.

use fieldwork::assets::DENYLIST;
use fieldwork::providers::{moderate, Denylist, FailurePolicy, MockBackend};

fn main() {
    let denylist = Denylist::parse(DENYLIST);
    let provider = MockBackend::new().with_moderation_rule("burn the village", "violence");
    for text in ["Sit with the carvers until dusk", "kill them all", "Burn the village down", "Ask the chief about his armshells"] {
        let v = moderate(text, &denylist, Some(&provider), FailurePolicy::FailClosed);
        if v.allowed {
            println!("allowed   {text}");
        } else {
            println!("rejected  {text}  ({}, {:?})", v.reason(), v.source);
        }
    }
}

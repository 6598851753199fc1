//! Render the scene prompt from the built-in templates and parse a
//! completion in the scene grammar.

use fieldwork::narrative::{parse_scene, render_template, Bindings, TemplateSet};

const COMPLETION: &str = "SCENE:
The canoes come in at dusk. An old man lifts a ⟦artifact|mwali⟧ from the platform
and speaks of the ⟦expression|kula⟧ with pride.

CHOICES:
1. Follow the old man to his house
2. Visit the yam gardens
3. Write up the day in your diary
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let templates = TemplateSet::builtin();
    println!("templates: {}", templates.names().collect::<Vec<_>>().join(", "));
    let scene_template = templates.get("scene")?;
    let bindings: Bindings = scene_template
        .placeholders()
        .into_iter()
        .map(|p| {
            let value = format!("<{p}>");
            (p, value)
        })
        .collect();
    let req = render_template(&templates, "scene", &bindings)?;
    println!("system prompt: {} chars, user prompt: {} chars", req.system.len(), req.user.len());

    let scene = parse_scene(COMPLETION)?;
    println!("\n{}\n", scene.description);
    for (i, c) in scene.choices.iter().enumerate() {
        println!("{}. {c}", i + 1);
    }
    for e in &scene.elements {
        println!("[{}] {}: {}", e.kind.as_str(), e.name, e.snippet);
    }
    Ok(())
}

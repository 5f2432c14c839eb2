//! Renders a modified corpus scene to SVG and PNG in a temporary directory.

use scenaug::corpus::synthetic_corpus;
use scenaug::render::{rasterize, render_bev, RenderStyle};
use std::collections::BTreeSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let item = synthetic_corpus().remove(0);
    let modified: BTreeSet<String> = item
        .expected
        .agents
        .iter()
        .filter(|a| !item.scenario.agents.contains(a))
        .map(|a| a.id.clone())
        .collect();
    let rendered = render_bev(&item.expected, &modified, &RenderStyle::default());
    let png = rasterize(&rendered.svg, 512)?;

    let dir = std::env::temp_dir().join("scenaug-render-example");
    std::fs::create_dir_all(&dir)?;
    let id = &item.expected.scenario_id;
    std::fs::write(dir.join(format!("{id}.svg")), &rendered.svg)?;
    std::fs::write(dir.join(format!("{id}.png")), &png)?;
    println!(
        "{id}: highlighted {modified:?}, view half-width {:.1} m, {} clipped, written to {}",
        rendered.extent,
        rendered.clipped_agents,
        dir.display()
    );
    Ok(())
}

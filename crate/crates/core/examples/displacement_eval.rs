//! Matches generated agents to reference agents and reports the mean
//! displacement, then labels the error of a perturbed placement.

use scenaug::corpus::synthetic_corpus;
use scenaug::eval::{classify_errors, displacement_error, ErrorThresholds};
use scenaug::geometry::Point;

fn main() {
    let item = synthetic_corpus().remove(3);
    let reference = &item.expected.agents;

    let exact = displacement_error(reference, reference);
    println!("identical: mean {:?} m", exact.mean_m);

    let mut generated = reference.clone();
    if let Some(last) = generated.last_mut() {
        last.center = last.center + Point::new(6.0, 2.5);
    }
    let report = displacement_error(&generated, reference);
    println!("perturbed: mean {:.3} m, max {:.3} m", report.mean_m.unwrap_or(0.0), report.max_m.unwrap_or(0.0));
    for pair in &report.pairs {
        println!("  {} -> {}: {:.3} m", pair.generated, pair.reference, pair.distance_m);
    }
    let labels = classify_errors(&generated, reference, &item.scenario, &ErrorThresholds::default());
    for l in labels {
        println!("  {}: {:?} {}", l.agent_id, l.category, l.detail);
    }
}

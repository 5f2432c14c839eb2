//! Anchors points along a lane by arc length, as the function-calling
//! strategy does, on both a straight and a curved lane.

use scenaug::corpus::{reference_scenario, synthetic_corpus};
use scenaug::geometry::{lane_point_tool, offset_point};
use scenaug::prompt::format_tool_result;

fn main() {
    let s = reference_scenario();
    for d in [0.0, 21.4, 50.0, 150.0] {
        println!("Lane1 @ {d:>5} m -> {}", format_tool_result(&lane_point_tool(&s, "Lane1", d)));
    }
    // one lateral metre to the left of the 21.4 m anchor
    if let Ok(a) = lane_point_tool(&s, "Lane1", 21.4) {
        let p = offset_point(&a, 1.0);
        println!("left offset: ({:.3}, {:.3})", p.x, p.y);
    }

    let curved = synthetic_corpus().into_iter().nth(1).expect("corpus item").scenario;
    for lane in &curved.lanes {
        let len = lane.geometry.length();
        println!("{} ({len:.1} m) midpoint -> {}", lane.id, format_tool_result(&lane_point_tool(&curved, &lane.id, len / 2.0)));
    }
}

//! Top-down (BEV) rendering to SVG and PNG.
//!
//! Image space uses one unit per metre with `u = x`, `v = -y`; framing is
//! carried entirely by the `viewBox`, so the world-to-image map is an exact
//! negation of `y`.

use crate::geometry::Point;
use crate::scenario::{AgentType, AreaKind, Scenario};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("raster error: {0}")]
    Raster(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderStyle {
    pub ego_color: String,
    pub modified_agent_color: String,
    pub other_agent_color: String,
    pub drivable_fill: String,
    pub walkway_fill: String,
    pub carpark_fill: String,
    pub other_area_fill: String,
    pub background: String,
    pub lane_color: String,
    pub grid_color: String,
    pub grid_spacing: f64,
    /// Half-width of the square view around the ego, metres.
    pub extent: f64,
    /// Margin kept around modified agents when the view grows.
    pub margin: f64,
    /// Nominal SVG width/height attribute.
    pub canvas_px: u32,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            ego_color: "#ff0000".into(),
            modified_agent_color: "#0000ff".into(),
            other_agent_color: "#404040".into(),
            drivable_fill: "#808080".into(),
            walkway_fill: "#808000".into(),
            carpark_fill: "#a0a0a0".into(),
            other_area_fill: "#d0d0d0".into(),
            background: "#ffffff".into(),
            lane_color: "#ffffff".into(),
            grid_color: "#c0c0c0".into(),
            grid_spacing: 5.0,
            extent: 60.0,
            margin: 10.0,
            canvas_px: 800,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub svg: Vec<u8>,
    /// Agents whose centre fell outside the view and were not drawn.
    pub clipped_agents: usize,
    pub center: Point,
    pub extent: f64,
}

pub fn world_to_image(p: Point) -> (f64, f64) {
    (p.x, -p.y)
}

pub fn image_to_world(u: f64, v: f64) -> Point {
    Point::new(u, -v)
}

/// Three decimals, no negative zero.
fn n(v: f64) -> String {
    crate::scenario::fmt3(v)
}

fn polygon_points(points: &[Point]) -> String {
    points
        .iter()
        .map(|p| {
            let (u, v) = world_to_image(*p);
            format!("{},{}", n(u), n(v))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Half-width of the view: the style extent, grown so that every modified
/// agent keeps `margin` metres to the border.
pub fn view_extent(s: &Scenario, modified_ids: &BTreeSet<String>, style: &RenderStyle, center: Point) -> f64 {
    s.agents
        .iter()
        .filter(|a| modified_ids.contains(&a.id))
        .map(|a| (a.center.x - center.x).abs().max((a.center.y - center.y).abs()) + style.margin)
        .fold(style.extent, f64::max)
}

pub fn render_bev(s: &Scenario, modified_ids: &BTreeSet<String>, style: &RenderStyle) -> Rendered {
    let center = s.ego().map_or(Point::default(), |e| e.center);
    let e = view_extent(s, modified_ids, style, center);
    let (x0, x1, y0, y1) = (center.x - e, center.x + e, center.y - e, center.y + e);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{px}\" height=\"{px}\" viewBox=\"{} {} {} {}\">",
        n(x0),
        n(-y1),
        n(2.0 * e),
        n(2.0 * e),
        px = style.canvas_px
    );
    let _ = writeln!(
        out,
        "<rect class=\"background\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
        n(x0),
        n(-y1),
        n(2.0 * e),
        n(2.0 * e),
        style.background
    );

    out.push_str("<g class=\"areas\">\n");
    // Walkways are painted last so they sit on top of drivable area.
    let order = [AreaKind::Other, AreaKind::Carpark, AreaKind::Drivable, AreaKind::Walkway];
    for kind in order {
        let fill = match kind {
            AreaKind::Drivable => &style.drivable_fill,
            AreaKind::Walkway => &style.walkway_fill,
            AreaKind::Carpark => &style.carpark_fill,
            AreaKind::Other => &style.other_area_fill,
        };
        for a in s.areas.iter().filter(|a| a.kind == kind) {
            let _ = writeln!(
                out,
                "<polygon class=\"area {}\" data-id=\"{}\" points=\"{}\" fill=\"{fill}\"/>",
                kind.as_str().to_ascii_lowercase(),
                xml_escape(&a.id),
                polygon_points(&a.boundary)
            );
        }
    }
    out.push_str("</g>\n<g class=\"lanes\">\n");
    let lanes = s
        .lanes
        .iter()
        .map(|l| (&l.id, &l.geometry))
        .chain(s.connectors.iter().map(|c| (&c.id, &c.geometry)));
    for (id, g) in lanes {
        let pts = g.sample(1.0).unwrap_or_default();
        let _ = writeln!(
            out,
            "<polyline class=\"lane\" data-id=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"0.15\" stroke-dasharray=\"1.5 1.5\"/>",
            xml_escape(id),
            polygon_points(&pts),
            style.lane_color
        );
    }
    out.push_str("</g>\n<g class=\"grid\">\n");
    if style.grid_spacing > 0.0 {
        let g = style.grid_spacing;
        let mut k = (x0 / g).ceil() as i64;
        while (k as f64) * g <= x1 + 1e-9 {
            let x = k as f64 * g;
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"0.05\"/>",
                n(x),
                n(-y1),
                n(x),
                n(-y0),
                style.grid_color
            );
            k += 1;
        }
        let mut k = (y0 / g).ceil() as i64;
        while (k as f64) * g <= y1 + 1e-9 {
            let y = k as f64 * g;
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"0.05\"/>",
                n(x0),
                n(-y),
                n(x1),
                n(-y),
                style.grid_color
            );
            k += 1;
        }
    }
    out.push_str("</g>\n<g class=\"agents\">\n");
    let mut clipped = 0;
    // Ego is drawn last so nothing hides it.
    let mut agents: Vec<_> = s.agents.iter().collect();
    agents.sort_by_key(|a| a.agent_type == AgentType::EgoVehicle);
    for a in agents {
        if a.center.x < x0 || a.center.x > x1 || a.center.y < y0 || a.center.y > y1 {
            clipped += 1;
            continue;
        }
        let (role, fill) = if a.agent_type == AgentType::EgoVehicle {
            ("ego", &style.ego_color)
        } else if modified_ids.contains(&a.id) {
            ("modified", &style.modified_agent_color)
        } else {
            ("other", &style.other_agent_color)
        };
        let (u, v) = world_to_image(a.center);
        let _ = writeln!(
            out,
            "<rect class=\"agent {role}\" data-id=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" transform=\"translate({} {}) rotate({})\" fill=\"{fill}\" stroke=\"#000000\" stroke-width=\"0.1\"/>",
            xml_escape(&a.id),
            n(-a.length / 2.0),
            n(-a.width / 2.0),
            n(a.length),
            n(a.width),
            n(u),
            n(v),
            n(-a.heading.to_degrees())
        );
    }
    out.push_str("</g>\n</svg>\n");
    if clipped > 0 {
        log::info!("{}: {clipped} agent(s) outside the view", s.scenario_id);
    }
    Rendered {
        svg: out.into_bytes(),
        clipped_agents: clipped,
        center,
        extent: e,
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub const MIN_PIXELS: u32 = 64;
pub const MAX_PIXELS: u32 = 4096;

/// Square PNG of an SVG document.
pub fn rasterize(svg: &[u8], pixels: u32) -> Result<Vec<u8>, RenderError> {
    if !(MIN_PIXELS..=MAX_PIXELS).contains(&pixels) {
        return Err(RenderError::Raster(format!(
            "pixel size {pixels} outside {MIN_PIXELS}..={MAX_PIXELS}"
        )));
    }
    let opt = resvg::usvg::Options::default();
    let tree = resvg::usvg::Tree::from_data(svg, &opt).map_err(|e| RenderError::Raster(e.to_string()))?;
    let size = tree.size();
    let mut pixmap = resvg::tiny_skia::Pixmap::new(pixels, pixels)
        .ok_or_else(|| RenderError::Raster("cannot allocate pixmap".into()))?;
    let transform = resvg::tiny_skia::Transform::from_scale(
        pixels as f32 / size.width(),
        pixels as f32 / size.height(),
    );
    resvg::render(&tree, transform, &mut pixmap.as_mut());
    pixmap.encode_png().map_err(|e| RenderError::Raster(e.to_string()))
}

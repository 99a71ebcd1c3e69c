//! Static SVG pictures of a scenario, an optional path and sample scatter.

use std::fmt::Write;

use glsampler::{forward_kinematics, ChainSpec, Configuration, Path};
use nalgebra::Point2;

use crate::scenario::Scenario;

const START_COLOR: &str = "#1f4fd1";
const GOAL_COLOR: &str = "#d12a1f";
const SWEEP_COLOR: &str = "#7a7a7a";
const SAMPLE_COLOR: &str = "#2a9d4b";
/// Pixels per world unit.
const SCALE: f64 = 40.0;
const MARGIN: f64 = 1.0;

struct Frame {
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn px(&self, p: Point2<f64>) -> (f64, f64) {
        ((p.x - self.min_x) * SCALE, (self.max_y - p.y) * SCALE)
    }
}

fn frame(s: &Scenario) -> Frame {
    let reach = s.chain.reach();
    let base = s.chain.base();
    let (mut min_x, mut max_x) = (base.x - reach, base.x + reach);
    let (mut min_y, mut max_y) = (base.y - reach, base.y + reach);
    for c in &s.obstacles {
        min_x = min_x.min(c.cx - c.r);
        max_x = max_x.max(c.cx + c.r);
        min_y = min_y.min(c.cy - c.r);
        max_y = max_y.max(c.cy + c.r);
    }
    min_x -= MARGIN;
    max_y += MARGIN;
    Frame {
        min_x,
        max_y,
        width: (max_x + MARGIN - min_x) * SCALE,
        height: (max_y - (min_y - MARGIN)) * SCALE,
    }
}

fn polyline(
    out: &mut String,
    f: &Frame,
    spec: &ChainSpec,
    q: &Configuration,
    color: &str,
    width: f64,
    class: &str,
) {
    let pose = forward_kinematics(spec, q).expect("scenario configurations match the chain");
    let pts: Vec<String> = pose
        .joint_points
        .iter()
        .map(|p| {
            let (x, y) = f.px(*p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="{width}" stroke-linejoin="round"/>"#,
        pts.join(" ")
    );
}

/// Renders obstacles, the start chain (blue), the goal chain (red), an
/// optional path sweep and one mark per sample at its end effector.
pub fn render_svg(s: &Scenario, path: Option<&Path>, samples: &[Configuration]) -> String {
    let f = frame(s);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#,
        w = f.width,
        h = f.height
    );
    let _ = writeln!(out, "<title>{}</title>", escape(&s.name));
    let _ = writeln!(
        out,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );
    for c in &s.obstacles {
        let (x, y) = f.px(c.center());
        let _ = writeln!(
            out,
            r##"<circle class="obstacle" cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="#c8c8c8" stroke="#555555"/>"##,
            c.r * SCALE
        );
    }
    if let Some(p) = path {
        for q in p.waypoints() {
            polyline(&mut out, &f, &s.chain, q, SWEEP_COLOR, 1.0, "sweep");
        }
    }
    for q in samples {
        let tip = forward_kinematics(&s.chain, q)
            .expect("samples match the chain")
            .end_effector();
        let (x, y) = f.px(tip);
        let _ = writeln!(
            out,
            r#"<circle class="sample" cx="{x:.2}" cy="{y:.2}" r="1.5" fill="{SAMPLE_COLOR}"/>"#
        );
    }
    polyline(
        &mut out,
        &f,
        &s.chain,
        &s.start,
        START_COLOR,
        3.0,
        "chain start",
    );
    polyline(
        &mut out,
        &f,
        &s.chain,
        &s.goal,
        GOAL_COLOR,
        3.0,
        "chain goal",
    );
    let (bx, by) = f.px(s.chain.base());
    let _ = writeln!(
        out,
        r##"<rect class="base" x="{:.2}" y="{:.2}" width="10" height="10" fill="#000000"/>"##,
        bx - 5.0,
        by - 5.0
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

//! Deterministic SVG rendering of report geometry.
//!
//! The canvas is fixed: an 800 by 800 viewport showing the square
//! [-2, 2] x [-2, 2], the window in which all the certified objects
//! live. Every drawable element carries a named layer; callers can
//! restrict rendering to a subset of layers. Output bytes depend only
//! on the report value, never on time or environment.

use std::fmt::Write as _;

use crate::covering::{CoverVerdict, MarkedQuadrilateral};
use crate::error::{Error, Result};
use crate::geometry::ConvexPolygon;
use crate::perturbation::PairCheck;
use crate::report::{Payload, Report};
use crate::simulation::{PolylineF64, PolylineRole};

const CANVAS: f64 = 800.0;
const WORLD_MIN: f64 = -2.0;
const WORLD_MAX: f64 = 2.0;
const STROKE: &str = "#404040";
/// Nested-region fills, light to dark; deeper steps reuse the darkest.
const FILLS: [&str; 4] = ["#d9d9d9", "#bdbdbd", "#969696", "#737373"];
const IMAGE_FILL: &str = "#d9d9d9";
const CROSSING_FILL: &str = "#969696";

fn tx(x: f64) -> f64 {
    (x - WORLD_MIN) / (WORLD_MAX - WORLD_MIN) * CANVAS
}

fn ty(y: f64) -> f64 {
    (WORLD_MAX - y) / (WORLD_MAX - WORLD_MIN) * CANVAS
}

enum ShapeKind {
    /// Closed outline, optionally filled.
    Polygon {
        fill: Option<&'static str>,
    },
    Polyline,
    Dot,
}

struct Shape {
    layer: String,
    kind: ShapeKind,
    points: Vec<[f64; 2]>,
}

fn polygon_shape(layer: &str, poly: &ConvexPolygon, fill: Option<&'static str>) -> Shape {
    Shape {
        layer: layer.to_owned(),
        kind: ShapeKind::Polygon { fill },
        points: poly.vertices().iter().map(|v| v.to_f64()).collect(),
    }
}

fn quad_shape(layer: &str, quad: &MarkedQuadrilateral) -> Shape {
    polygon_shape(layer, &quad.polygon(), None)
}

fn line_shape(line: &PolylineF64) -> Shape {
    let layer = match line.role {
        PolylineRole::UnstableLeft => "unstable-left",
        PolylineRole::UnstableRight => "unstable-right",
        PolylineRole::Stable => "stable",
        PolylineRole::CriticalLine => "critical-line",
        PolylineRole::Image => "image",
    };
    Shape {
        layer: layer.to_owned(),
        kind: ShapeKind::Polyline,
        points: line.points.clone(),
    }
}

fn covering_shapes(boxes: &[MarkedQuadrilateral], checks: &[PairCheck], shapes: &mut Vec<Shape>) {
    for quad in boxes {
        shapes.push(quad_shape("boxes", quad));
    }
    for check in checks {
        if let CoverVerdict::Covered {
            image, crossing, ..
        } = &check.verdict
        {
            shapes.push(polygon_shape("images", image, Some(IMAGE_FILL)));
            shapes.push(polygon_shape("crossings", crossing, Some(CROSSING_FILL)));
        }
    }
}

fn shapes_for(report: &Report) -> Vec<Shape> {
    let mut shapes = Vec::new();
    match &report.payload {
        Payload::FixedPoints { set } => {
            for seg in &set.segments {
                let (p, q) = &seg.endpoints;
                shapes.push(Shape {
                    layer: "segments".into(),
                    kind: ShapeKind::Polyline,
                    points: vec![p.to_f64(), q.to_f64()],
                });
            }
            for item in &set.points {
                shapes.push(Shape {
                    layer: "points".into(),
                    kind: ShapeKind::Dot,
                    points: vec![item.point.to_f64()],
                });
            }
        }
        Payload::Covering { boxes, checks, .. } => covering_shapes(boxes, checks, &mut shapes),
        Payload::EntropyBound { family } => {
            covering_shapes(&family.boxes, &family.checks, &mut shapes)
        }
        Payload::Trapping {
            region,
            certificate,
            ..
        } => {
            shapes.push(polygon_shape("region", region, Some(FILLS[0])));
            for step in &certificate.steps {
                let fill = FILLS[step.step.min(FILLS.len() - 1)];
                for piece in &step.pieces {
                    shapes.push(polygon_shape(
                        &format!("step-{}", step.step),
                        &piece.polygon,
                        Some(fill),
                    ));
                }
            }
        }
        Payload::JumpDemo {
            fixed_points,
            region,
            trapping,
            family,
        } => {
            shapes.push(polygon_shape("region", region, Some(FILLS[0])));
            for step in &trapping.steps {
                let fill = FILLS[step.step.min(FILLS.len() - 1)];
                for piece in &step.pieces {
                    shapes.push(polygon_shape(
                        &format!("step-{}", step.step),
                        &piece.polygon,
                        Some(fill),
                    ));
                }
            }
            covering_shapes(&family.boxes, &family.checks, &mut shapes);
            for seg in &fixed_points.segments {
                let (p, q) = &seg.endpoints;
                shapes.push(Shape {
                    layer: "segments".into(),
                    kind: ShapeKind::Polyline,
                    points: vec![p.to_f64(), q.to_f64()],
                });
            }
        }
        Payload::Trace {
            line,
            first_axis_crossing_evidence,
            ..
        } => {
            shapes.push(line_shape(line));
            if let Some(q) = first_axis_crossing_evidence {
                shapes.push(Shape {
                    layer: "crossing".into(),
                    kind: ShapeKind::Dot,
                    points: vec![*q],
                });
            }
        }
        Payload::CriticalLines { lines, .. } => {
            for line in lines {
                shapes.push(line_shape(line));
            }
        }
        Payload::Perturb { .. } | Payload::EntropyEstimate { .. } => {}
    }
    shapes
}

fn coords(points: &[[f64; 2]]) -> String {
    let mut s = String::new();
    for (i, q) in points.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.3},{:.3}", tx(q[0]), ty(q[1]));
    }
    s
}

/// Render the report geometry as an SVG document.
///
/// `layers` restricts rendering to the named layers; `None` draws
/// everything. A report without drawable geometry, or a selection that
/// matches nothing, is a usage error.
pub fn render_svg(report: &Report, layers: Option<&[String]>) -> Result<String> {
    let mut shapes = shapes_for(report);
    if let Some(wanted) = layers {
        shapes.retain(|s| wanted.iter().any(|w| w == &s.layer));
    }
    if shapes.is_empty() {
        return Err(Error::Usage(match layers {
            Some(_) => format!(
                "no drawable geometry in the selected layers of the {} report",
                report.command
            ),
            None => format!("the {} report carries no drawable geometry", report.command),
        }));
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{c}\" height=\"{c}\" viewBox=\"0 0 {c} {c}\">",
        c = CANVAS as u32
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{c}\" height=\"{c}\" fill=\"#ffffff\"/>",
        c = CANVAS as u32
    );

    let mut open_layer: Option<String> = None;
    for shape in &shapes {
        if open_layer.as_deref() != Some(shape.layer.as_str()) {
            if open_layer.is_some() {
                let _ = writeln!(svg, "</g>");
            }
            let _ = writeln!(svg, "<g data-layer=\"{}\">", shape.layer);
            open_layer = Some(shape.layer.clone());
        }
        match &shape.kind {
            ShapeKind::Polygon { fill } => {
                let _ = writeln!(
                    svg,
                    "<polygon points=\"{}\" fill=\"{}\" stroke=\"{STROKE}\" stroke-width=\"1\"/>",
                    coords(&shape.points),
                    fill.unwrap_or("none"),
                );
            }
            ShapeKind::Polyline => {
                let _ = writeln!(
                    svg,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{STROKE}\" stroke-width=\"1\"/>",
                    coords(&shape.points),
                );
            }
            ShapeKind::Dot => {
                let q = shape.points[0];
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"{STROKE}\"/>",
                    tx(q[0]),
                    ty(q[1]),
                );
            }
        }
    }
    if open_layer.is_some() {
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

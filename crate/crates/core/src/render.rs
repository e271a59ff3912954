//! SVG rendering of a [`Snapshot`].
//!
//! Black marks skin that was abnormal earlier in the run, red the currently
//! abnormal region. Tree edges are green lines, ordinary awake sensors small
//! green dots, parents larger green dots and roots blue dots. Sleeping sensors
//! are not drawn. Elements are emitted in a fixed order, so identical
//! snapshots give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::engine::Snapshot;
use crate::error::{Error, Result};
use crate::wound::Shape;

/// Pixels per centimetre.
pub const SCALE: f64 = 20.0;

pub const HEALED_FILL: &str = "#000000";
pub const ACTIVE_FILL: &str = "#d62728";
pub const TREE_GREEN: &str = "#2ca02c";
pub const ROOT_BLUE: &str = "#1f3fbf";

const NODE_RADIUS: f64 = 0.12;
const PARENT_RADIUS: f64 = 0.22;
const ROOT_RADIUS: f64 = 0.32;
const EDGE_WIDTH: f64 = 0.06;

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    // "-0.000" would make otherwise identical documents differ.
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn shape_element(out: &mut String, shape: &Shape, fill: &str) {
    match *shape {
        Shape::Disk { center, radius } if radius > 0.0 => {
            let _ = writeln!(
                out,
                r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}"/>"#,
                num(center.x),
                num(center.y),
                num(radius)
            );
        }
        Shape::Ellipse {
            center,
            semi_x,
            semi_y,
        } if semi_x > 0.0 && semi_y > 0.0 => {
            let _ = writeln!(
                out,
                r#"<ellipse cx="{}" cy="{}" rx="{}" ry="{}" fill="{fill}"/>"#,
                num(center.x),
                num(center.y),
                num(semi_x),
                num(semi_y)
            );
        }
        Shape::Capsule { a, b, radius } if radius > 0.0 => {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{fill}" stroke-width="{}" stroke-linecap="round"/>"#,
                num(a.x),
                num(a.y),
                num(b.x),
                num(b.y),
                num(2.0 * radius)
            );
        }
        _ => {}
    }
}

/// SVG document for one snapshot. Coordinates are in centimetres.
pub fn render_svg(snap: &Snapshot) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(snap.width * SCALE),
        num(snap.height * SCALE),
        num(snap.width),
        num(snap.height)
    );
    let _ = writeln!(out, "<title>after {} rounds</title>", snap.after_rounds);
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        num(snap.width),
        num(snap.height)
    );

    out.push_str("<g id=\"healed\">\n");
    for s in &snap.ever {
        shape_element(&mut out, s, HEALED_FILL);
    }
    out.push_str("</g>\n<g id=\"active\">\n");
    for s in &snap.active {
        shape_element(&mut out, s, ACTIVE_FILL);
    }
    out.push_str("</g>\n");

    let mut nodes: Vec<_> = snap.nodes.iter().collect();
    nodes.sort_by_key(|n| n.id);
    let loc_of = |id| {
        nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| nodes[i].loc)
    };

    let edges: Vec<_> = nodes
        .iter()
        .filter(|n| !n.is_root)
        .filter_map(|n| loc_of(n.parent).map(|p| (n.loc, p)))
        .collect();
    if !edges.is_empty() {
        let _ = writeln!(
            out,
            r#"<g id="edges" stroke="{TREE_GREEN}" stroke-width="{}">"#,
            num(EDGE_WIDTH)
        );
        for (a, b) in edges {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                num(a.x),
                num(a.y),
                num(b.x),
                num(b.y)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("<g id=\"nodes\">\n");
    for n in &nodes {
        let (r, fill) = if n.is_root {
            (ROOT_RADIUS, ROOT_BLUE)
        } else if n.is_parent {
            (PARENT_RADIUS, TREE_GREEN)
        } else {
            (NODE_RADIUS, TREE_GREEN)
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}"/>"#,
            num(n.loc.x),
            num(n.loc.y),
            num(r)
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

pub fn write_svg(snap: &Snapshot, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(snap)).map_err(|e| Error::io(path, e))
}

/// File name used for the snapshot taken after `after_rounds` rounds.
pub fn snapshot_file_name(after_rounds: u32) -> String {
    format!("snapshot_{after_rounds:05}.svg")
}

//! Text format for point clouds.
//!
//! The format is line-oriented:
//!
//! ```text
//! # comment lines and trailing comments start with '#'
//! domain 0 1 0 1        # optional; defaults to the bounding box
//! 0.5  0.25  0          # x  y  kind   (0 = inner, 1 = boundary)
//! 0.0  0.25  1
//! ```
//!
//! The optional `domain` line must be the first non-comment line. Fictitious
//! nodes are never stored: they are derived data, reconstructed by
//! [`add_fictitious_nodes`](super::add_fictitious_nodes) after loading.
//! Coordinates are written with enough digits to round-trip exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::{GeometryError, Node, NodeKind, Point, PointCloud, Rect};

/// Parses the cloud text format. Reported line numbers are 1-based.
pub fn parse_cloud(text: &str) -> Result<PointCloud, GeometryError> {
    let mut domain: Option<Rect> = None;
    let mut nodes: Vec<Node> = Vec::new();
    let mut saw_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }

        if fields[0] == "domain" {
            if saw_data || domain.is_some() {
                return Err(GeometryError::Parse {
                    line: line_no,
                    message: "'domain' must appear once, before any node".into(),
                });
            }
            if fields.len() != 5 {
                return Err(GeometryError::Parse {
                    line: line_no,
                    message: format!(
                        "'domain' needs 4 values (xmin xmax ymin ymax), got {}",
                        fields.len() - 1
                    ),
                });
            }
            let v: Vec<f64> = fields[1..]
                .iter()
                .map(|f| parse_number(f, line_no))
                .collect::<Result<_, _>>()?;
            domain = Some(Rect {
                xmin: v[0],
                xmax: v[1],
                ymin: v[2],
                ymax: v[3],
            });
            continue;
        }

        if fields.len() != 3 {
            return Err(GeometryError::Parse {
                line: line_no,
                message: format!("expected 'x y kind' (3 fields), got {}", fields.len()),
            });
        }
        let x = parse_number(fields[0], line_no)?;
        let y = parse_number(fields[1], line_no)?;
        let kind = match fields[2] {
            "0" => NodeKind::Inner,
            "1" => NodeKind::Boundary,
            other => {
                return Err(GeometryError::Parse {
                    line: line_no,
                    message: format!("node kind must be 0 (inner) or 1 (boundary), got '{other}'"),
                });
            }
        };
        if !(x.is_finite() && y.is_finite()) {
            return Err(GeometryError::Parse {
                line: line_no,
                message: format!("coordinates must be finite, got ({x}, {y})"),
            });
        }
        saw_data = true;
        nodes.push(Node {
            id: nodes.len(),
            position: Point { x, y },
            kind,
            mirror_id: None,
        });
    }

    if nodes.is_empty() {
        return Err(GeometryError::InvalidDiscretization(
            "cloud file contains no nodes".into(),
        ));
    }

    let domain = domain.unwrap_or_else(|| bounding_box(&nodes));
    PointCloud::new(nodes, domain)
}

/// Loads a cloud from a file. See [`parse_cloud`] for the format.
pub fn load_cloud(path: &Path) -> Result<PointCloud, GeometryError> {
    let text = fs::read_to_string(path)?;
    parse_cloud(&text)
}

/// Writes `cloud` to a file in the text format, skipping fictitious nodes.
/// Coordinates use the shortest representation that reloads to the same bits.
pub fn save_cloud(cloud: &PointCloud, path: &Path) -> Result<(), GeometryError> {
    let mut out = Vec::new();
    let d = cloud.domain();
    writeln!(out, "domain {} {} {} {}", d.xmin, d.xmax, d.ymin, d.ymax)?;
    for node in cloud.nodes() {
        let kind = match node.kind {
            NodeKind::Inner => 0,
            NodeKind::Boundary => 1,
            NodeKind::Fictitious => continue,
        };
        writeln!(out, "{} {} {}", node.position.x, node.position.y, kind)?;
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_number(field: &str, line_no: usize) -> Result<f64, GeometryError> {
    field.parse::<f64>().map_err(|_| GeometryError::Parse {
        line: line_no,
        message: format!("not a number: '{field}'"),
    })
}

fn bounding_box(nodes: &[Node]) -> Rect {
    let mut r = Rect {
        xmin: f64::INFINITY,
        xmax: f64::NEG_INFINITY,
        ymin: f64::INFINITY,
        ymax: f64::NEG_INFINITY,
    };
    for n in nodes {
        r.xmin = r.xmin.min(n.position.x);
        r.xmax = r.xmax.max(n.position.x);
        r.ymin = r.ymin.min(n.position.y);
        r.ymax = r.ymax.max(n.position.y);
    }
    r
}

//! Point clouds over rectangular domains.
//!
//! The solver discretizes the domain with an unstructured set of nodes:
//! *inner* nodes carry the PDE, *boundary* nodes sit exactly on the domain
//! perimeter, and *fictitious* nodes are ghost points placed outside the
//! domain so that boundary nodes get full one-sided-free stars. Each
//! fictitious node mirrors an inner node across the boundary; the zero-flux
//! condition is imposed by forcing the field value at the ghost to equal the
//! value at its mirror.
//!
//! Clouds are immutable once built. They can come from a regular grid
//! ([`build_regular_grid`]), from a text file ([`load_cloud`]), or from an
//! existing cloud extended with ghosts ([`add_fictitious_nodes`]).

mod cloud;
mod index;
mod star;

pub use cloud::{load_cloud, parse_cloud, save_cloud};
pub use index::BucketIndex;
pub use star::{select_star, Star};

use std::fmt;

/// Position in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    /// Squared Euclidean distance to `other`.
    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Euclidean distance to `other`.
    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Axis-aligned rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    /// The unit square `[0, 1] × [0, 1]`.
    pub fn unit() -> Self {
        Rect {
            xmin: 0.0,
            xmax: 1.0,
            ymin: 0.0,
            ymax: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    /// Whether `p` lies inside or on the perimeter.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }
}

/// Role of a node in the discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// Interior node; carries the PDE.
    Inner,
    /// Node on the domain perimeter; carries the PDE with ghost support.
    Boundary,
    /// Ghost node outside the domain; its value is slaved to a mirror node.
    Fictitious,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Inner => write!(f, "inner"),
            NodeKind::Boundary => write!(f, "boundary"),
            NodeKind::Fictitious => write!(f, "fictitious"),
        }
    }
}

/// A single node of the cloud.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    /// Index of this node within its cloud.
    pub id: usize,
    pub position: Point,
    pub kind: NodeKind,
    /// For fictitious nodes, the inner node whose value this ghost copies.
    pub mirror_id: Option<usize>,
}

/// Errors from cloud construction, parsing, and validation.
#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    /// The requested discretization is structurally unusable.
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),
    /// A cloud file could not be parsed. Line numbers are 1-based.
    #[error("cloud parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cloud i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// An immutable node set over a rectangular domain, with a spatial index.
#[derive(Clone, Debug)]
pub struct PointCloud {
    nodes: Vec<Node>,
    domain: Rect,
    index: BucketIndex,
    min_separation: f64,
    median_spacing: f64,
}

impl PointCloud {
    /// Builds a cloud from nodes, validating positions and separations.
    ///
    /// Non-fictitious nodes must lie inside the domain, fictitious ones
    /// outside; no two nodes may coincide.
    pub fn new(nodes: Vec<Node>, domain: Rect) -> Result<Self, GeometryError> {
        if nodes.is_empty() {
            return Err(GeometryError::InvalidDiscretization(
                "cloud has no nodes".into(),
            ));
        }
        if !(domain.width() > 0.0 && domain.height() > 0.0) {
            return Err(GeometryError::InvalidDiscretization(format!(
                "domain has non-positive extent: x [{}, {}], y [{}, {}]",
                domain.xmin, domain.xmax, domain.ymin, domain.ymax
            )));
        }
        for node in &nodes {
            match node.kind {
                NodeKind::Fictitious => {
                    if domain.contains(node.position) {
                        return Err(GeometryError::InvalidDiscretization(format!(
                            "fictitious node {} at {} lies inside the domain",
                            node.id, node.position
                        )));
                    }
                    if node.mirror_id.is_none() {
                        return Err(GeometryError::InvalidDiscretization(format!(
                            "fictitious node {} has no mirror node",
                            node.id
                        )));
                    }
                }
                _ => {
                    if !domain.contains(node.position) {
                        return Err(GeometryError::InvalidDiscretization(format!(
                            "{} node {} at {} lies outside the domain",
                            node.kind, node.id, node.position
                        )));
                    }
                }
            }
        }
        let positions: Vec<Point> = nodes.iter().map(|n| n.position).collect();
        let index = BucketIndex::build(&positions);
        let min_separation = index.min_pairwise_distance();
        if nodes.len() > 1 && min_separation == 0.0 {
            // Identify one offending pair for the error message.
            for node in &nodes {
                if let Some((other, d2)) = index.nearest_where(node.position, |id| id != node.id) {
                    if d2 == 0.0 {
                        return Err(GeometryError::InvalidDiscretization(format!(
                            "nodes {} and {} coincide at {}",
                            node.id.min(other),
                            node.id.max(other),
                            node.position
                        )));
                    }
                }
            }
        }
        let median_spacing = index.median_nearest_distance();
        Ok(Self {
            nodes,
            domain,
            index,
            min_separation,
            median_spacing,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Smallest distance between any two nodes.
    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    /// Median nearest-neighbor distance; the characteristic spacing.
    pub fn median_spacing(&self) -> f64 {
        self.median_spacing
    }

    /// Number of nodes of the given kind.
    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// The spatial index over all node positions (including fictitious).
    pub fn index(&self) -> &BucketIndex {
        &self.index
    }
}

/// Builds an `n × n` regular grid on `domain` with boundary nodes on the
/// perimeter and inner nodes elsewhere. Node ids are row-major with `x`
/// varying fastest. Requires `n ≥ 3` so that inner nodes exist.
pub fn build_regular_grid(n: usize, domain: Rect) -> Result<PointCloud, GeometryError> {
    if n < 3 {
        return Err(GeometryError::InvalidDiscretization(format!(
            "grid needs at least 3 nodes per side to have an interior, got {n}"
        )));
    }
    let dx = domain.width() / (n - 1) as f64;
    let dy = domain.height() / (n - 1) as f64;
    let coord = |i: usize, min: f64, max: f64, d: f64| -> f64 {
        // Force the last coordinate onto the far edge so perimeter detection
        // is exact even when (n-1)*d rounds past max.
        if i == n - 1 {
            max
        } else {
            min + i as f64 * d
        }
    };
    let mut nodes = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let position = Point {
                x: coord(i, domain.xmin, domain.xmax, dx),
                y: coord(j, domain.ymin, domain.ymax, dy),
            };
            let on_edge = i == 0 || i == n - 1 || j == 0 || j == n - 1;
            nodes.push(Node {
                id: j * n + i,
                position,
                kind: if on_edge {
                    NodeKind::Boundary
                } else {
                    NodeKind::Inner
                },
                mirror_id: None,
            });
        }
    }
    PointCloud::new(nodes, domain)
}

/// Extends `cloud` with fictitious nodes mirroring inner nodes across the
/// domain perimeter.
///
/// Every boundary node gets one ghost per perimeter edge it touches: edge
/// nodes get one, corner nodes two. The ghost for edge `E` is placed by
/// reflecting the boundary node's nearest inner node across `E`'s line (for
/// corners, by stepping outward along each axis by that inner node's offset),
/// and it copies that inner node's field value. Ghost positions that would
/// coincide exactly are merged, keeping the first in boundary-id order.
///
/// Fails if the input already contains fictitious nodes that this routine did
/// not place, if a boundary node is not on the perimeter, or if a boundary
/// node's nearest inner node is farther than three median spacings (the
/// reflection would not be a meaningful mirror).
pub fn add_fictitious_nodes(cloud: &PointCloud) -> Result<PointCloud, GeometryError> {
    let domain = cloud.domain();
    let tol = 1e-9 * domain.width().max(domain.height());
    let mut nodes: Vec<Node> = cloud.nodes().to_vec();
    let mut ghost_positions: Vec<Point> = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Fictitious)
        .map(|n| n.position)
        .collect();
    let max_mirror_dist = 3.0 * cloud.median_spacing();

    for node in cloud.nodes() {
        if node.kind != NodeKind::Boundary {
            continue;
        }
        let p = node.position;
        let on_left = (p.x - domain.xmin).abs() <= tol;
        let on_right = (p.x - domain.xmax).abs() <= tol;
        let on_bottom = (p.y - domain.ymin).abs() <= tol;
        let on_top = (p.y - domain.ymax).abs() <= tol;
        if !(on_left || on_right || on_bottom || on_top) {
            return Err(GeometryError::InvalidDiscretization(format!(
                "boundary node {} at {} does not lie on the domain perimeter",
                node.id, p
            )));
        }

        let (mirror_id, d2) = cloud
            .index()
            .nearest_where(p, |id| cloud.node(id).kind == NodeKind::Inner)
            .ok_or_else(|| {
                GeometryError::InvalidDiscretization("cloud has no inner nodes".into())
            })?;
        if d2.sqrt() > max_mirror_dist {
            return Err(GeometryError::InvalidDiscretization(format!(
                "boundary node {} at {} has no inner node within three \
                 median spacings; the cloud is too sparse near the boundary",
                node.id, p
            )));
        }
        let z = cloud.node(mirror_id).position;

        // One ghost per touched edge. Edge ghosts reflect the mirror node
        // across the edge line; corner ghosts step outward along one axis by
        // the mirror node's offset along that axis, so the pair of ghosts
        // brackets the corner.
        let mut candidates: Vec<Point> = Vec::with_capacity(2);
        let corner = (on_left || on_right) && (on_bottom || on_top);
        if corner {
            let ddx = (z.x - p.x).abs();
            let ddy = (z.y - p.y).abs();
            let sx = if on_left { -1.0 } else { 1.0 };
            let sy = if on_bottom { -1.0 } else { 1.0 };
            candidates.push(Point {
                x: p.x + sx * ddx,
                y: p.y,
            });
            candidates.push(Point {
                x: p.x,
                y: p.y + sy * ddy,
            });
        } else if on_left {
            candidates.push(Point {
                x: 2.0 * domain.xmin - z.x,
                y: z.y,
            });
        } else if on_right {
            candidates.push(Point {
                x: 2.0 * domain.xmax - z.x,
                y: z.y,
            });
        } else if on_bottom {
            candidates.push(Point {
                x: z.x,
                y: 2.0 * domain.ymin - z.y,
            });
        } else {
            candidates.push(Point {
                x: z.x,
                y: 2.0 * domain.ymax - z.y,
            });
        }

        for ghost in candidates {
            // Exact-position dedup: repeated runs and shared mirrors must not
            // stack coincident ghosts.
            if ghost_positions
                .iter()
                .any(|q| q.x == ghost.x && q.y == ghost.y)
            {
                continue;
            }
            ghost_positions.push(ghost);
            nodes.push(Node {
                id: nodes.len(),
                position: ghost,
                kind: NodeKind::Fictitious,
                mirror_id: Some(mirror_id),
            });
        }
    }

    PointCloud::new(nodes, domain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_19_has_expected_node_counts() {
        let cloud = build_regular_grid(19, Rect::unit()).unwrap();
        assert_eq!(cloud.len(), 361);
        assert_eq!(cloud.count_kind(NodeKind::Boundary), 72);
        assert_eq!(cloud.count_kind(NodeKind::Inner), 289);
        assert_eq!(cloud.count_kind(NodeKind::Fictitious), 0);
    }

    #[test]
    fn grid_3x3_has_single_inner_node() {
        let cloud = build_regular_grid(3, Rect::unit()).unwrap();
        assert_eq!(cloud.len(), 9);
        assert_eq!(cloud.count_kind(NodeKind::Inner), 1);
        let center = cloud.node(4);
        assert_eq!(center.kind, NodeKind::Inner);
        assert_eq!(center.position, Point { x: 0.5, y: 0.5 });
    }

    #[test]
    fn grid_spacing_and_layout() {
        let cloud = build_regular_grid(19, Rect::unit()).unwrap();
        let h = 1.0 / 18.0;
        assert!((cloud.min_separation() - h).abs() < 1e-15);
        assert!((cloud.median_spacing() - h).abs() < 1e-15);
        // Row-major, x fastest: node 1 is one step right of node 0.
        assert!((cloud.node(1).position.x - h).abs() < 1e-15);
        assert_eq!(cloud.node(1).position.y, 0.0);
        // Far corner is exactly on the perimeter.
        let last = cloud.node(360);
        assert_eq!(last.position, Point { x: 1.0, y: 1.0 });
    }

    #[test]
    fn grid_too_small_is_rejected() {
        let err = build_regular_grid(2, Rect::unit()).unwrap_err();
        assert!(matches!(err, GeometryError::InvalidDiscretization(_)));
    }

    #[test]
    fn duplicate_nodes_are_rejected() {
        let nodes = vec![
            Node {
                id: 0,
                position: Point { x: 0.5, y: 0.5 },
                kind: NodeKind::Inner,
                mirror_id: None,
            },
            Node {
                id: 1,
                position: Point { x: 0.5, y: 0.5 },
                kind: NodeKind::Inner,
                mirror_id: None,
            },
        ];
        let err = PointCloud::new(nodes, Rect::unit()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("coincide"), "unexpected message: {msg}");
    }

    #[test]
    fn out_of_domain_node_is_rejected() {
        let nodes = vec![Node {
            id: 0,
            position: Point { x: 1.5, y: 0.5 },
            kind: NodeKind::Inner,
            mirror_id: None,
        }];
        let err = PointCloud::new(nodes, Rect::unit()).unwrap_err();
        assert!(matches!(err, GeometryError::InvalidDiscretization(_)));
    }

    #[test]
    fn ghost_count_on_19_grid() {
        let base = build_regular_grid(19, Rect::unit()).unwrap();
        let cloud = add_fictitious_nodes(&base).unwrap();
        // 68 non-corner boundary nodes contribute one ghost each; the four
        // corners contribute two each.
        assert_eq!(cloud.count_kind(NodeKind::Fictitious), 76);
        assert_eq!(cloud.len(), 361 + 76);
    }

    #[test]
    fn edge_ghost_reflects_nearest_inner_node() {
        let base = build_regular_grid(19, Rect::unit()).unwrap();
        let cloud = add_fictitious_nodes(&base).unwrap();
        let h = 1.0 / 18.0;
        // Boundary node 5 sits at (5h, 0) on the bottom edge; its nearest
        // inner node is (5h, h), so the ghost lands at (5h, −h).
        let ghost = cloud
            .nodes()
            .iter()
            .find(|n| {
                n.kind == NodeKind::Fictitious
                    && (n.position.x - 5.0 * h).abs() < 1e-12
                    && n.position.y < 0.0
            })
            .expect("missing ghost below boundary node 5");
        assert!((ghost.position.y + h).abs() < 1e-15);
        let mirror = cloud.node(ghost.mirror_id.unwrap());
        assert_eq!(mirror.kind, NodeKind::Inner);
        assert!((mirror.position.x - 5.0 * h).abs() < 1e-12);
        assert!((mirror.position.y - h).abs() < 1e-12);
    }

    #[test]
    fn corner_gets_two_ghosts() {
        let base = build_regular_grid(19, Rect::unit()).unwrap();
        let cloud = add_fictitious_nodes(&base).unwrap();
        let h = 1.0 / 18.0;
        // Origin corner: ghosts at (−h, 0) and (0, −h), both mirroring the
        // diagonal inner node (h, h).
        let left = cloud
            .nodes()
            .iter()
            .find(|n| n.kind == NodeKind::Fictitious && n.position.y == 0.0 && n.position.x < 0.0)
            .expect("missing ghost left of the origin corner");
        let below = cloud
            .nodes()
            .iter()
            .find(|n| n.kind == NodeKind::Fictitious && n.position.x == 0.0 && n.position.y < 0.0)
            .expect("missing ghost below the origin corner");
        assert!((left.position.x + h).abs() < 1e-15);
        assert!((below.position.y + h).abs() < 1e-15);
        let mirror = cloud.node(left.mirror_id.unwrap());
        assert!((mirror.position.x - h).abs() < 1e-12);
        assert!((mirror.position.y - h).abs() < 1e-12);
    }

    #[test]
    fn ghost_construction_is_idempotent() {
        let base = build_regular_grid(9, Rect::unit()).unwrap();
        let once = add_fictitious_nodes(&base).unwrap();
        let twice = add_fictitious_nodes(&once).unwrap();
        assert_eq!(once.len(), twice.len());
    }

    #[test]
    fn ghosts_require_inner_nodes_nearby() {
        // A cloud whose only inner node is far from one boundary node.
        let nodes = vec![
            Node {
                id: 0,
                position: Point { x: 0.0, y: 0.5 },
                kind: NodeKind::Boundary,
                mirror_id: None,
            },
            Node {
                id: 1,
                position: Point { x: 0.95, y: 0.5 },
                kind: NodeKind::Inner,
                mirror_id: None,
            },
            Node {
                id: 2,
                position: Point { x: 0.9, y: 0.5 },
                kind: NodeKind::Inner,
                mirror_id: None,
            },
        ];
        let cloud = PointCloud::new(nodes, Rect::unit()).unwrap();
        let err = add_fictitious_nodes(&cloud).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("median spacings"), "unexpected message: {msg}");
    }

    #[test]
    fn boundary_node_off_perimeter_is_rejected() {
        let nodes = vec![
            Node {
                id: 0,
                position: Point { x: 0.3, y: 0.3 },
                kind: NodeKind::Boundary,
                mirror_id: None,
            },
            Node {
                id: 1,
                position: Point { x: 0.35, y: 0.3 },
                kind: NodeKind::Inner,
                mirror_id: None,
            },
        ];
        let cloud = PointCloud::new(nodes, Rect::unit()).unwrap();
        let err = add_fictitious_nodes(&cloud).unwrap_err();
        assert!(err.to_string().contains("perimeter"));
    }
}

//! Star selection: each node's local neighborhood.
//!
//! A *star* is a center node together with its `s` nearest neighbors. The
//! derivative stencils are least-squares fits over these neighborhoods, so
//! star selection must be deterministic: neighbors are ordered by distance
//! with ties broken toward the lower node id.

use super::{GeometryError, NodeKind, Point, PointCloud};

/// A center node and its selected neighbors.
#[derive(Clone, Debug)]
pub struct Star {
    pub center_id: usize,
    /// Neighbor ids, sorted by (distance, id) ascending.
    pub neighbor_ids: Vec<usize>,
    /// Neighbor positions relative to the center, in `neighbor_ids` order.
    pub offsets: Vec<Point>,
}

impl Star {
    /// Number of neighbors (the center is not counted).
    pub fn len(&self) -> usize {
        self.neighbor_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbor_ids.is_empty()
    }
}

/// Selects the star of `center_id`: its `s` nearest nodes of any kind.
///
/// Centers must be inner or boundary nodes (fictitious nodes never carry the
/// PDE, so they never need a star). At least 5 neighbors are required for the
/// five Taylor coefficients being fit; the cloud must hold at least `s` other
/// nodes.
pub fn select_star(cloud: &PointCloud, center_id: usize, s: usize) -> Result<Star, GeometryError> {
    if s < 5 {
        return Err(GeometryError::InvalidDiscretization(format!(
            "star size must be at least 5 to determine five derivatives, got {s}"
        )));
    }
    let center = cloud.node(center_id);
    if center.kind == NodeKind::Fictitious {
        return Err(GeometryError::InvalidDiscretization(format!(
            "node {center_id} is fictitious and cannot be a star center"
        )));
    }
    if cloud.len() <= s {
        return Err(GeometryError::InvalidDiscretization(format!(
            "star size {s} needs {s} neighbors but the cloud has only {} other nodes",
            cloud.len() - 1
        )));
    }
    let neighbors = cloud.index().k_nearest(center.position, s, Some(center_id));
    debug_assert_eq!(neighbors.len(), s);
    let neighbor_ids: Vec<usize> = neighbors.iter().map(|&(id, _)| id).collect();
    let offsets = neighbor_ids
        .iter()
        .map(|&id| {
            let p = cloud.node(id).position;
            Point {
                x: p.x - center.position.x,
                y: p.y - center.position.y,
            }
        })
        .collect();
    Ok(Star {
        center_id,
        neighbor_ids,
        offsets,
    })
}

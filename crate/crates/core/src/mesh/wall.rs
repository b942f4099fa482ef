//! Wall-distance fields: distance from every quadratic node to the nearest
//! no-slip boundary, either to the polygonal boundary or through an analytic
//! override for curved geometries.

use super::{Mesh, MeshError};
use std::collections::BTreeSet;
use std::sync::Arc;

/// Distance to the no-slip boundary, sampled at the quadratic (vertex +
/// edge-midpoint) nodes. Evaluation between nodes goes through the quadratic
/// velocity basis unless an analytic rule is attached.
#[derive(Clone)]
pub struct WallDistanceField {
    values: Vec<f64>,
    analytic: Option<Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>>,
}

impl std::fmt::Debug for WallDistanceField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WallDistanceField")
            .field("nodes", &self.values.len())
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl WallDistanceField {
    /// Nodal values in the canonical node order (vertices, then midpoints).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at_node(&self, node: usize) -> f64 {
        self.values[node]
    }

    /// Analytic rule for evaluation at arbitrary points, when attached.
    pub fn analytic(&self) -> Option<&(dyn Fn([f64; 2]) -> f64 + Send + Sync)> {
        self.analytic.as_deref()
    }
}

fn noslip_segments(mesh: &Mesh, tags: &BTreeSet<i32>) -> Result<Vec<([f64; 2], [f64; 2])>, MeshError> {
    let segs: Vec<_> = mesh
        .boundary_edges()
        .iter()
        .filter(|be| tags.contains(&be.tag))
        .map(|be| (mesh.vertices()[be.vertices[0]], mesh.vertices()[be.vertices[1]]))
        .collect();
    if segs.is_empty() {
        return Err(MeshError::EmptyNoSlipSet);
    }
    Ok(segs)
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let dx = p[0] - (a[0] + t * ab[0]);
    let dy = p[1] - (a[1] + t * ab[1]);
    (dx * dx + dy * dy).sqrt()
}

/// Exact Euclidean distance to the union of tagged boundary segments.
pub fn compute_wall_distance(
    mesh: &Mesh,
    noslip_tags: &BTreeSet<i32>,
) -> Result<WallDistanceField, MeshError> {
    let segs = noslip_segments(mesh, noslip_tags)?;
    let values = mesh
        .quadratic_node_coords()
        .iter()
        .map(|&p| {
            segs.iter()
                .map(|&(a, b)| point_segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(WallDistanceField { values, analytic: None })
}

/// Wall distance through a closed-form rule, for curved boundaries where the
/// polygonal distance would pollute the damping function. The rule is clamped
/// at zero and also drives evaluation at quadrature points.
pub fn compute_wall_distance_analytic(
    mesh: &Mesh,
    noslip_tags: &BTreeSet<i32>,
    distance: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
) -> Result<WallDistanceField, MeshError> {
    noslip_segments(mesh, noslip_tags)?;
    let rule = Arc::new(move |p: [f64; 2]| distance(p).max(0.0));
    let values = mesh.quadratic_node_coords().iter().map(|&p| rule(p)).collect();
    Ok(WallDistanceField { values, analytic: Some(rule) })
}

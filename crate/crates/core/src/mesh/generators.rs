//! Built-in mesh generators: a structured unit square and the offset-circles
//! benchmark domain (unit disk with a small off-center hole).

use super::{BoundaryEdge, Mesh, MeshError};

/// Boundary tag used by the structured square and the outer circle.
pub const TAG_OUTER: i32 = 1;
/// Boundary tag of the inner circle of the offset-circles domain.
pub const TAG_INNER: i32 = 2;

const R_OUTER: f64 = 1.0;
const R_INNER: f64 = 0.1;
const CENTER_X: f64 = 0.5;

/// GMSH recipe for the offset-circles domain, for regenerating the mesh
/// externally: `gmsh -2 -format msh22 -o offset_circles.msh <recipe>.geo`.
pub const OFFSET_CIRCLES_GEO: &str = include_str!("../../assets/offset_circles.geo");

/// Unit square split into 2 n^2 right triangles; every boundary edge is
/// tagged 1 (no-slip).
pub fn build_structured_square(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::ZeroSubdivision);
    }
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let vid = |i: usize, j: usize| j * np + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary.push(BoundaryEdge { vertices: [vid(i, 0), vid(i + 1, 0)], tag: TAG_OUTER });
        boundary.push(BoundaryEdge { vertices: [vid(i, n), vid(i + 1, n)], tag: TAG_OUTER });
        boundary.push(BoundaryEdge { vertices: [vid(0, i), vid(0, i + 1)], tag: TAG_OUTER });
        boundary.push(BoundaryEdge { vertices: [vid(n, i), vid(n, i + 1)], tag: TAG_OUTER });
    }
    Mesh::new(vertices, triangles, boundary)
}

/// Exact wall distance for the offset-circles domain, clamped at zero so the
/// polygonal boundary cannot produce negative values at near-wall nodes.
pub fn offset_circles_distance(x: [f64; 2]) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let dxc = x[0] - CENTER_X;
    let rc = (dxc * dxc + x[1] * x[1]).sqrt();
    (R_OUTER - r).min(rc - R_INNER).max(0.0)
}

/// Boundary-fitted triangulation of the offset-circles domain at target
/// element size `lc`.
///
/// The domain between the two circles is the conformal image of a concentric
/// annulus; the grid is laid out in the annulus (log-radial rings whose point
/// count doubles as the circumference grows, keeping cells square) and mapped
/// through the Moebius transform, so every boundary vertex lies exactly on
/// its circle and element shapes stay isotropic. Element sizes vary with the
/// conformal factor (about [lc/3, 3 lc]); the triangle count matches a
/// uniform mesh of size lc.
pub fn build_offset_circles(lc: f64) -> Result<Mesh, MeshError> {
    if !(lc > 0.0 && lc <= 0.5) {
        return Err(MeshError::BadTargetSize(lc));
    }
    // Limit points p and 1/p of the coaxial family determined by the two
    // circles; w -> (w + p)/(1 + p w) maps the concentric annulus
    // rho <= |w| <= 1 onto the domain.
    let b = (R_OUTER * R_OUTER + CENTER_X * CENTER_X - R_INNER * R_INNER) / CENTER_X;
    let p = (b - (b * b - 4.0).sqrt()) / 2.0;
    let rho = (CENTER_X + R_INNER - p) / (1.0 - p * (CENTER_X + R_INNER));

    let map = |w: [f64; 2]| -> [f64; 2] {
        let denom = (1.0 + p * w[0]) * (1.0 + p * w[0]) + (p * w[1]) * (p * w[1]);
        [
            ((w[0] + p) * (1.0 + p * w[0]) + w[1] * p * w[1]) / denom,
            (w[1] * (1.0 + p * w[0]) - (w[0] + p) * p * w[1]) / denom,
        ]
    };

    // Ring layout in the annulus: start on the inner circle with spacing ~lc,
    // advance in log radius keeping cells square, double the point count when
    // the arc spacing exceeds sqrt(2) lc.
    let mut counts: Vec<usize> = Vec::new();
    let mut log_steps: Vec<f64> = Vec::new();
    let mut m = ((2.0 * std::f64::consts::PI * rho / lc).round() as usize).max(12);
    counts.push(m);
    let mut log_r = rho.ln();
    while log_r < 0.0 {
        let r = log_r.exp();
        if 2.0 * std::f64::consts::PI * r / (m as f64) > std::f64::consts::SQRT_2 * lc {
            m *= 2;
        }
        let step = 2.0 * std::f64::consts::PI / (m as f64);
        log_steps.push(step);
        log_r += step;
        counts.push(m);
    }
    // rescale so the last ring lands exactly on |w| = 1
    let total: f64 = log_steps.iter().sum();
    let scale = -rho.ln() / total;
    for s in &mut log_steps {
        *s *= scale;
    }

    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut ring_start: Vec<usize> = Vec::new();
    let mut log_r = rho.ln();
    for (j, &mj) in counts.iter().enumerate() {
        ring_start.push(vertices.len());
        let r = if j == counts.len() - 1 { 1.0 } else { log_r.exp() };
        for i in 0..mj {
            let theta = 2.0 * std::f64::consts::PI * (i as f64) / (mj as f64);
            vertices.push(map([r * theta.cos(), r * theta.sin()]));
        }
        if j < log_steps.len() {
            log_r += log_steps[j];
        }
    }

    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for j in 0..counts.len() - 1 {
        let (mc, mf) = (counts[j], counts[j + 1]);
        let (sc, sf) = (ring_start[j], ring_start[j + 1]);
        if mc == mf {
            for i in 0..mc {
                let a = sc + i;
                let b = sc + (i + 1) % mc;
                let c = sf + (i + 1) % mc;
                let d = sf + i;
                if (i + j) % 2 == 0 {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                } else {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        } else {
            // transition ring: every coarse interval fans into two fine ones
            debug_assert_eq!(mf, 2 * mc);
            for i in 0..mc {
                let c0 = sc + i;
                let c1 = sc + (i + 1) % mc;
                let f0 = sf + 2 * i;
                let f1 = sf + 2 * i + 1;
                let f2 = sf + (2 * i + 2) % mf;
                triangles.push([c0, f1, f0]);
                triangles.push([c0, c1, f1]);
                triangles.push([c1, f2, f1]);
            }
        }
    }

    let mut boundary = Vec::new();
    let m_in = counts[0];
    for i in 0..m_in {
        boundary.push(BoundaryEdge { vertices: [i, (i + 1) % m_in], tag: TAG_INNER });
    }
    let m_out = *counts.last().unwrap();
    let s_out = *ring_start.last().unwrap();
    for i in 0..m_out {
        boundary.push(BoundaryEdge {
            vertices: [s_out + i, s_out + (i + 1) % m_out],
            tag: TAG_OUTER,
        });
    }
    Mesh::new(vertices, triangles, boundary)
}

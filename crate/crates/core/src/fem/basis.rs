//! Lagrange shape functions on the reference triangle. Local node order for
//! P2: the three vertices, then the midpoints of edges (0,1), (1,2), (2,0).

pub fn p1_values(x: f64, y: f64) -> [f64; 3] {
    [1.0 - x - y, x, y]
}

pub const P1_GRADS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

pub fn p2_values(x: f64, y: f64) -> [f64; 6] {
    let l = [1.0 - x - y, x, y];
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

pub fn p2_grads(x: f64, y: f64) -> [[f64; 2]; 6] {
    let l = [1.0 - x - y, x, y];
    let dl = P1_GRADS;
    let mut g = [[0.0; 2]; 6];
    for v in 0..3 {
        for d in 0..2 {
            g[v][d] = (4.0 * l[v] - 1.0) * dl[v][d];
        }
    }
    for (slot, (a, b)) in [(3, (0, 1)), (4, (1, 2)), (5, (2, 0))] {
        for d in 0..2 {
            g[slot][d] = 4.0 * (l[a] * dl[b][d] + l[b] * dl[a][d]);
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODES: [[f64; 2]; 6] =
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];

    #[test]
    fn p2_is_nodal() {
        for (i, n) in NODES.iter().enumerate() {
            let vals = p2_values(n[0], n[1]);
            for (j, v) in vals.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-14, "phi_{j}({n:?}) = {v}");
            }
        }
    }

    #[test]
    fn p2_partition_of_unity_and_gradient_consistency() {
        let pts = [[0.1, 0.3], [0.25, 0.5], [0.6, 0.2]];
        for p in pts {
            let sum: f64 = p2_values(p[0], p[1]).iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            let g = p2_grads(p[0], p[1]);
            // finite-difference check
            let h = 1e-6;
            let vx = p2_values(p[0] + h, p[1]);
            let v0 = p2_values(p[0] - h, p[1]);
            for j in 0..6 {
                let fd = (vx[j] - v0[j]) / (2.0 * h);
                assert!((fd - g[j][0]).abs() < 1e-8);
            }
        }
    }
}

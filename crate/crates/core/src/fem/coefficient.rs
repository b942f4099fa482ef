//! Scalar coefficients sampled at the assembly quadrature points.

use super::{BasisTable, ElemGeom, FemError, FESpace, QuadratureRule};
use crate::mesh::WallDistanceField;

/// Rule assigning a scalar a(x_q) to each quadrature point of each element,
/// built from a constant, a spatial closure, or a closed form in the wall
/// distance.
#[derive(Clone, Debug)]
pub enum CoefficientField {
    Constant(f64),
    /// Values indexed elem * n_q + q.
    PerQuadPoint(Vec<f64>),
}

impl CoefficientField {
    pub fn constant(value: f64) -> Self {
        CoefficientField::Constant(value)
    }

    /// Sample a spatial closure at the physical quadrature points.
    pub fn from_fn(
        space: &FESpace,
        rule: &QuadratureRule,
        f: impl Fn([f64; 2]) -> f64,
    ) -> Self {
        let mesh = space.mesh();
        let mut values = Vec::with_capacity(space.n_elems() * rule.len());
        for tri in mesh.triangles() {
            let geom = ElemGeom::new(
                mesh.vertices()[tri[0]],
                mesh.vertices()[tri[1]],
                mesh.vertices()[tri[2]],
            );
            for p in &rule.points {
                values.push(f(geom.map(*p)));
            }
        }
        CoefficientField::PerQuadPoint(values)
    }

    /// Compose a closed form with the wall distance. The distance at a
    /// quadrature point comes from the analytic rule when the field carries
    /// one, otherwise from interpolating the nodal values through the
    /// quadratic velocity basis.
    pub fn from_wall_fn(
        space: &FESpace,
        rule: &QuadratureRule,
        wall: &WallDistanceField,
        g: impl Fn(f64) -> f64,
    ) -> Self {
        if let Some(rule_fn) = wall.analytic() {
            return Self::from_fn(space, rule, |x| g(rule_fn(x)));
        }
        let table = BasisTable::new(rule);
        let mut values = Vec::with_capacity(space.n_elems() * rule.len());
        for e in 0..space.n_elems() {
            let nodes = space.elem_nodes(e);
            for vals in &table.p2_vals {
                let mut y = 0.0;
                for (local, &node) in nodes.iter().enumerate() {
                    y += vals[local] * wall.value_at_node(node);
                }
                values.push(g(y.max(0.0)));
            }
        }
        CoefficientField::PerQuadPoint(values)
    }

    #[inline]
    pub fn eval(&self, elem: usize, n_q: usize, q: usize) -> f64 {
        match self {
            CoefficientField::Constant(c) => *c,
            CoefficientField::PerQuadPoint(v) => v[elem * n_q + q],
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            CoefficientField::Constant(c) => *c,
            CoefficientField::PerQuadPoint(v) => v.iter().fold(f64::INFINITY, |m, &x| m.min(x)),
        }
    }

    /// a + s * b pointwise, for building nu + k tau mu(y) without resampling.
    pub fn affine(&self, scale: f64, offset: f64) -> CoefficientField {
        match self {
            CoefficientField::Constant(c) => CoefficientField::Constant(offset + scale * c),
            CoefficientField::PerQuadPoint(v) => {
                CoefficientField::PerQuadPoint(v.iter().map(|&x| offset + scale * x).collect())
            }
        }
    }

    /// First (element, point) with a negative value, if any.
    pub fn check_nonnegative(&self, n_q: usize) -> Result<(), FemError> {
        match self {
            CoefficientField::Constant(c) if *c < 0.0 => {
                Err(FemError::NegativeCoefficient { element: 0, point: 0, value: *c })
            }
            CoefficientField::Constant(_) => Ok(()),
            CoefficientField::PerQuadPoint(v) => {
                for (i, &x) in v.iter().enumerate() {
                    if x < 0.0 {
                        return Err(FemError::NegativeCoefficient {
                            element: i / n_q,
                            point: i % n_q,
                            value: x,
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

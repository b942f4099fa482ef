//! Positive-weight quadrature rules on the reference triangle
//! {(x, y) : x, y >= 0, x + y <= 1}.

use super::FemError;

/// Fixed rule used by every assembly and norm evaluation: exact for all the
/// polynomial integrands that occur with P2 velocities, P1 pressures and the
/// cubic benchmark forcing.
pub const ASSEMBLY_ORDER: usize = 5;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Smallest positive-weight rule exact for all bivariate monomials of total
/// degree <= order. Orders 3 and 4 share the six-point rule: the classical
/// four-point degree-3 rule has a negative weight.
pub fn quadrature_rule(order: usize) -> Result<QuadratureRule, FemError> {
    let (points, weights): (Vec<[f64; 3]>, Vec<f64>) = match order {
        1 => (vec![[1.0 / 3.0; 3]], vec![1.0]),
        2 => (perm3(2.0 / 3.0, 1.0 / 6.0), vec![1.0 / 3.0; 3]),
        3 | 4 => {
            let mut pts = perm3(1.0 - 2.0 * 0.445_948_490_915_965, 0.445_948_490_915_965);
            pts.extend(perm3(1.0 - 2.0 * 0.091_576_213_509_771, 0.091_576_213_509_771));
            let mut w = vec![0.223_381_589_678_011; 3];
            w.extend(vec![0.109_951_743_655_322; 3]);
            (pts, w)
        }
        5 => {
            let mut pts = vec![[1.0 / 3.0; 3]];
            pts.extend(perm3(1.0 - 2.0 * 0.470_142_064_105_115, 0.470_142_064_105_115));
            pts.extend(perm3(1.0 - 2.0 * 0.101_286_507_323_456, 0.101_286_507_323_456));
            let mut w = vec![0.225];
            w.extend(vec![0.132_394_152_788_506; 3]);
            w.extend(vec![0.125_939_180_544_827; 3]);
            (pts, w)
        }
        6 => {
            let mut pts = perm3(1.0 - 2.0 * 0.063_089_014_491_502, 0.063_089_014_491_502);
            pts.extend(perm3(1.0 - 2.0 * 0.249_286_745_170_910, 0.249_286_745_170_910));
            pts.extend(perm6(0.310_352_451_033_785, 0.053_145_049_844_816));
            let mut w = vec![0.050_844_906_370_207; 3];
            w.extend(vec![0.116_786_275_726_379; 3]);
            w.extend(vec![0.082_851_075_618_374; 6]);
            (pts, w)
        }
        other => return Err(FemError::UnsupportedQuadratureOrder(other)),
    };
    // barycentric (b0, b1, b2) -> reference (x, y) = (b1, b2); weights are
    // normalized to sum to 1 in the tables, the reference triangle has area 1/2
    Ok(QuadratureRule {
        points: points.iter().map(|b| [b[1], b[2]]).collect(),
        weights: weights.iter().map(|w| 0.5 * w).collect(),
        order,
    })
}

fn perm3(c: f64, a: f64) -> Vec<[f64; 3]> {
    vec![[c, a, a], [a, c, a], [a, a, c]]
}

fn perm6(a: f64, b: f64) -> Vec<[f64; 3]> {
    let c = 1.0 - a - b;
    vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^a y^b over the reference triangle.
    fn exact_monomial(a: u32, b: u32) -> f64 {
        fn fact(n: u32) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn weights_positive_and_sum_to_half() {
        for order in 1..=6 {
            let rule = quadrature_rule(order).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0), "order {order}");
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 0.5).abs() < 1e-14, "order {order}: sum {sum}");
        }
    }

    #[test]
    fn exact_for_all_monomials_up_to_order() {
        for order in 1..=6usize {
            let rule = quadrature_rule(order).unwrap();
            for a in 0..=order as u32 {
                for b in 0..=(order as u32 - a) {
                    let approx: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = exact_monomial(a, b);
                    assert!(
                        (approx - exact).abs() < 1e-14,
                        "order {order}, x^{a} y^{b}: {approx} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn spec_values() {
        let r1 = quadrature_rule(1).unwrap();
        let one: f64 = r1.weights.iter().sum();
        assert!((one - 0.5).abs() < 1e-15);
        let xy: f64 = r1.points.iter().zip(&r1.weights).map(|(p, w)| w * (p[0] + p[1])).sum();
        assert!((xy - 1.0 / 3.0).abs() < 1e-15);
        let r4 = quadrature_rule(4).unwrap();
        let x2y2: f64 =
            r4.points.iter().zip(&r4.weights).map(|(p, w)| w * p[0] * p[0] * p[1] * p[1]).sum();
        assert!((x2y2 - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn unsupported_order_is_rejected() {
        assert!(matches!(quadrature_rule(0), Err(FemError::UnsupportedQuadratureOrder(0))));
        assert!(matches!(quadrature_rule(7), Err(FemError::UnsupportedQuadratureOrder(7))));
    }
}

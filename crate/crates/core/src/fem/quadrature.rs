//! Gauss rules on the reference triangle and on edges.

/// Barycentric points and weights (weights sum to 1, multiply by the area).
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

/// 3-point interior rule, exact for degree 2.
pub const TRI3: TriangleRule = TriangleRule {
    points: &[
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

const A1: f64 = 0.059_715_871_789_769_82;
const B1: f64 = 0.470_142_064_105_115_1;
const A2: f64 = 0.797_426_985_353_087_3;
const B2: f64 = 0.101_286_507_323_456_3;
const W0: f64 = 0.225;
const W1: f64 = 0.132_394_152_788_506_2;
const W2: f64 = 0.125_939_180_544_827_1;

/// 7-point rule, exact for degree 5. Used for error norms.
pub const TRI7: TriangleRule = TriangleRule {
    points: &[
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [A1, B1, B1],
        [B1, A1, B1],
        [B1, B1, A1],
        [A2, B2, B2],
        [B2, A2, B2],
        [B2, B2, A2],
    ],
    weights: &[W0, W1, W1, W1, W2, W2, W2],
};

pub const QP_PER_TRIANGLE: usize = 3;
pub const QP_PER_EDGE: usize = 2;

/// 2-point Gauss rule on an edge: parameter `t ∈ [0,1]` and weight (sums to 1).
pub const EDGE2: [(f64, f64); 2] = [
    (0.5 - 0.288_675_134_594_812_9, 0.5),
    (0.5 + 0.288_675_134_594_812_9, 0.5),
];

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(rule: &TriangleRule, f: impl Fn(f64, f64) -> f64) -> f64 {
        // Reference triangle (0,0), (1,0), (0,1), area 1/2.
        rule.points.iter().zip(rule.weights).map(|(b, w)| w * 0.5 * f(b[1], b[2])).sum()
    }

    fn exact(i: u32, j: u32) -> f64 {
        // ∫ x^i y^j over the reference triangle = i! j! / (i+j+2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(i) * fact(j) / fact(i + j + 2)
    }

    #[test]
    fn three_point_rule_is_exact_for_quadratics() {
        for i in 0..=2 {
            for j in 0..=(2 - i) {
                let q = integrate(&TRI3, |x, y| x.powi(i as i32) * y.powi(j as i32));
                assert!((q - exact(i, j)).abs() < 1e-15, "x^{i} y^{j}");
            }
        }
    }

    #[test]
    fn seven_point_rule_is_exact_for_quintics() {
        for i in 0..=5 {
            for j in 0..=(5 - i) {
                let q = integrate(&TRI7, |x, y| x.powi(i as i32) * y.powi(j as i32));
                assert!((q - exact(i, j)).abs() < 1e-14, "x^{i} y^{j}");
            }
        }
    }

    #[test]
    fn edge_rule_is_exact_for_cubics() {
        for k in 0..=3 {
            let q: f64 = EDGE2.iter().map(|(t, w)| w * t.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
        }
    }
}

//! Smooth cutoff profile localizing the height transform to the tubular band.

/// Width of each smoothing ramp, as a fraction of a transition interval.
const RAMP: f64 = 0.2;
/// Plateau slope of the transition profile; unit area forces `1 / (1 - RAMP)`.
const PLATEAU_SLOPE: f64 = 1.0 / (1.0 - RAMP);

/// C² cutoff `χ: ℝ → [0, 1]` built from polynomial pieces.
///
/// `χ = 1` on `(-a1/3, a2/3)` and `χ = 0` outside `(-2a1/3, 2a2/3)`. Each of
/// the two transition intervals uses a profile with a linear middle section
/// and quartic ramps at both ends, so the slope never exceeds
/// `1.25 · 3/a ≤ 4/min(a1, a2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub a1: f64,
    pub a2: f64,
}

/// Value and first two derivatives of the cutoff at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffValue {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

impl Cutoff {
    pub fn new(a1: f64, a2: f64) -> Self {
        assert!(a1 > 0.0 && a2 > 0.0, "cutoff radii must be positive");
        Self { a1, a2 }
    }

    pub fn a_star(&self) -> f64 {
        self.a1.min(self.a2)
    }

    /// Upper bound on `|χ'|` attained on the plateau of the steeper transition.
    pub fn max_slope(&self) -> f64 {
        PLATEAU_SLOPE * 3.0 / self.a_star()
    }

    /// Support of `χ`: the open interval `(-2a1/3, 2a2/3)`.
    pub fn support(&self) -> (f64, f64) {
        (-2.0 * self.a1 / 3.0, 2.0 * self.a2 / 3.0)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).value
    }

    pub fn eval(&self, r: f64) -> CutoffValue {
        let (a, sign) = if r >= 0.0 { (self.a2, 1.0) } else { (self.a1, -1.0) };
        let third = a / 3.0;
        let t = (r.abs() - third) / third;
        if t <= 0.0 {
            return CutoffValue { value: 1.0, slope: 0.0, curvature: 0.0 };
        }
        if t >= 1.0 {
            return CutoffValue { value: 0.0, slope: 0.0, curvature: 0.0 };
        }
        let (g, dg, ddg) = transition(t);
        // χ(r) = 1 - G((|r| - a/3) / (a/3))
        CutoffValue {
            value: 1.0 - g,
            slope: -sign * dg / third,
            curvature: -ddg / (third * third),
        }
    }
}

/// Monotone transition `G: [0,1] → [0,1]` with `G'(0) = G'(1) = G''(0) = G''(1) = 0`.
/// Returns `(G, G', G'')`.
fn transition(t: f64) -> (f64, f64, f64) {
    let w = RAMP;
    let s = PLATEAU_SLOPE;
    if t < w {
        let u = t / w;
        (s * w * ramp(u), s * smoothstep(u), s / w * dsmoothstep(u))
    } else if t <= 1.0 - w {
        (s * w / 2.0 + s * (t - w), s, 0.0)
    } else {
        let u = (1.0 - t) / w;
        (1.0 - s * w * ramp(u), s * smoothstep(u), -s / w * dsmoothstep(u))
    }
}

fn smoothstep(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

fn dsmoothstep(u: f64) -> f64 {
    6.0 * u * (1.0 - u)
}

/// Antiderivative of the smoothstep, `R(u) = u³ - u⁴/2`, with `R(1) = 1/2`.
fn ramp(u: f64) -> f64 {
    u * u * u * (1.0 - 0.5 * u)
}

//! Small shared numerical kernels: polynomials, quadrature, Hermite
//! interpolation and bracketed root refinement.

/// Polynomial with fixed maximum degree 5, dense monomial coefficients.
///
/// Used for tangent-angle profiles of fillet arcs: degree 1 gives a circular
/// arc (constant curvature), degree 5 a curvature-continuous blend.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Poly5 {
    pub c: [f64; 6],
}

impl Poly5 {
    pub fn new(c: [f64; 6]) -> Self {
        Self { c }
    }

    pub fn constant(v: f64) -> Self {
        Self {
            c: [v, 0.0, 0.0, 0.0, 0.0, 0.0],
        }
    }

    /// Linear ramp `a + b*x`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self {
            c: [a, b, 0.0, 0.0, 0.0, 0.0],
        }
    }

    /// Quintic smoothstep from `a` at 0 to `b` at `len`, with zero first and
    /// second derivatives at both ends.
    pub fn smoothstep(a: f64, b: f64, len: f64) -> Self {
        let d = b - a;
        let l3 = len * len * len;
        let l4 = l3 * len;
        let l5 = l4 * len;
        Self {
            c: [a, 0.0, 0.0, 10.0 * d / l3, -15.0 * d / l4, 6.0 * d / l5],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let c = &self.c;
        ((((c[5] * x + c[4]) * x + c[3]) * x + c[2]) * x + c[1]) * x + c[0]
    }

    pub fn deriv(&self) -> Poly5 {
        let c = &self.c;
        Poly5::new([c[1], 2.0 * c[2], 3.0 * c[3], 4.0 * c[4], 5.0 * c[5], 0.0])
    }

    /// Maximum of |p| over [0, len], by dense sampling. Adequate for the
    /// smooth low-degree profiles used here.
    pub fn max_abs_on(&self, len: f64, samples: usize) -> f64 {
        let mut m = 0.0f64;
        for i in 0..=samples {
            let x = len * (i as f64) / (samples as f64);
            m = m.max(self.eval(x).abs());
        }
        m
    }
}

/// 10-point Gauss-Legendre abscissae on [-1, 1] (positive half) and weights.
const GL10_X: [f64; 5] = [
    0.148874338981631211,
    0.433395394129247191,
    0.679409568299024406,
    0.865063366688984511,
    0.973906528517171720,
];
const GL10_W: [f64; 5] = [
    0.295524224714752870,
    0.269266719309996355,
    0.219086362515982044,
    0.149451349150580593,
    0.066671344308688138,
];

/// Integrate `f` over [a, b] with a single 10-point Gauss-Legendre rule.
pub fn gl10<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for i in 0..5 {
        let dx = half * GL10_X[i];
        acc += GL10_W[i] * (f(mid - dx) + f(mid + dx));
    }
    acc * half
}

/// 8-point Gauss-Legendre rule, used for mesh edge lengths.
const GL8_X: [f64; 4] = [
    0.183434642495649805,
    0.525532409916328986,
    0.796666477413626740,
    0.960289856497536232,
];
const GL8_W: [f64; 4] = [
    0.362683783378361983,
    0.313706645877887287,
    0.222381034453374471,
    0.101228536290376259,
];

pub fn gl8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for i in 0..4 {
        let dx = half * GL8_X[i];
        acc += GL8_W[i] * (f(mid - dx) + f(mid + dx));
    }
    acc * half
}

/// Bracketed scalar root refinement: secant steps guarded by bisection.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them may be zero).
/// Returns the refined abscissa; the bracket shrinks below `tol` or the
/// function value underflows first.
pub fn refine_root<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let mut fhi = f(hi);
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(flo * fhi < 0.0, "refine_root requires a sign change");
    // Illinois variant: the stuck endpoint loses weight, so the bracket
    // keeps shrinking even when the function is one-sided.
    let mut side = 0i8;
    for _ in 0..300 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let denom = fhi - flo;
        let mut x = if denom != 0.0 {
            (lo * fhi - hi * flo) / denom
        } else {
            0.5 * (lo + hi)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if flo * fx < 0.0 {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        } else {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (lo + hi)
}

/// Quintic Hermite interpolation over [0, h].
///
/// Matches value, first and second derivative at both ends. Returns the
/// interpolated value and first derivative at `x`.
pub fn hermite5(
    y0: f64,
    d0: f64,
    dd0: f64,
    y1: f64,
    d1: f64,
    dd1: f64,
    h: f64,
    x: f64,
) -> (f64, f64) {
    let u = x / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u3 * u;
    let u5 = u4 * u;
    // Basis functions for value/slope/curvature at each end.
    let h00 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
    let h10 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
    let h20 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
    let h01 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
    let h11 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
    let h21 = 0.5 * (u3 - 2.0 * u4 + u5);
    let val = y0 * h00
        + d0 * h * h10
        + dd0 * h * h * h20
        + y1 * h01
        + d1 * h * h11
        + dd1 * h * h * h21;

    let g00 = -30.0 * u2 + 60.0 * u3 - 30.0 * u4;
    let g10 = 1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4;
    let g20 = 0.5 * (2.0 * u - 9.0 * u2 + 12.0 * u3 - 5.0 * u4);
    let g01 = 30.0 * u2 - 60.0 * u3 + 30.0 * u4;
    let g11 = -12.0 * u2 + 28.0 * u3 - 15.0 * u4;
    let g21 = 0.5 * (3.0 * u2 - 8.0 * u3 + 5.0 * u4);
    let der = (y0 * g00 + y1 * g01) / h
        + d0 * g10
        + d1 * g11
        + dd0 * h * g20
        + dd1 * h * g21;
    (val, der)
}

/// Fold an angle into [0, 2*pi).
pub fn fold_angle(theta: f64) -> f64 {
    let two_pi = core::f64::consts::TAU;
    let mut a = theta % two_pi;
    if a < 0.0 {
        a += two_pi;
    }
    a
}

/// Signed circular difference `a - b` folded into (-pi, pi].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let two_pi = core::f64::consts::TAU;
    let mut d = (a - b) % two_pi;
    if d > core::f64::consts::PI {
        d -= two_pi;
    } else if d <= -core::f64::consts::PI {
        d += two_pi;
    }
    d
}

/// Greatest common divisor, used when reducing rotation targets p/q.
pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

//! Unit-speed geodesic integration with conserved-quantity monitoring.
//!
//! State is (t, theta, u, v) with u = dt/ds and v = dtheta/ds. The geodesic
//! equations of ds^2 = dt^2 + r(t)^2 dtheta^2 are
//!
//! ```text
//!   t''     = r r' v^2
//!   theta'' = -2 (r'/r) u v
//! ```
//!
//! which conserve both the speed u^2 + r^2 v^2 and the angular momentum
//! c = r^2 v (equivalently r cos(angle with the parallel) = c). The full
//! state is integrated rather than reduced through the conservation law,
//! because the reduction degenerates at turning points (u = 0); the
//! conserved quantities are monitored instead.
//!
//! Integration is an adaptive embedded Dormand-Prince 5(4) pair. Events
//! (turning points, great-parallel crossings, pole arrivals) are located by
//! a bisection/secant hybrid on a single controlled step from the last
//! accepted node, and the node is then placed exactly on the event. theta
//! is kept unreduced so traces may wind arbitrarily many times.

use alloc::string::String;
use alloc::vec::Vec;

use crate::numeric::{angle_diff, fold_angle, hermite5};
use crate::surface::SurfaceOfRevolution;

/// Unit-speed state of a geodesic.
#[derive(Clone, Copy, Debug)]
pub struct GeodesicState {
    /// Profile parameter.
    pub t: f64,
    /// Rotation angle, unreduced (accumulates beyond 2*pi).
    pub theta: f64,
    /// dt/ds.
    pub u: f64,
    /// dtheta/ds.
    pub v: f64,
    /// Arc length since launch.
    pub s: f64,
}

impl GeodesicState {
    /// Angular momentum r^2 v, constant along a geodesic.
    pub fn clairaut_constant(&self, surface: &SurfaceOfRevolution) -> f64 {
        let r = surface.radius(self.t);
        r * r * self.v
    }

    pub fn speed(&self, surface: &SurfaceOfRevolution) -> f64 {
        let r = surface.radius(self.t);
        libm::sqrt(self.u * self.u + r * r * self.v * self.v)
    }
}

/// Integration tolerances and limits.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowTolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Hard cap on the step size; event monitors sample once per step.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for FlowTolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: 1.0,
            max_steps: 40_000_000,
        }
    }
}

/// Arc lengths below which two event roots are considered the same event.
const EVENT_DEDUP_S: f64 = 1e-7;
/// Event root tolerance in arc length.
const EVENT_S_TOL: f64 = 1e-10;
/// Radii below this are treated as a pole.
const POLE_RADIUS: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct TurningEvent {
    pub s: f64,
    pub t: f64,
}

/// A transverse crossing of the trace with itself on the surface.
#[derive(Clone, Copy, Debug)]
pub struct SelfIntersection {
    pub s1: f64,
    pub s2: f64,
    pub point: [f64; 3],
    /// 3D gap between the two refined curve points.
    pub separation: f64,
    /// Set when the crossing is nearly tangential or refinement did not
    /// converge; the chord-level estimate is kept.
    pub low_confidence: bool,
}

/// Why integration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxLength,
    TurningCount,
    GreatParallelCount,
    PoleArrival,
}

/// Stop condition for [`integrate_until`]; the max length always applies.
#[derive(Clone, Copy, Debug)]
pub enum StopWhen {
    MaxLength,
    /// Stop at the n-th turning event (u sign change).
    TurningEvents(usize),
    /// Stop at the n-th great-parallel crossing (launch point not counted).
    GreatParallelCrossings(usize),
    /// Stop at the n-th pole arrival (meridians only).
    PoleArrivals(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FlowError {
    /// Non-meridian trajectory entered the Clairaut-forbidden region
    /// r < |c|; indicates an integration failure.
    ForbiddenRegion { s: f64, r: f64, c: f64 },
    StepUnderflow { s: f64 },
    StepLimit { s: f64 },
    BadState(String),
}

impl core::fmt::Display for FlowError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FlowError::ForbiddenRegion { s, r, c } => write!(
                f,
                "trajectory entered forbidden region at s={s}: r={r} < |c|={}",
                c.abs()
            ),
            FlowError::StepUnderflow { s } => write!(f, "step size underflow at s={s}"),
            FlowError::StepLimit { s } => write!(f, "step budget exhausted at s={s}"),
            FlowError::BadState(msg) => write!(f, "bad integrator state: {msg}"),
        }
    }
}

/// Integrated geodesic with event records.
#[derive(Clone, Debug)]
pub struct GeodesicTrace {
    pub states: Vec<GeodesicState>,
    /// Angular momentum at launch.
    pub c: f64,
    pub length: f64,
    /// Launch angle with the great parallel, when launched there.
    pub launch_alpha: Option<f64>,
    pub turning_events: Vec<TurningEvent>,
    /// Arc lengths of great-parallel crossings.
    pub gp_crossings: Vec<f64>,
    /// Arc lengths of pole passages (meridians).
    pub pole_passages: Vec<f64>,
    pub stop_reason: StopReason,
}

impl GeodesicTrace {
    /// Net oriented rotation about the axis accumulated up to arc length s.
    pub fn total_rotation(&self, surface: &SurfaceOfRevolution, s: f64) -> f64 {
        self.state_at(surface, s).theta - self.states[0].theta
    }

    /// Rotation over the whole trace.
    pub fn final_rotation(&self) -> f64 {
        self.states.last().unwrap().theta - self.states[0].theta
    }

    /// Dense evaluation between stored nodes by quintic Hermite
    /// interpolation; derivatives at the nodes come from the geodesic
    /// equations, so the interpolant tracks the integrator's own accuracy.
    pub fn state_at(&self, surface: &SurfaceOfRevolution, s: f64) -> GeodesicState {
        let states = &self.states;
        let s = s.clamp(states[0].s, states[states.len() - 1].s);
        let mut lo = 0usize;
        let mut hi = states.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if states[mid].s <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = &states[lo];
        let b = &states[hi];
        let h = b.s - a.s;
        if h <= 1e-14 {
            return *a;
        }
        let (fa, fb) = (rhs(surface, a), rhs(surface, b));
        let x = s - a.s;
        let (t, u) = hermite5(a.t, a.u, fa.du, b.t, b.u, fb.du, h, x);
        let (theta, v) = hermite5(a.theta, a.v, fa.dv, b.theta, b.v, fb.dv, h, x);
        GeodesicState { t, theta, u, v, s }
    }

    /// Maximum drift of the angular momentum over the stored nodes.
    pub fn clairaut_drift(&self, surface: &SurfaceOfRevolution) -> f64 {
        let mut worst = 0.0f64;
        for st in &self.states {
            worst = worst.max((st.clairaut_constant(surface) - self.c).abs());
        }
        worst
    }

    /// Maximum deviation from unit speed over the stored nodes.
    pub fn speed_drift(&self, surface: &SurfaceOfRevolution) -> f64 {
        let mut worst = 0.0f64;
        for st in &self.states {
            worst = worst.max((st.speed(surface) - 1.0).abs());
        }
        worst
    }
}

struct Derivs {
    du: f64,
    dv: f64,
}

#[inline]
fn rhs(surface: &SurfaceOfRevolution, y: &GeodesicState) -> Derivs {
    let p = surface.eval(y.t);
    let du = p.r * p.dr * y.v * y.v;
    let dv = if y.v == 0.0 {
        0.0
    } else {
        -2.0 * (p.dr / p.r) * y.u * y.v
    };
    Derivs { du, dv }
}

// Dormand-Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Vec4 = [f64; 4];

#[inline]
fn deriv4(surface: &SurfaceOfRevolution, y: &Vec4) -> Vec4 {
    let st = GeodesicState {
        t: y[0],
        theta: y[1],
        u: y[2],
        v: y[3],
        s: 0.0,
    };
    let d = rhs(surface, &st);
    [y[2], y[3], d.du, d.dv]
}

#[inline]
fn axpy(y: &Vec4, h: f64, ks: &[(&Vec4, f64)]) -> Vec4 {
    let mut out = *y;
    for (k, a) in ks {
        for i in 0..4 {
            out[i] += h * a * k[i];
        }
    }
    out
}

/// One DP5(4) step from `y`; returns (y_new, k_last, error_norm).
fn dp54_step(
    surface: &SurfaceOfRevolution,
    y: &Vec4,
    k1: &Vec4,
    h: f64,
    rtol: f64,
    atol: f64,
) -> (Vec4, Vec4, f64) {
    let k2 = deriv4(surface, &axpy(y, h, &[(k1, A21)]));
    let k3 = deriv4(surface, &axpy(y, h, &[(k1, A31), (&k2, A32)]));
    let k4 = deriv4(surface, &axpy(y, h, &[(k1, A41), (&k2, A42), (&k3, A43)]));
    let k5 = deriv4(
        surface,
        &axpy(y, h, &[(k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]),
    );
    let k6 = deriv4(
        surface,
        &axpy(
            y,
            h,
            &[(k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)],
        ),
    );
    let y_new = axpy(
        y,
        h,
        &[(k1, B1), (&k3, B3), (&k4, B4), (&k5, B5), (&k6, B6)],
    );
    let k7 = deriv4(surface, &y_new);
    let mut err = 0.0f64;
    for i in 0..4 {
        let e =
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
        let q = e / scale;
        err += q * q;
    }
    (y_new, k7, libm::sqrt(err / 4.0))
}

/// Launch state on the great parallel at angle `alpha` with the parallel.
///
/// `alpha` in [0, pi/2]: 0 is tangent to the parallel, pi/2 a meridian. The
/// meridian component points toward increasing t (into the cone for the
/// smoothed-cone family), the rotational component toward increasing theta.
pub fn launch_from_great_parallel(surface: &SurfaceOfRevolution, alpha: f64) -> GeodesicState {
    let t = surface.great_parallel_t();
    let r = surface.radius(t);
    let v = if alpha >= core::f64::consts::FRAC_PI_2 {
        0.0
    } else {
        libm::cos(alpha) / r
    };
    GeodesicState {
        t,
        theta: 0.0,
        u: libm::sin(alpha),
        v,
        s: 0.0,
    }
}

/// Angle between the velocity and the local parallel, from the Clairaut
/// relation: cos(angle) = r * v for a unit-speed state.
pub fn clairaut_angle(state: &GeodesicState, surface: &SurfaceOfRevolution) -> f64 {
    let r = surface.radius(state.t);
    libm::acos((r * state.v).clamp(-1.0, 1.0))
}

/// Integrate to the given arc length.
pub fn integrate(
    surface: &SurfaceOfRevolution,
    state0: GeodesicState,
    max_length: f64,
    tols: &FlowTolerances,
) -> Result<GeodesicTrace, FlowError> {
    integrate_until(surface, state0, max_length, tols, StopWhen::MaxLength)
}

/// Integrate until a stop condition, capped at `max_length`.
pub fn integrate_until(
    surface: &SurfaceOfRevolution,
    state0: GeodesicState,
    max_length: f64,
    tols: &FlowTolerances,
    stop: StopWhen,
) -> Result<GeodesicTrace, FlowError> {
    let c0 = state0.clairaut_constant(surface);
    let is_meridian = c0.abs() < 1e-14;
    let t_gp = surface.great_parallel_t();
    let launch_alpha = if (state0.t - t_gp).abs() < 1e-12 && state0.s == 0.0 {
        Some(clairaut_angle(&state0, surface))
    } else {
        None
    };

    let mut trace = GeodesicTrace {
        states: alloc::vec![state0],
        c: c0,
        length: 0.0,
        launch_alpha,
        turning_events: Vec::new(),
        gp_crossings: Vec::new(),
        pole_passages: Vec::new(),
        stop_reason: StopReason::MaxLength,
    };

    let profile_len = surface.profile().total_length();
    let mut y: Vec4 = [state0.t, state0.theta, state0.u, state0.v];
    let mut s = state0.s;
    let s_end = state0.s + max_length;
    let mut k1 = deriv4(surface, &y);
    let mut h = 1e-4_f64.min(tols.h_max);
    let mut last_event_s = f64::MIN;
    let mut steps = 0usize;

    // Event monitors as signed functions of the state.
    let gp_offset = |t: f64| -> f64 {
        if surface.is_periodic() {
            let mut d = (t - t_gp) % profile_len;
            if d > 0.5 * profile_len {
                d -= profile_len;
            } else if d < -0.5 * profile_len {
                d += profile_len;
            }
            d
        } else {
            t - t_gp
        }
    };
    let pole_gap = |t: f64| -> f64 {
        // Signed clearance to the nearer pole (two-pole profiles only).
        if t < 0.5 * profile_len {
            t
        } else {
            profile_len - t
        }
    };

    let done = |trace: &GeodesicTrace| -> Option<StopReason> {
        match stop {
            StopWhen::MaxLength => None,
            StopWhen::TurningEvents(n) => {
                (trace.turning_events.len() >= n).then_some(StopReason::TurningCount)
            }
            StopWhen::GreatParallelCrossings(n) => {
                (trace.gp_crossings.len() >= n).then_some(StopReason::GreatParallelCount)
            }
            StopWhen::PoleArrivals(n) => {
                (trace.pole_passages.len() >= n).then_some(StopReason::PoleArrival)
            }
        }
    };

    'outer: while s < s_end - 1e-13 {
        steps += 1;
        if steps > tols.max_steps {
            return Err(FlowError::StepLimit { s });
        }
        h = h.min(s_end - s).min(tols.h_max);
        if h < 1e-14 {
            return Err(FlowError::StepUnderflow { s });
        }
        let (y_new, k7, err) = dp54_step(surface, &y, &k1, h, tols.rtol, tols.atol);
        if !err.is_finite() {
            return Err(FlowError::BadState(alloc::format!(
                "non-finite error estimate at s={s}"
            )));
        }
        if err > 1.0 {
            h *= (0.9 * libm::pow(err, -0.2)).clamp(0.2, 1.0);
            continue;
        }

        // Locate the earliest event inside the accepted step, if any.
        let mut event: Option<(f64, u8)> = None; // (sigma in (0, h], kind)
        let consider = |sigma: f64, kind: u8, event: &mut Option<(f64, u8)>| {
            if s + sigma <= last_event_s + EVENT_DEDUP_S {
                return;
            }
            match event {
                Some((cur, _)) if *cur <= sigma => {}
                _ => *event = Some((sigma, kind)),
            }
        };

        // Turning point: u changes sign.
        if !is_meridian && y[2] * y_new[2] < 0.0 {
            let sig = locate_event(surface, &y, &k1, h, |st| st[2]);
            consider(sig, 0, &mut event);
        }
        // Great-parallel crossing.
        let (g0, g1) = (gp_offset(y[0]), gp_offset(y_new[0]));
        if g0 * g1 < 0.0 && g0.abs() > 1e-13 {
            let sig = locate_event(surface, &y, &k1, h, |st| gp_offset(st[0]));
            consider(sig, 1, &mut event);
        }
        // Pole arrival (meridians on two-pole profiles).
        if is_meridian && !surface.is_periodic() {
            let (p0, p1) = (pole_gap(y[0]), pole_gap(y_new[0]));
            if p1 < 0.0 || (p0 > 0.0 && p1 < 1e-13) {
                let sig = locate_event(surface, &y, &k1, h, |st| pole_gap(st[0]));
                consider(sig.max(1e-15), 2, &mut event);
            }
        }

        if let Some((sigma, kind)) = event {
            // Re-take the step exactly to the event and handle it there.
            let (mut y_ev, _, _) = dp54_step(surface, &y, &k1, sigma, tols.rtol, tols.atol);
            s += sigma;
            last_event_s = s;
            match kind {
                0 => {
                    y_ev[2] = 0.0;
                    trace.turning_events.push(TurningEvent { s, t: y_ev[0] });
                }
                1 => {
                    trace.gp_crossings.push(s);
                }
                2 => {
                    // Continue through the pole along the antipodal
                    // meridian: theta jumps by pi, the radial motion
                    // reverses. The chart is singular at r = 0, so this is
                    // an analytic continuation, not an integration step.
                    trace.pole_passages.push(s);
                    y_ev[0] = y_ev[0].clamp(0.0, profile_len);
                    y_ev[1] += core::f64::consts::PI;
                    y_ev[2] = -y_ev[2];
                }
                _ => unreachable!(),
            }
            y = y_ev;
            k1 = deriv4(surface, &y);
            push_state(&mut trace, &y, s);
            if let Some(reason) = done(&trace) {
                trace.stop_reason = reason;
                break 'outer;
            }
            continue;
        }

        s += h;
        y = y_new;
        k1 = k7;
        push_state(&mut trace, &y, s);

        // Clairaut window guard: r may not drop below |c| (beyond noise).
        if !is_meridian {
            let r = surface.radius(y[0]);
            if r < c0.abs() - 1e-7 {
                return Err(FlowError::ForbiddenRegion { s, r, c: c0 });
            }
        }

        if let Some(reason) = done(&trace) {
            trace.stop_reason = reason;
            break;
        }
        h *= (0.9 * libm::pow(err.max(1e-16), -0.2)).clamp(0.2, 5.0);
    }

    trace.length = s - state0.s;
    Ok(trace)
}

fn push_state(trace: &mut GeodesicTrace, y: &Vec4, s: f64) {
    trace.states.push(GeodesicState {
        t: y[0],
        theta: y[1],
        u: y[2],
        v: y[3],
        s,
    });
}

/// Find the root of `g` along the solution within (0, h], by the
/// bisection/secant hybrid on single controlled steps from `y`.
fn locate_event(
    surface: &SurfaceOfRevolution,
    y: &Vec4,
    k1: &Vec4,
    h: f64,
    g: impl Fn(&Vec4) -> f64,
) -> f64 {
    let eval = |sigma: f64| -> f64 {
        if sigma <= 0.0 {
            return g(y);
        }
        let (st, _, _) = dp54_step(surface, y, k1, sigma, 1e-12, 1e-14);
        g(&st)
    };
    crate::numeric::refine_root(eval, 0.0, h, EVENT_S_TOL)
}

/// True when the trace touches or crosses the great parallel.
pub fn crosses_great_parallel(surface: &SurfaceOfRevolution, trace: &GeodesicTrace) -> bool {
    if !trace.gp_crossings.is_empty() {
        return true;
    }
    let t_gp = surface.great_parallel_t();
    trace.states.iter().any(|st| (st.t - t_gp).abs() < 1e-6)
}

/// Transverse self-crossings of the trace on the surface.
///
/// The trace is resampled into chart chords short enough to be faithful,
/// folded modulo 2*pi in theta, and candidate chord pairs from a uniform
/// spatial hash are tested exactly; hits are polished by a 2D Newton
/// iteration on the dense interpolant.
pub fn detect_self_intersections(
    surface: &SurfaceOfRevolution,
    trace: &GeodesicTrace,
) -> Vec<SelfIntersection> {
    let nodes = resample_chart(surface, trace);
    if nodes.len() < 4 {
        return Vec::new();
    }
    let two_pi = core::f64::consts::TAU;

    // Spatial hash over folded coordinates.
    let cell_theta = 0.35f64;
    let mut t_min = f64::MAX;
    let mut t_max = f64::MIN;
    for n in &nodes {
        t_min = t_min.min(n.1);
        t_max = t_max.max(n.1);
    }
    let cell_t = ((t_max - t_min) / 64.0).max(1e-6);
    let key = |theta_f: f64, t: f64| -> (i64, i64) {
        (
            libm::floor(theta_f / cell_theta) as i64,
            libm::floor((t - t_min) / cell_t) as i64,
        )
    };

    let nseg = nodes.len() - 1;
    let mut grid: alloc::collections::BTreeMap<(i64, i64), Vec<u32>> =
        alloc::collections::BTreeMap::new();
    for i in 0..nseg {
        let (_, t0, th0) = nodes[i];
        let (_, t1, th1) = nodes[i + 1];
        let thf = fold_angle(th0);
        let k0 = key(thf, t0.min(t1));
        let k1 = key(thf, t0.max(t1));
        for kt in k0.1..=k1.1 {
            grid.entry((k0.0, kt)).or_default().push(i as u32);
        }
        // Chords may land in the neighboring theta cell at their far end.
        let thf1 = fold_angle(th1);
        if key(thf1, t0).0 != k0.0 {
            let k2 = key(thf1, t0.min(t1));
            let k3 = key(thf1, t0.max(t1));
            for kt in k2.1..=k3.1 {
                let e = grid.entry((k2.0, kt)).or_default();
                if e.last() != Some(&(i as u32)) {
                    e.push(i as u32);
                }
            }
        }
    }

    let mut raw: Vec<(f64, f64)> = Vec::new();
    let theta_cells = libm::ceil(two_pi / cell_theta) as i64;
    for (cell, segs) in &grid {
        // This cell plus its 8 neighbors, with theta wraparound.
        let mut cand: Vec<u32> = Vec::new();
        for dth in -1..=1i64 {
            for dt in -1..=1i64 {
                let mut kth = (cell.0 + dth) % theta_cells;
                if kth < 0 {
                    kth += theta_cells;
                }
                if let Some(v) = grid.get(&(kth, cell.1 + dt)) {
                    cand.extend_from_slice(v);
                }
            }
        }
        cand.sort_unstable();
        cand.dedup();
        for &ia in segs.iter() {
            for &ib in &cand {
                if ib <= ia + 1 {
                    continue;
                }
                if let Some(hit) = chord_pair_crossing(&nodes, ia as usize, ib as usize) {
                    raw.push(hit);
                }
            }
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    raw.dedup_by(|a, b| (a.0 - b.0).abs() < EVENT_DEDUP_S && (a.1 - b.1).abs() < EVENT_DEDUP_S);

    let mut out: Vec<SelfIntersection> = Vec::new();
    for (s1_guess, s2_guess) in raw {
        let refined = refine_crossing(surface, trace, s1_guess, s2_guess);
        let (s1, s2, mut low_confidence) = match refined {
            Some((a, b)) => (a, b, false),
            None => (s1_guess, s2_guess, true),
        };
        let p1 = trace.state_at(surface, s1);
        let p2 = trace.state_at(surface, s2);
        let q1 = surface.point3d(p1.t, p1.theta);
        let q2 = surface.point3d(p2.t, p2.theta);
        let separation = dist3(&q1, &q2);
        // Nearly tangential chart crossing?
        let cross = p1.u * p2.v - p1.v * p2.u;
        if cross.abs() < 1e-4 {
            low_confidence = true;
        }
        out.push(SelfIntersection {
            s1,
            s2,
            point: [
                0.5 * (q1[0] + q2[0]),
                0.5 * (q1[1] + q2[1]),
                0.5 * (q1[2] + q2[2]),
            ],
            separation,
            low_confidence,
        });
    }
    out.sort_by(|a, b| a.s1.total_cmp(&b.s1).then(a.s2.total_cmp(&b.s2)));
    out.dedup_by(|a, b| (a.s1 - b.s1).abs() < 1e-6 && (a.s2 - b.s2).abs() < 1e-6);
    out
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    libm::sqrt(
        (a[0] - b[0]) * (a[0] - b[0])
            + (a[1] - b[1]) * (a[1] - b[1])
            + (a[2] - b[2]) * (a[2] - b[2]),
    )
}

/// Resample the trace into (s, t, theta) nodes with bounded chord extent in
/// the chart, subdividing stored steps through the dense interpolant.
fn resample_chart(surface: &SurfaceOfRevolution, trace: &GeodesicTrace) -> Vec<(f64, f64, f64)> {
    let max_dtheta = 0.2f64;
    let max_dt = 0.5f64;
    let mut out = Vec::with_capacity(trace.states.len());
    out.push((trace.states[0].s, trace.states[0].t, trace.states[0].theta));
    for w in trace.states.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dth = (b.theta - a.theta).abs();
        let dt = (b.t - a.t).abs();
        let parts = libm::ceil((dth / max_dtheta).max(dt / max_dt).max(1.0)) as usize;
        for j in 1..=parts {
            if j == parts {
                out.push((b.s, b.t, b.theta));
            } else {
                let s = a.s + (b.s - a.s) * j as f64 / parts as f64;
                let st = trace.state_at(surface, s);
                out.push((s, st.t, st.theta));
            }
        }
    }
    out
}

/// Exact 2D crossing test for a chord pair, allowing integer 2*pi shifts of
/// theta; returns arc-length parameters interpolated along the chords.
fn chord_pair_crossing(nodes: &[(f64, f64, f64)], i: usize, j: usize) -> Option<(f64, f64)> {
    let (sa0, ta0, tha0) = nodes[i];
    let (sa1, ta1, tha1) = nodes[i + 1];
    let (sb0, tb0, thb0) = nodes[j];
    let (sb1, tb1, thb1) = nodes[j + 1];

    // Candidate winding offsets: align the chord midpoints.
    let mid_a = 0.5 * (tha0 + tha1);
    let mid_b = 0.5 * (thb0 + thb1);
    let base = libm::round((mid_b - mid_a) / core::f64::consts::TAU) as i64;
    for dm in -1..=1i64 {
        let off = (base + dm) as f64 * core::f64::consts::TAU;
        let (xa0, ya0) = (tha0 + off, ta0);
        let (xa1, ya1) = (tha1 + off, ta1);
        let (xb0, yb0) = (thb0, tb0);
        let (xb1, yb1) = (thb1, tb1);
        let d1x = xa1 - xa0;
        let d1y = ya1 - ya0;
        let d2x = xb1 - xb0;
        let d2y = yb1 - yb0;
        let denom = d1x * d2y - d1y * d2x;
        if denom.abs() < 1e-15 {
            continue;
        }
        let rx = xb0 - xa0;
        let ry = yb0 - ya0;
        let p = (rx * d2y - ry * d2x) / denom;
        let q = (rx * d1y - ry * d1x) / denom;
        if (0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q) {
            let s1 = sa0 + p * (sa1 - sa0);
            let s2 = sb0 + q * (sb1 - sb0);
            if s2 - s1 > 1e-6 {
                return Some((s1, s2));
            }
        }
    }
    None
}

/// 2D Newton polish of a crossing through the dense interpolant.
fn refine_crossing(
    surface: &SurfaceOfRevolution,
    trace: &GeodesicTrace,
    mut s1: f64,
    mut s2: f64,
) -> Option<(f64, f64)> {
    let m = libm::round(
        (trace.state_at(surface, s2).theta - trace.state_at(surface, s1).theta)
            / core::f64::consts::TAU,
    );
    let span = trace.length;
    let (s1_0, s2_0) = (s1, s2);
    for _ in 0..12 {
        let a = trace.state_at(surface, s1);
        let b = trace.state_at(surface, s2);
        let f0 = a.theta + m * core::f64::consts::TAU - b.theta;
        let f1 = a.t - b.t;
        if f0.abs() < 1e-12 && f1.abs() < 1e-12 {
            return Some((s1, s2));
        }
        // Jacobian [[v1, -v2], [u1, -u2]]
        let det = a.v * (-b.u) - (-b.v) * a.u;
        if det.abs() < 1e-12 {
            return None;
        }
        let ds1 = (f0 * (-b.u) - (-b.v) * f1) / det;
        let ds2 = (a.v * f1 - f0 * a.u) / det;
        s1 -= ds1;
        s2 -= ds2;
        if (s1 - s1_0).abs() > 0.05 * span + 1.0 || (s2 - s2_0).abs() > 0.05 * span + 1.0 {
            return None;
        }
        if s1 < 0.0 || s2 > trace.states.last().unwrap().s || s2 - s1 < 1e-9 {
            return None;
        }
    }
    let a = trace.state_at(surface, s1);
    let b = trace.state_at(surface, s2);
    let ok = (a.theta + m * core::f64::consts::TAU - b.theta).abs() < 1e-9
        && (a.t - b.t).abs() < 1e-9;
    ok.then_some((s1, s2))
}

/// Reflection-symmetry defect around a turning event: the segment after the
/// event should mirror the segment before it through the turning meridian.
pub fn turning_symmetry_defect(
    surface: &SurfaceOfRevolution,
    trace: &GeodesicTrace,
    event_index: usize,
    span: f64,
    samples: usize,
) -> f64 {
    let ev = &trace.turning_events[event_index];
    let theta_turn = trace.state_at(surface, ev.s).theta;
    let mut worst = 0.0f64;
    for i in 1..=samples {
        let d = span * i as f64 / samples as f64;
        if ev.s - d < 0.0 || ev.s + d > trace.length {
            break;
        }
        let before = trace.state_at(surface, ev.s - d);
        let after = trace.state_at(surface, ev.s + d);
        worst = worst.max((before.t - after.t).abs());
        worst =
            worst.max(angle_diff(after.theta - theta_turn, theta_turn - before.theta).abs());
    }
    worst
}

// Keep the pole-radius constant referenced; it guards generic callers that
// evaluate curvature-like quantities near the axis.
#[allow(dead_code)]
fn near_pole(r: f64) -> bool {
    r.abs() < POLE_RADIUS
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{build_smoothed_cone, build_sphere, ConeParams, FilletKind};
    use core::f64::consts::{FRAC_PI_2, PI, TAU};

    fn sphere() -> SurfaceOfRevolution {
        SurfaceOfRevolution::new(build_sphere(1.0))
    }

    fn m2(n: f64, eps: f64) -> SurfaceOfRevolution {
        SurfaceOfRevolution::new(
            build_smoothed_cone(&ConeParams::new(n, eps, eps, FilletKind::Quintic)).unwrap(),
        )
    }

    #[test]
    fn launch_clairaut_values() {
        let m2 = m2(10.0, 0.05);
        let s0 = launch_from_great_parallel(&m2, 0.0);
        assert!((s0.clairaut_constant(&m2) - 1.0).abs() < 1e-12);
        let s1 = launch_from_great_parallel(&m2, FRAC_PI_2);
        assert!(s1.clairaut_constant(&m2).abs() < 1e-15);
        let s2 = launch_from_great_parallel(&m2, PI / 4.0);
        assert!((s2.clairaut_constant(&m2) - libm::sqrt(2.0) / 2.0).abs() < 1e-12);
        assert!((clairaut_angle(&s2, &m2) - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_equator_closes_after_tau() {
        let sph = sphere();
        let st = launch_from_great_parallel(&sph, 0.0);
        let trace = integrate(&sph, st, TAU, &FlowTolerances::default()).unwrap();
        let end = trace.states.last().unwrap();
        assert!((end.t - st.t).abs() < 1e-6);
        assert!((trace.final_rotation().abs() - TAU).abs() < 1e-6);
        assert!(trace.clairaut_drift(&sph) < 1e-9);
        assert!(trace.speed_drift(&sph) < 1e-9);
    }

    #[test]
    fn sphere_tilted_great_circle_conserves_and_closes() {
        let sph = sphere();
        let st = launch_from_great_parallel(&sph, 0.7);
        let trace = integrate(&sph, st, TAU, &FlowTolerances::default()).unwrap();
        let end = trace.states.last().unwrap();
        assert!((end.t - st.t).abs() < 1e-7, "t gap {}", (end.t - st.t).abs());
        assert!(((end.theta - st.theta) - TAU).abs() < 1e-6);
        assert!(trace.clairaut_drift(&sph) < 1e-9);
    }

    #[test]
    fn meridian_passes_poles_and_returns() {
        let m2 = m2(10.0, 0.05);
        let st = launch_from_great_parallel(&m2, FRAC_PI_2);
        let l = m2.profile().total_length();
        let trace = integrate(&m2, st, 2.0 * l, &FlowTolerances::default()).unwrap();
        assert_eq!(trace.pole_passages.len(), 2);
        let end = trace.states.last().unwrap();
        assert!((end.t - st.t).abs() < 1e-6);
        assert!((end.u - st.u).abs() < 1e-9);
        // A meridian does not rotate; theta changes only by the two pi
        // jumps of the pole continuations.
        assert!((trace.final_rotation() - TAU).abs() < 1e-9);
        assert!(crosses_great_parallel(&m2, &trace));
    }

    #[test]
    fn turning_event_matches_clairaut_radius() {
        let m2 = m2(20.0, 0.02);
        let (a1, a2) = m2.region_angles().unwrap();
        let alpha = 0.5 * (a1 + a2);
        let st = launch_from_great_parallel(&m2, alpha);
        let trace = integrate_until(
            &m2,
            st,
            500.0,
            &FlowTolerances::default(),
            StopWhen::TurningEvents(1),
        )
        .unwrap();
        assert_eq!(trace.turning_events.len(), 1);
        let ev = &trace.turning_events[0];
        let c = libm::cos(alpha);
        assert!(
            (m2.radius(ev.t) - c).abs() < 1e-8,
            "turning radius {} vs c {}",
            m2.radius(ev.t),
            c
        );
        // Monotone rotation away from meridians.
        let mut prev = 0.0;
        for st in &trace.states {
            let rot = (st.theta - trace.states[0].theta).abs();
            assert!(rot >= prev - 1e-9);
            prev = rot;
        }
    }

    #[test]
    fn turning_symmetry() {
        let m2 = m2(20.0, 0.02);
        let (a1, a2) = m2.region_angles().unwrap();
        let alpha = 0.4 * a1 + 0.6 * a2;
        let st = launch_from_great_parallel(&m2, alpha);
        let trace = integrate_until(
            &m2,
            st,
            500.0,
            &FlowTolerances::default(),
            StopWhen::GreatParallelCrossings(1),
        )
        .unwrap();
        assert!(!trace.turning_events.is_empty());
        let defect = turning_symmetry_defect(&m2, &trace, 0, 2.0, 40);
        assert!(defect < 1e-6, "symmetry defect {defect}");
    }

    #[test]
    fn tangent_launch_on_sloped_parallel_moves_outward() {
        let m2 = m2(10.0, 0.05);
        // Tangent to a cone parallel (r' != 0 there): the Clairaut window
        // keeps r >= c and the trajectory leaves the parallel immediately.
        let (c0, c1) = m2
            .profile()
            .region_span(crate::profile::Region::Cone)
            .unwrap();
        let t0 = 0.5 * (c0 + c1);
        let r0 = m2.radius(t0);
        let st = GeodesicState {
            t: t0,
            theta: 0.0,
            u: 0.0,
            v: 1.0 / r0,
            s: 0.0,
        };
        let trace = integrate(&m2, st, 2.0, &FlowTolerances::default()).unwrap();
        let mut moved = false;
        for q in &trace.states {
            assert!(m2.radius(q.t) >= r0 - 1e-9);
            if m2.radius(q.t) > r0 + 1e-4 {
                moved = true;
            }
        }
        assert!(moved, "trajectory failed to leave the tangent parallel");
    }

    #[test]
    fn deep_turn_self_intersects() {
        let m2 = m2(20.0, 0.02);
        let (a1, a2) = m2.region_angles().unwrap();
        // Deep into the cone: rotation to the turning point far exceeds pi.
        let alpha = 0.8 * a2 + 0.2 * a1;
        let st = launch_from_great_parallel(&m2, alpha);
        let trace = integrate_until(
            &m2,
            st,
            2000.0,
            &FlowTolerances::default(),
            StopWhen::GreatParallelCrossings(1),
        )
        .unwrap();
        let t_alpha = trace.turning_events[0].s;
        let rot = trace.total_rotation(&m2, t_alpha).abs();
        assert!(rot > PI + 0.01, "rotation to turn {rot}");
        let hits = detect_self_intersections(&m2, &trace);
        assert!(!hits.is_empty(), "expected a self-intersection");
        for h in &hits {
            assert!(h.separation < 1e-8 || h.low_confidence);
        }
    }

    #[test]
    fn great_parallel_trace_has_no_self_intersections() {
        let m2 = m2(10.0, 0.05);
        let st = launch_from_great_parallel(&m2, 0.0);
        let trace = integrate(&m2, st, TAU, &FlowTolerances::default()).unwrap();
        assert!(detect_self_intersections(&m2, &trace).is_empty());
    }

    #[test]
    fn synthetic_figure_eight_has_one_crossing() {
        let sph = sphere();
        // A chart-level figure eight around the equator; not a geodesic,
        // but a valid polyline for the detector.
        let mut states = Vec::new();
        let n = 2000usize;
        let t_mid = FRAC_PI_2;
        for i in 0..=n {
            let s = TAU * i as f64 / n as f64;
            let t = t_mid + 0.4 * libm::sin(2.0 * s);
            let theta = 0.6 * libm::sin(s);
            states.push(GeodesicState {
                t,
                theta,
                u: 0.8 * libm::cos(2.0 * s),
                v: 0.6 * libm::cos(s),
                s,
            });
        }
        let trace = GeodesicTrace {
            states,
            c: 0.3,
            length: TAU,
            launch_alpha: None,
            turning_events: Vec::new(),
            gp_crossings: Vec::new(),
            pole_passages: Vec::new(),
            stop_reason: StopReason::MaxLength,
        };
        let hits = detect_self_intersections(&sph, &trace);
        assert_eq!(hits.len(), 1, "hits: {hits:?}");
    }

    #[test]
    fn clairaut_drift_shrinks_with_tolerance() {
        let m2 = m2(10.0, 0.05);
        let st = launch_from_great_parallel(&m2, 0.9);
        let loose = FlowTolerances {
            rtol: 1e-6,
            atol: 1e-8,
            ..FlowTolerances::default()
        };
        let tight = FlowTolerances::default();
        let d_loose = integrate(&m2, st, 100.0, &loose)
            .unwrap()
            .clairaut_drift(&m2);
        let d_tight = integrate(&m2, st, 100.0, &tight)
            .unwrap()
            .clairaut_drift(&m2);
        assert!(d_tight < d_loose, "tight {d_tight} vs loose {d_loose}");
        assert!(d_tight < 1e-8);
    }

    #[test]
    fn dense_output_matches_nodes() {
        let sph = sphere();
        let st = launch_from_great_parallel(&sph, 0.3);
        let trace = integrate(&sph, st, 3.0, &FlowTolerances::default()).unwrap();
        for w in trace.states.windows(2) {
            let mid = 0.5 * (w[0].s + w[1].s);
            let q = trace.state_at(&sph, mid);
            let r = sph.radius(q.t);
            let speed = libm::sqrt(q.u * q.u + r * r * q.v * q.v);
            assert!((speed - 1.0).abs() < 1e-8, "speed {speed} at s={mid}");
            let c = r * r * q.v;
            assert!((c - trace.c).abs() < 1e-8);
        }
    }
}

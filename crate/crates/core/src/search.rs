//! Closed-geodesic census by shooting on the launch angle.
//!
//! Any closed geodesic on the surfaces built here meets the great parallel,
//! so geodesics are parameterized by their launch angle alpha there. Over
//! one radial oscillation (great parallel -> cone-side turn -> great
//! parallel -> base-side turn -> back), the rotation advances by a fixed
//! amount Phi(alpha); the orbit closes exactly when Phi is a rational
//! multiple 2 pi p / q of a full turn, after q periods and p net turns.
//! The census scans Phi on an alpha grid, root-finds each rational target
//! on sign-change brackets, and integrates every root into a full closed
//! trace with a measured closure residual.
//!
//! Degenerate families (every alpha closes, as on the round sphere) are
//! detected as flat stretches of Phi and reported as a single
//! representative rather than a root per grid point.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::flow::{
    integrate_until, launch_from_great_parallel, FlowError, FlowTolerances, GeodesicTrace,
    StopWhen,
};
use crate::numeric::gcd;
use crate::surface::SurfaceOfRevolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CaseLabel {
    Meridian,
    GreatParallel,
    /// Confined to the curved band at the great parallel.
    Belt,
    /// Enters the cap.
    Cap,
    /// Enters the cone but misses the cap.
    Cone,
    /// Control surfaces without the four-region decomposition.
    Body,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::Meridian => "meridian",
            CaseLabel::GreatParallel => "great_parallel",
            CaseLabel::Belt => "belt",
            CaseLabel::Cap => "cap",
            CaseLabel::Cone => "cone",
            CaseLabel::Body => "body",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchError {
    MeridianHasNoPeriod,
    Flow(FlowError),
    Truncated { alpha: f64, length: f64 },
    BadGrid(String),
}

impl From<FlowError> for SearchError {
    fn from(e: FlowError) -> Self {
        SearchError::Flow(e)
    }
}

impl core::fmt::Display for SearchError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SearchError::MeridianHasNoPeriod => {
                write!(f, "rotation per period is undefined for meridians")
            }
            SearchError::Flow(e) => write!(f, "integration failed: {e}"),
            SearchError::Truncated { alpha, length } => write!(
                f,
                "period at alpha={alpha} exceeds the length budget {length}"
            ),
            SearchError::BadGrid(msg) => write!(f, "bad search grid: {msg}"),
        }
    }
}

/// Rotation and length of one radial oscillation.
#[derive(Clone, Copy, Debug)]
pub struct PeriodData {
    pub alpha: f64,
    /// Net rotation over one full period.
    pub rotation: f64,
    pub period_length: f64,
    /// Radius at the first (outward) turning point.
    pub turn_radius: f64,
    /// Profile parameter at the first turning point.
    pub turn_t: f64,
    /// Rotation accumulated from launch to the first turning point.
    pub rotation_to_turn: f64,
    /// Arc length of the first turning point.
    pub turn_s: f64,
}

/// Rotation over one symmetric period of the alpha-launch geodesic.
///
/// By the reflection symmetry through turning meridians, the full period
/// is twice the segment between the first two turning events, and its
/// rotation is twice the rotation of that segment.
pub fn period_rotation(
    surface: &SurfaceOfRevolution,
    alpha: f64,
    tols: &FlowTolerances,
    max_length: f64,
) -> Result<PeriodData, SearchError> {
    if !(alpha > 0.0 && alpha < core::f64::consts::FRAC_PI_2) {
        return Err(SearchError::MeridianHasNoPeriod);
    }
    let st = launch_from_great_parallel(surface, alpha);
    let trace = integrate_until(surface, st, max_length, tols, StopWhen::TurningEvents(2))?;
    if trace.turning_events.len() < 2 {
        return Err(SearchError::Truncated {
            alpha,
            length: max_length,
        });
    }
    let e1 = trace.turning_events[0];
    let e2 = trace.turning_events[1];
    let th1 = trace.state_at(surface, e1.s).theta;
    let th2 = trace.state_at(surface, e2.s).theta;
    Ok(PeriodData {
        alpha,
        rotation: 2.0 * (th2 - th1),
        period_length: 2.0 * (e2.s - e1.s),
        turn_radius: surface.radius(e1.t),
        turn_t: e1.t,
        rotation_to_turn: th1 - trace.states[0].theta,
        turn_s: e1.s,
    })
}

/// Classify a launch angle against the region angles.
pub fn classify(surface: &SurfaceOfRevolution, alpha: f64) -> CaseLabel {
    if alpha <= 1e-9 {
        return CaseLabel::GreatParallel;
    }
    if alpha >= core::f64::consts::FRAC_PI_2 - 1e-9 {
        return CaseLabel::Meridian;
    }
    match surface.region_angles() {
        Ok((a1, a2)) => {
            if alpha < a1 {
                CaseLabel::Belt
            } else if alpha < a2 {
                CaseLabel::Cone
            } else {
                CaseLabel::Cap
            }
        }
        Err(_) => CaseLabel::Body,
    }
}

/// A closed geodesic with its closure diagnostics.
#[derive(Clone, Debug)]
pub struct ClosedGeodesic {
    pub trace: GeodesicTrace,
    pub length: f64,
    pub launch_alpha: f64,
    /// 3D position gap between the endpoints of the closed trace.
    pub closure_pos_gap: f64,
    /// Angle between the end and start tangents, radians.
    pub closure_angle_gap: f64,
    pub case_label: CaseLabel,
    /// Great-parallel crossings over the whole closed curve.
    pub crossings: u32,
    /// Net full turns about the axis.
    pub turns: i64,
    pub rotation_per_period: f64,
    pub period_length: f64,
    /// Rational rotation target this geodesic realizes, reduced.
    pub target: Option<(u64, u64)>,
    /// Representative of a one-parameter family of closed geodesics
    /// (rotation flat across the bracket, as on the round sphere).
    pub continuum_family: bool,
}

/// A rational target that bracketed a sign change but failed to polish to
/// the closure tolerance; reported, never silently dropped.
#[derive(Clone, Debug)]
pub struct UnresolvedCandidate {
    pub target: (u64, u64),
    pub alpha_bracket: (f64, f64),
    pub reason: String,
}

#[derive(Clone, Copy, Debug)]
pub struct GridPoint {
    pub alpha: f64,
    pub data: Option<PeriodData>,
}

/// Census of closed geodesics up to the stated truncation.
#[derive(Clone, Debug)]
pub struct Census {
    pub closed: Vec<ClosedGeodesic>,
    pub unresolved: Vec<UnresolvedCandidate>,
    pub grid: Vec<GridPoint>,
    /// Number of grid points whose period exceeded the length budget.
    pub truncated_grid_points: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    /// Absolute closure tolerance; the gate scales as
    /// `closure_tol * (1 + 0.01 * length)`.
    pub closure_tol: f64,
    /// Census length cutoff: closed geodesics longer than this are not
    /// enumerated, and grid periods beyond it are marked truncated.
    pub length_cutoff: f64,
    /// Largest period count q in the rational targets.
    pub q_max: u64,
    /// Rotation flatness threshold for continuum-family detection.
    pub flat_tol: f64,
    pub tols: FlowTolerances,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            closure_tol: 1e-6,
            length_cutoff: 400.0,
            q_max: 12,
            flat_tol: 1e-7,
            tols: FlowTolerances::default(),
        }
    }
}

fn closure_gate(opts: &SearchOptions, length: f64) -> f64 {
    opts.closure_tol * (1.0 + 0.01 * length)
}

fn tangent_angle_gap(
    surface: &SurfaceOfRevolution,
    a: &crate::flow::GeodesicState,
    b: &crate::flow::GeodesicState,
) -> f64 {
    let ta = surface.tangent3d(a.t, a.theta, a.u, a.v);
    let tb = surface.tangent3d(b.t, b.theta, b.u, b.v);
    let dot = ta[0] * tb[0] + ta[1] * tb[1] + ta[2] * tb[2];
    let na = libm::sqrt(ta[0] * ta[0] + ta[1] * ta[1] + ta[2] * ta[2]);
    let nb = libm::sqrt(tb[0] * tb[0] + tb[1] * tb[1] + tb[2] * tb[2]);
    libm::acos((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    libm::sqrt(
        (a[0] - b[0]) * (a[0] - b[0])
            + (a[1] - b[1]) * (a[1] - b[1])
            + (a[2] - b[2]) * (a[2] - b[2]),
    )
}

fn closure_gaps(surface: &SurfaceOfRevolution, trace: &GeodesicTrace) -> (f64, f64) {
    let a = &trace.states[0];
    let b = trace.states.last().unwrap();
    let pa = surface.point3d(a.t, a.theta);
    let pb = surface.point3d(b.t, b.theta);
    (dist3(&pa, &pb), tangent_angle_gap(surface, a, b))
}

/// The great parallel as a closed geodesic.
pub fn great_parallel_geodesic(
    surface: &SurfaceOfRevolution,
    opts: &SearchOptions,
) -> Result<ClosedGeodesic, SearchError> {
    let r = surface.max_radius();
    let st = launch_from_great_parallel(surface, 0.0);
    let len = core::f64::consts::TAU * r;
    let trace = integrate_until(surface, st, len, &opts.tols, StopWhen::MaxLength)?;
    let (pos_gap, ang_gap) = closure_gaps(surface, &trace);
    Ok(ClosedGeodesic {
        length: trace.length,
        launch_alpha: 0.0,
        closure_pos_gap: pos_gap,
        closure_angle_gap: ang_gap,
        case_label: CaseLabel::GreatParallel,
        crossings: 0,
        turns: 1,
        rotation_per_period: core::f64::consts::TAU,
        period_length: trace.length,
        target: Some((1, 1)),
        continuum_family: false,
        trace,
    })
}

/// A meridian as a closed geodesic (two pole passages on sphere-like
/// surfaces, one loop of the tube circle on tori).
pub fn meridian_geodesic(
    surface: &SurfaceOfRevolution,
    opts: &SearchOptions,
) -> Result<ClosedGeodesic, SearchError> {
    let l = surface.profile().total_length();
    let len = if surface.is_periodic() { l } else { 2.0 * l };
    let st = launch_from_great_parallel(surface, core::f64::consts::FRAC_PI_2);
    let trace = integrate_until(surface, st, len, &opts.tols, StopWhen::MaxLength)?;
    let a = &trace.states[0];
    let b = trace.states.last().unwrap();
    let pa = surface.point3d(a.t, a.theta);
    let pb = surface.point3d(b.t, b.theta);
    let pos_gap = dist3(&pa, &pb);
    let ang_gap = tangent_angle_gap(surface, a, b);
    Ok(ClosedGeodesic {
        length: trace.length,
        launch_alpha: core::f64::consts::FRAC_PI_2,
        closure_pos_gap: pos_gap,
        closure_angle_gap: ang_gap,
        case_label: CaseLabel::Meridian,
        crossings: trace.gp_crossings.len() as u32,
        turns: 0,
        rotation_per_period: 0.0,
        period_length: trace.length,
        target: None,
        continuum_family: false,
        trace,
    })
}

/// Integrate the closed geodesic at a polished launch angle for target
/// (p, q). Returns the record or a reason string.
fn build_closed(
    surface: &SurfaceOfRevolution,
    alpha: f64,
    target: (u64, u64),
    period: &PeriodData,
    opts: &SearchOptions,
    continuum_family: bool,
) -> Result<ClosedGeodesic, String> {
    let (p, q) = target;
    let expect_len = period.period_length * q as f64;
    let st = launch_from_great_parallel(surface, alpha);
    // The closure residual is the certificate: integrate the final trace
    // tighter than the grid sweeps, since theta error compounds over q
    // periods. Near-meridian orbits sweep past both poles with large
    // rotation rates, so a failed gate earns one retry at a much tighter
    // tolerance before the candidate is reported unresolved.
    let mut trace = None;
    let mut failure = String::new();
    for tighten in [0.02, 2e-5] {
        let build_tols = FlowTolerances {
            rtol: opts.tols.rtol * tighten,
            atol: opts.tols.atol * tighten,
            ..opts.tols
        };
        let cand = integrate_until(
            surface,
            st,
            expect_len * 1.05 + 5.0,
            &build_tols,
            StopWhen::GreatParallelCrossings(2 * q as usize),
        )
        .map_err(|e| alloc::format!("integration failed: {e}"))?;
        if cand.gp_crossings.len() < 2 * q as usize {
            return Err(alloc::format!(
                "expected {} great-parallel crossings, saw {}",
                2 * q,
                cand.gp_crossings.len()
            ));
        }
        let (pos_gap, ang_gap) = closure_gaps(surface, &cand);
        let gate = closure_gate(opts, cand.length);
        if pos_gap <= gate && ang_gap <= gate {
            trace = Some(cand);
            break;
        }
        failure = alloc::format!(
            "closure residual {pos_gap:.3e}/{ang_gap:.3e} exceeds gate {gate:.3e}"
        );
    }
    let Some(trace) = trace else {
        return Err(failure);
    };
    let (pos_gap, ang_gap) = closure_gaps(surface, &trace);
    Ok(ClosedGeodesic {
        length: trace.length,
        launch_alpha: alpha,
        closure_pos_gap: pos_gap,
        closure_angle_gap: ang_gap,
        case_label: classify(surface, alpha),
        crossings: trace.gp_crossings.len() as u32,
        turns: p as i64,
        rotation_per_period: period.rotation,
        period_length: period.period_length,
        target: Some(target),
        continuum_family,
        trace,
    })
}

/// Enumerate reduced rotation targets 2 pi p / q reachable across the grid
/// within the length cutoff.
pub fn enumerate_targets(grid: &[GridPoint], opts: &SearchOptions) -> Vec<(u64, u64)> {
    let two_pi = core::f64::consts::TAU;
    let mut set: BTreeSet<(u64, u64)> = BTreeSet::new();
    for w in grid.windows(2) {
        let (Some(a), Some(b)) = (w[0].data, w[1].data) else {
            continue;
        };
        let lo = a.rotation.min(b.rotation);
        let hi = a.rotation.max(b.rotation);
        let max_period = a.period_length.max(b.period_length);
        for q in 1..=opts.q_max {
            if max_period * q as f64 > opts.length_cutoff * 1.25 {
                continue;
            }
            let p_lo = libm::ceil(lo * q as f64 / two_pi - 1e-12).max(1.0) as u64;
            let p_hi = libm::floor(hi * q as f64 / two_pi + 1e-12) as u64;
            for p in p_lo..=p_hi {
                if gcd(p, q) == 1 {
                    set.insert((p, q));
                }
            }
        }
    }
    set.into_iter().collect()
}

/// Scan the launch-angle grid and assemble the census.
///
/// `targets`: explicit reduced rationals (p, q) meaning rotation
/// 2 pi p / q per period; when empty, targets are enumerated from the
/// grid's rotation range. The meridian and the great parallel are always
/// appended as known closed geodesics.
pub fn find_closed(
    surface: &SurfaceOfRevolution,
    grid_size: usize,
    targets: &[(u64, u64)],
    opts: &SearchOptions,
) -> Result<Census, SearchError> {
    if grid_size < 8 {
        return Err(SearchError::BadGrid(alloc::format!(
            "grid size {grid_size} too small"
        )));
    }
    let two_pi = core::f64::consts::TAU;
    let half_pi = core::f64::consts::FRAC_PI_2;

    // Period budget per grid point: a closed geodesic of q periods fits
    // the cutoff only if one period fits it already.
    let period_budget = opts.length_cutoff;

    let mut grid = Vec::with_capacity(grid_size);
    let mut truncated = 0usize;
    for i in 0..grid_size {
        let alpha = half_pi * (i + 1) as f64 / (grid_size + 1) as f64;
        match period_rotation(surface, alpha, &opts.tols, period_budget) {
            Ok(data) => grid.push(GridPoint {
                alpha,
                data: Some(data),
            }),
            Err(SearchError::Truncated { .. }) => {
                truncated += 1;
                grid.push(GridPoint { alpha, data: None });
            }
            Err(e) => return Err(e),
        }
    }

    let target_list: Vec<(u64, u64)> = if targets.is_empty() {
        enumerate_targets(&grid, opts)
    } else {
        let mut t: Vec<(u64, u64)> = targets
            .iter()
            .map(|&(p, q)| {
                let g = gcd(p, q).max(1);
                (p / g, q / g)
            })
            .collect();
        t.sort_unstable();
        t.dedup();
        t
    };

    let mut closed: Vec<ClosedGeodesic> = Vec::new();
    let mut unresolved: Vec<UnresolvedCandidate> = Vec::new();

    for &(p, q) in &target_list {
        let want = two_pi * p as f64 / q as f64;
        // Flat stretches first: a run of grid points all within flat_tol
        // of the target is a degenerate family, not a string of roots.
        let mut i = 0usize;
        let mut flat_mask = alloc::vec![false; grid.len()];
        while i < grid.len() {
            let flat = grid[i]
                .data
                .map(|d| (d.rotation - want).abs() < opts.flat_tol)
                .unwrap_or(false);
            if !flat {
                i += 1;
                continue;
            }
            let start = i;
            while i < grid.len()
                && grid[i]
                    .data
                    .map(|d| (d.rotation - want).abs() < opts.flat_tol)
                    .unwrap_or(false)
            {
                flat_mask[i] = true;
                i += 1;
            }
            let run_len = i - start;
            if run_len >= 3 {
                let mid = start + run_len / 2;
                let data = grid[mid].data.unwrap();
                if data.period_length * q as f64 <= opts.length_cutoff {
                    match build_closed(surface, grid[mid].alpha, (p, q), &data, opts, true) {
                        Ok(cg) => closed.push(cg),
                        Err(reason) => unresolved.push(UnresolvedCandidate {
                            target: (p, q),
                            alpha_bracket: (grid[start].alpha, grid[i - 1].alpha),
                            reason,
                        }),
                    }
                }
            } else {
                // Too short to be a family; let bracketing handle it.
                for m in flat_mask.iter_mut().take(i).skip(start) {
                    *m = false;
                }
            }
        }

        for w in 0..grid.len() - 1 {
            if flat_mask[w] || flat_mask[w + 1] {
                continue;
            }
            let (Some(a), Some(b)) = (grid[w].data, grid[w + 1].data) else {
                continue;
            };
            let fa = a.rotation - want;
            let fb = b.rotation - want;
            if fa == 0.0 || fa * fb >= 0.0 {
                continue;
            }
            // Estimated closed length at this bracket.
            let est_len = q as f64 * 0.5 * (a.period_length + b.period_length);
            if est_len > opts.length_cutoff {
                continue;
            }
            let mut last_period: Option<PeriodData> = None;
            let alpha_root = crate::numeric::refine_root(
                |alpha| match period_rotation(surface, alpha, &opts.tols, period_budget) {
                    Ok(d) => {
                        let f = d.rotation - want;
                        last_period = Some(d);
                        f
                    }
                    Err(_) => f64::NAN,
                },
                grid[w].alpha,
                grid[w + 1].alpha,
                1e-13,
            );
            let Some(period) = last_period else {
                unresolved.push(UnresolvedCandidate {
                    target: (p, q),
                    alpha_bracket: (grid[w].alpha, grid[w + 1].alpha),
                    reason: "period integration failed during polish".into(),
                });
                continue;
            };
            if q as f64 * period.period_length > opts.length_cutoff {
                continue;
            }
            match build_closed(surface, alpha_root, (p, q), &period, opts, false) {
                Ok(cg) => closed.push(cg),
                Err(reason) => unresolved.push(UnresolvedCandidate {
                    target: (p, q),
                    alpha_bracket: (grid[w].alpha, grid[w + 1].alpha),
                    reason,
                }),
            }
        }
    }

    // Known closed geodesics, appended regardless of the cutoff.
    closed.push(great_parallel_geodesic(surface, opts)?);
    closed.push(meridian_geodesic(surface, opts)?);

    // Deterministic order, then congruence-duplicate merging on the
    // (length, alpha, |rotation|) triple.
    closed.sort_by(|a, b| {
        a.launch_alpha
            .total_cmp(&b.launch_alpha)
            .then(a.length.total_cmp(&b.length))
    });
    closed.dedup_by(|a, b| {
        (a.length - b.length).abs() < 1e-6
            && (a.launch_alpha - b.launch_alpha).abs() < 1e-6
            && (a.rotation_per_period.abs() - b.rotation_per_period.abs()).abs() < 1e-6
    });

    Ok(Census {
        closed,
        unresolved,
        grid,
        truncated_grid_points: truncated,
    })
}

//! End-to-end scan: build the surface, enumerate closed geodesics, test
//! every one of them for the 1/k property, and report the verdict with a
//! concrete shortcut witness per failing geodesic.
//!
//! The verdict is always relative to the stated truncation (angle grid,
//! length cutoff, period bound); the report discloses those bounds and
//! never silently drops an unresolved candidate. Control scans on the
//! round sphere and on tori exercise both verdict directions.

use alloc::string::String;
use alloc::vec::Vec;

use crate::development::{develop, min_height_for_rotation};
use crate::flow::{crosses_great_parallel, detect_self_intersections, FlowTolerances};
use crate::mesh::{build_mesh, MeshResolution};
use crate::minimality::{
    check_k_geodesic_from, jump_witness_from, loop_decomposition_from, CheckOptions,
    MinimalityReport, Verdict,
};
use crate::profile::{build_smoothed_cone, build_sphere, build_torus, ConeParams, FilletKind};
use crate::search::{find_closed, CaseLabel, ClosedGeodesic, SearchOptions};
use crate::surface::SurfaceOfRevolution;

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanConfig {
    pub k: u32,
    /// Cone height.
    pub n: f64,
    /// Fillet arc length at the great-parallel corner.
    pub belt: f64,
    /// Fillet arc length at the tip.
    pub cap: f64,
    pub fillet: FilletKind,
    /// Depth of the great-parallel neighborhood used to pick the witness
    /// route (disc shortcuts inside, intersection loops outside).
    pub zeta: f64,
    pub alpha_grid: usize,
    /// Explicit rotation targets p/q; empty means enumerate from the grid.
    pub pq_list: Vec<(u64, u64)>,
    pub q_max: u64,
    pub length_cutoff: f64,
    pub mesh: MeshResolution,
    pub n_offsets: usize,
    pub margin_frac: f64,
    pub closure_tol: f64,
    pub tolerances: FlowTolerances,
}

impl ScanConfig {
    /// Defaults for a given k: thin fillets, a neighborhood depth well
    /// under 1/k, and the cone height from the rotation requirement with a
    /// 2x safety factor.
    pub fn defaults_for_k(k: u32) -> Result<ScanConfig, ScanError> {
        let zeta = (0.05f64).min(0.4 / k as f64);
        let target = 2.0 * (k as f64 + 1.0) * core::f64::consts::PI;
        let n = 2 * min_height_for_rotation(target, zeta).map_err(|e| ScanError::Develop(e))?;
        Ok(ScanConfig {
            k,
            n: n as f64,
            belt: 0.02,
            cap: 0.02,
            fillet: FilletKind::Quintic,
            zeta,
            alpha_grid: 2000,
            pq_list: Vec::new(),
            q_max: 12,
            length_cutoff: 40.0 * n as f64,
            mesh: MeshResolution::new(256, 256),
            n_offsets: 256,
            margin_frac: 0.01,
            closure_tol: 1e-6,
            tolerances: FlowTolerances::default(),
        })
    }

    /// Hard validation plus advisory warnings (recorded in the report).
    pub fn validate(&self) -> Result<Vec<String>, ScanError> {
        if self.k < 2 {
            return Err(ScanError::Config(alloc::format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if !(self.belt < self.zeta) {
            return Err(ScanError::Config(alloc::format!(
                "belt fillet length {} must be smaller than the neighborhood depth zeta {}",
                self.belt,
                self.zeta
            )));
        }
        if !(self.zeta < 1.0 / self.k as f64) {
            return Err(ScanError::Config(alloc::format!(
                "zeta {} must be well below 1/k = {}",
                self.zeta,
                1.0 / self.k as f64
            )));
        }
        if self.alpha_grid < 1000 {
            return Err(ScanError::Config(alloc::format!(
                "alpha grid {} below the 1000-point minimum",
                self.alpha_grid
            )));
        }
        let mut warnings = Vec::new();
        let target = 2.0 * (self.k as f64 + 1.0) * core::f64::consts::PI;
        if let Ok(rec) = min_height_for_rotation(target, self.zeta) {
            if self.n < rec as f64 {
                warnings.push(alloc::format!(
                    "cone height n={} is below the recommended minimum {} for k={} at zeta={}; \
                     deep-turn rotations may stay under {:.3} and the intersection route may \
                     not apply to every cone-case geodesic (witnesses fall back to disc, \
                     parallel and mesh shortcuts)",
                    self.n,
                    rec,
                    self.k,
                    self.zeta,
                    target
                ));
            }
        }
        Ok(warnings)
    }
}

#[derive(Clone, Debug)]
pub enum ScanError {
    Config(String),
    Profile(crate::profile::ProfileError),
    Mesh(crate::mesh::MeshError),
    Search(crate::search::SearchError),
    Develop(crate::development::DevelopError),
}

impl core::fmt::Display for ScanError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ScanError::Config(msg) => write!(f, "invalid scan config: {msg}"),
            ScanError::Profile(e) => write!(f, "{e}"),
            ScanError::Mesh(e) => write!(f, "{e}"),
            ScanError::Search(e) => write!(f, "{e}"),
            ScanError::Develop(e) => write!(f, "{e}"),
        }
    }
}

impl From<crate::profile::ProfileError> for ScanError {
    fn from(e: crate::profile::ProfileError) -> Self {
        ScanError::Profile(e)
    }
}
impl From<crate::mesh::MeshError> for ScanError {
    fn from(e: crate::mesh::MeshError) -> Self {
        ScanError::Mesh(e)
    }
}
impl From<crate::search::SearchError> for ScanError {
    fn from(e: crate::search::SearchError) -> Self {
        ScanError::Search(e)
    }
}
impl From<crate::development::DevelopError> for ScanError {
    fn from(e: crate::development::DevelopError) -> Self {
        ScanError::Develop(e)
    }
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurfaceSummary {
    pub total_length: f64,
    pub great_parallel_t: f64,
    pub max_radius: f64,
    pub alpha_prime: f64,
    pub alpha_double_prime: f64,
    pub sector_angle_per_turn: f64,
    pub recommended_min_n: Option<u64>,
}

/// One closed geodesic in the report (trace dropped, diagnostics kept).
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeodesicRecord {
    pub launch_alpha: f64,
    pub length: f64,
    pub case: CaseLabel,
    pub target: Option<(u64, u64)>,
    pub crossings: u32,
    pub turns: i64,
    pub rotation_per_period: f64,
    pub period_length: f64,
    pub closure_pos_gap: f64,
    pub closure_angle_gap: f64,
    pub self_intersections: usize,
    pub cone_intersections: usize,
    /// Rotation accumulated from launch to the first turning point.
    pub rotation_to_turn: Option<f64>,
    /// Whole trace within the zeta-neighborhood of the great parallel.
    pub within_zeta: bool,
    pub continuum_family: bool,
    pub minimality: MinimalityReport,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UnresolvedRecord {
    pub target: (u64, u64),
    pub alpha_bracket: (f64, f64),
    pub reason: String,
}

#[derive(Clone, Copy, Debug, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckCount {
    pub checked: usize,
    pub passed: usize,
}

impl CheckCount {
    fn tally(&mut self, ok: bool) {
        self.checked += 1;
        if ok {
            self.passed += 1;
        }
    }
    pub fn all_passed(&self) -> bool {
        self.checked == self.passed
    }
}

/// Property-suite results bundled with every scan.
#[derive(Clone, Copy, Debug, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PropertyChecks {
    /// Every closed geodesic in the census meets the great parallel.
    pub great_parallel_crossing: CheckCount,
    /// Turning rotation beyond pi implies at least one self-intersection.
    pub rotation_implies_intersection: CheckCount,
    /// First-return rotation strictly increases over the entry-angle grid.
    pub first_return_monotone: CheckCount,
    /// With at least k+1 cone crossings, the innermost loop is strictly
    /// the shortest in its excursion.
    pub innermost_loop_shortest: CheckCount,
    /// Self-intersecting closed geodesics admit a deletable loop within
    /// one 1/k segment.
    pub loop_jump_available: CheckCount,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationNote {
    pub alpha_grid: usize,
    pub length_cutoff: f64,
    pub q_max: u64,
    /// Grid points whose period exceeded the length budget (their angle
    /// window is not covered by the census).
    pub truncated_grid_points: usize,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanReport {
    pub config: ScanConfig,
    pub warnings: Vec<String>,
    pub surface: SurfaceSummary,
    pub geodesics: Vec<GeodesicRecord>,
    pub unresolved: Vec<UnresolvedRecord>,
    /// True exactly when every found closed geodesic fails the 1/k test
    /// with a concrete witness and no candidate was left unresolved.
    pub theorem_verdict: bool,
    pub truncation: TruncationNote,
    pub checks: PropertyChecks,
}

fn max_gp_offset(surface: &SurfaceOfRevolution, cg: &ClosedGeodesic) -> f64 {
    let mut worst = 0.0f64;
    for st in &cg.trace.states {
        worst = worst.max(surface.offset_from_great_parallel(st.t).abs());
    }
    worst
}

/// Assemble the per-geodesic record, running the minimality check and the
/// property tallies.
fn examine(
    surface: &SurfaceOfRevolution,
    mesh: &crate::mesh::SurfaceMesh,
    cg: &ClosedGeodesic,
    k: u32,
    zeta: f64,
    n_offsets: usize,
    margin_frac: f64,
    checks: &mut PropertyChecks,
) -> Result<GeodesicRecord, ScanError> {
    let hits = detect_self_intersections(surface, &cg.trace);
    let cone_hits = hits
        .iter()
        .filter(|h| {
            let st = cg.trace.state_at(surface, h.s1);
            surface.profile().region_at(st.t) == crate::profile::Region::Cone
        })
        .count();
    let within_zeta = max_gp_offset(surface, cg) <= zeta;
    let opts = CheckOptions {
        n_offsets,
        margin_frac,
        early_exit: true,
        prefer_disc: within_zeta,
    };
    let minimality = check_k_geodesic_from(surface, mesh, cg, k, &opts, &hits)?;

    checks.great_parallel_crossing.tally(crosses_great_parallel(surface, &cg.trace));

    let rotation_to_turn = cg
        .trace
        .turning_events
        .first()
        .map(|e| cg.trace.total_rotation(surface, e.s));
    if cg.case_label == CaseLabel::Cone {
        if let Some(rot) = rotation_to_turn {
            if rot.abs() > core::f64::consts::PI + 0.01 {
                checks.rotation_implies_intersection.tally(!hits.is_empty());
            }
        }
    }
    if !hits.is_empty() && cg.case_label != CaseLabel::Body {
        let jump = jump_witness_from(surface, cg, k, &hits);
        checks.loop_jump_available.tally(jump.is_some());
    }
    if cone_hits >= (k as usize + 1) {
        if let Ok(loops) = loop_decomposition_from(surface, cg, &hits) {
            let mut ok = !loops.is_empty();
            for inner in loops.iter().filter(|l| l.innermost) {
                for other in loops.iter().filter(|l| l.excursion == inner.excursion) {
                    if !other.innermost && inner.length >= other.length {
                        ok = false;
                    }
                }
            }
            checks.innermost_loop_shortest.tally(ok);
        }
    }

    Ok(GeodesicRecord {
        launch_alpha: cg.launch_alpha,
        length: cg.length,
        case: cg.case_label,
        target: cg.target,
        crossings: cg.crossings,
        turns: cg.turns,
        rotation_per_period: cg.rotation_per_period,
        period_length: cg.period_length,
        closure_pos_gap: cg.closure_pos_gap,
        closure_angle_gap: cg.closure_angle_gap,
        self_intersections: hits.len(),
        cone_intersections: cone_hits,
        rotation_to_turn,
        within_zeta,
        continuum_family: cg.continuum_family,
        minimality,
    })
}

/// Full scan of a smoothed-cone surface for k-segment minimality.
pub fn scan(config: &ScanConfig) -> Result<ScanReport, ScanError> {
    let warnings = config.validate()?;
    let params = ConeParams::new(config.n, config.belt, config.cap, config.fillet);
    let surface = SurfaceOfRevolution::new(build_smoothed_cone(&params)?);
    let (a1, a2) = surface
        .region_angles()
        .map_err(|e| ScanError::Config(alloc::format!("{e}")))?;
    let dev = develop(&surface)?;
    let mesh = build_mesh(&surface, config.mesh)?;

    let mut checks = PropertyChecks::default();
    // First-return monotonicity over a 200-point entry-angle grid.
    {
        let alpha_max =
            libm::acos((dev.apex_radius_inner / dev.apex_radius_outer).clamp(-1.0, 1.0)) - 1e-9;
        let mut prev = 0.0f64;
        let mut monotone = true;
        for i in 1..=200 {
            let a = alpha_max * i as f64 / 200.0;
            match dev.first_return_rotation(a) {
                Ok(t) => {
                    if t <= prev + 1e-9 {
                        monotone = false;
                    }
                    prev = t;
                }
                Err(_) => monotone = false,
            }
        }
        checks.first_return_monotone.tally(monotone);
    }

    let opts = SearchOptions {
        closure_tol: config.closure_tol,
        length_cutoff: config.length_cutoff,
        q_max: config.q_max,
        flat_tol: 1e-7,
        tols: config.tolerances,
    };
    let census = find_closed(&surface, config.alpha_grid, &config.pq_list, &opts)?;

    let mut geodesics = Vec::with_capacity(census.closed.len());
    for cg in &census.closed {
        geodesics.push(examine(
            &surface,
            &mesh,
            cg,
            config.k,
            config.zeta,
            config.n_offsets,
            config.margin_frac,
            &mut checks,
        )?);
    }

    let unresolved: Vec<UnresolvedRecord> = census
        .unresolved
        .iter()
        .map(|u| UnresolvedRecord {
            target: u.target,
            alpha_bracket: u.alpha_bracket,
            reason: u.reason.clone(),
        })
        .collect();

    let all_fail = geodesics
        .iter()
        .all(|g| g.minimality.verdict == Verdict::Not1k && !g.minimality.witnesses.is_empty());
    let theorem_verdict = all_fail && unresolved.is_empty();

    Ok(ScanReport {
        config: config.clone(),
        warnings,
        surface: SurfaceSummary {
            total_length: surface.profile().total_length(),
            great_parallel_t: surface.great_parallel_t(),
            max_radius: surface.max_radius(),
            alpha_prime: a1,
            alpha_double_prime: a2,
            sector_angle_per_turn: dev.sector_angle_per_turn,
            recommended_min_n: min_height_for_rotation(
                2.0 * (config.k as f64 + 1.0) * core::f64::consts::PI,
                config.zeta,
            )
            .ok(),
        },
        geodesics,
        unresolved,
        theorem_verdict,
        truncation: TruncationNote {
            alpha_grid: config.alpha_grid,
            length_cutoff: config.length_cutoff,
            q_max: config.q_max,
            truncated_grid_points: census.truncated_grid_points,
        },
        checks,
    })
}

/// Control report for a non-cone surface.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlReport {
    pub description: String,
    pub k: u32,
    pub geodesics: Vec<GeodesicRecord>,
    /// Same convention as the scan verdict: true iff every found closed
    /// geodesic fails the 1/k test.
    pub theorem_verdict: bool,
}

/// Census + 1/k checks on the round sphere: every closed geodesic is a
/// great circle and the test must come back minimizing-within-tolerance,
/// so the verdict is expected to be false.
pub fn sphere_control(
    radius: f64,
    k: u32,
    mesh_res: MeshResolution,
    n_offsets: usize,
) -> Result<ControlReport, ScanError> {
    let surface = SurfaceOfRevolution::new(build_sphere(radius));
    let mesh = build_mesh(&surface, mesh_res)?;
    let opts = SearchOptions {
        length_cutoff: 8.0 * radius * core::f64::consts::PI,
        ..SearchOptions::default()
    };
    let census = find_closed(&surface, 1000, &[], &opts)?;
    let mut checks = PropertyChecks::default();
    let mut geodesics = Vec::new();
    for cg in &census.closed {
        geodesics.push(examine(
            &surface, &mesh, cg, k, 0.1, n_offsets, 0.01, &mut checks,
        )?);
    }
    let verdict = geodesics
        .iter()
        .all(|g| g.minimality.verdict == Verdict::Not1k);
    Ok(ControlReport {
        description: alloc::format!("round sphere, radius {radius}"),
        k,
        geodesics,
        theorem_verdict: verdict,
    })
}

/// Minimality reports for the two equators of a torus of revolution.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TorusControlReport {
    pub major: f64,
    pub minor: f64,
    pub k: u32,
    /// Inner equator: the systolic candidate; expected minimizing within
    /// tolerance for moderate k.
    pub inner: MinimalityReport,
    /// Outer equator: expected to fail with a mesh witness over the tube.
    pub outer: MinimalityReport,
}

/// Build the circular geodesic at a parallel with r'(t0) = 0.
fn parallel_geodesic(
    surface: &SurfaceOfRevolution,
    t0: f64,
    tols: &FlowTolerances,
) -> Result<ClosedGeodesic, ScanError> {
    let r = surface.radius(t0);
    let st = crate::flow::GeodesicState {
        t: t0,
        theta: 0.0,
        u: 0.0,
        v: 1.0 / r,
        s: 0.0,
    };
    let len = core::f64::consts::TAU * r;
    let trace = crate::flow::integrate(surface, st, len, tols)?;
    let a = &trace.states[0];
    let b = trace.states.last().unwrap();
    let pa = surface.point3d(a.t, a.theta);
    let pb = surface.point3d(b.t, b.theta);
    let gap = libm::sqrt(
        (pa[0] - pb[0]) * (pa[0] - pb[0])
            + (pa[1] - pb[1]) * (pa[1] - pb[1])
            + (pa[2] - pb[2]) * (pa[2] - pb[2]),
    );
    Ok(ClosedGeodesic {
        length: trace.length,
        launch_alpha: 0.0,
        closure_pos_gap: gap,
        closure_angle_gap: 0.0,
        case_label: CaseLabel::Body,
        crossings: 0,
        turns: 1,
        rotation_per_period: core::f64::consts::TAU,
        period_length: trace.length,
        target: Some((1, 1)),
        continuum_family: false,
        trace,
    })
}

impl From<crate::flow::FlowError> for ScanError {
    fn from(e: crate::flow::FlowError) -> Self {
        ScanError::Search(crate::search::SearchError::Flow(e))
    }
}

/// Check both equators of the torus: the positive control for the
/// 1/k machinery (the checker must be able to return both verdicts).
pub fn torus_control(
    major: f64,
    minor: f64,
    k: u32,
    mesh_res: MeshResolution,
    n_offsets: usize,
) -> Result<TorusControlReport, ScanError> {
    if !(major > 2.0 * minor) {
        return Err(ScanError::Config(alloc::format!(
            "torus control expects major > 2 minor, got {major} vs {minor}"
        )));
    }
    let surface = SurfaceOfRevolution::new(build_torus(major, minor)?);
    let mesh = build_mesh(&surface, mesh_res)?;
    let tols = FlowTolerances::default();
    // Inner equator: half way around the tube circle from the outer one.
    let inner_t = 0.5 * surface.profile().total_length();
    let inner = parallel_geodesic(&surface, inner_t, &tols)?;
    let outer = parallel_geodesic(&surface, 0.0, &tols)?;
    let opts = CheckOptions {
        n_offsets,
        margin_frac: 0.01,
        early_exit: true,
        prefer_disc: false,
    };
    let hits_inner = detect_self_intersections(&surface, &inner.trace);
    let hits_outer = detect_self_intersections(&surface, &outer.trace);
    let inner_report = check_k_geodesic_from(&surface, &mesh, &inner, k, &opts, &hits_inner)?;
    let outer_report = check_k_geodesic_from(&surface, &mesh, &outer, k, &opts, &hits_outer)?;
    Ok(TorusControlReport {
        major,
        minor,
        k,
        inner: inner_report,
        outer: outer_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut cfg = ScanConfig::defaults_for_k(2).unwrap();
        assert!(cfg.validate().unwrap().is_empty());
        cfg.n = 20.0;
        let warnings = cfg.validate().unwrap();
        assert_eq!(warnings.len(), 1, "small n should warn: {warnings:?}");
        cfg.k = 1;
        assert!(cfg.validate().is_err());
        cfg.k = 2;
        cfg.zeta = cfg.belt;
        assert!(cfg.validate().is_err());
        cfg.zeta = 0.3; // not << 1/2 but below it
        assert!(cfg.validate().is_ok());
        cfg.zeta = 0.6;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_scale_with_k() {
        let c2 = ScanConfig::defaults_for_k(2).unwrap();
        let c3 = ScanConfig::defaults_for_k(3).unwrap();
        assert!(c3.n > c2.n);
        assert!(c2.zeta < 0.5 / 2.0);
        assert!(c3.zeta < 0.4 / 3.0 + 1e-12);
    }

    #[test]
    fn small_scan_verdict_true_with_witnesses() {
        // A coarse but complete scan on a small surface: every closed
        // geodesic must fail with an explicit witness.
        let cfg = ScanConfig {
            k: 2,
            n: 10.0,
            belt: 0.05,
            cap: 0.05,
            fillet: FilletKind::Quintic,
            zeta: 0.12,
            alpha_grid: 1000,
            pq_list: Vec::new(),
            q_max: 6,
            length_cutoff: 120.0,
            mesh: MeshResolution::new(64, 64),
            n_offsets: 64,
            margin_frac: 0.01,
            closure_tol: 1e-6,
            tolerances: FlowTolerances::default(),
        };
        let report = scan(&cfg).unwrap();
        assert!(report.unresolved.is_empty(), "{:?}", report.unresolved);
        assert!(report.theorem_verdict, "scan failed to certify");
        assert!(report.geodesics.len() >= 3);
        for g in &report.geodesics {
            assert_eq!(g.minimality.verdict, Verdict::Not1k, "alpha {}", g.launch_alpha);
            let w = &g.minimality.witnesses[0];
            assert!(
                w.shortcut_length < w.segment_length - g.minimality.margin_tol,
                "weak witness at alpha {}",
                g.launch_alpha
            );
        }
        assert!(report.checks.great_parallel_crossing.all_passed());
        assert!(report.checks.first_return_monotone.all_passed());
        assert!(!report.warnings.is_empty(), "n=10 is far below recommended");
    }

    #[test]
    fn sphere_control_is_negative() {
        let report = sphere_control(1.0, 2, MeshResolution::new(128, 128), 64).unwrap();
        assert!(!report.theorem_verdict, "the sphere equator must pass 1/2");
        let equator = report
            .geodesics
            .iter()
            .find(|g| g.launch_alpha == 0.0)
            .unwrap();
        assert_eq!(equator.minimality.verdict, Verdict::Is1kWithinTol);
    }

    #[test]
    fn torus_control_splits_verdicts() {
        let report = torus_control(3.0, 0.5, 2, MeshResolution::new(96, 192), 64).unwrap();
        assert_eq!(report.inner.verdict, Verdict::Is1kWithinTol);
        assert_eq!(report.outer.verdict, Verdict::Not1k);
        assert_eq!(
            report.outer.witnesses[0].kind,
            crate::minimality::ShortcutKind::MeshPath
        );
    }
}

//! Planar development of the flat cone region.
//!
//! The lateral cone is flat, so it unrolls isometrically onto a planar
//! annular sector: a parallel at surface radius r maps to a circle of
//! developed radius r / sin(psi), where psi is the half-angle of the cone,
//! and one full turn on the surface subtends the planar angle
//! 2*pi*sin(psi). Geodesic segments inside the cone are straight chords of
//! the development, so first-return rotations reduce to closed-form chord
//! geometry.

use alloc::string::String;

use crate::profile::Region;
use crate::surface::SurfaceOfRevolution;

#[derive(Clone, Debug, PartialEq)]
pub enum DevelopError {
    /// The surface has no flat cone region to unroll.
    NoConeRegion,
    /// The queried chord leaves the annular development domain (it reaches
    /// the cap boundary instead of turning back inside the cone).
    OutOfDomain { reason: String },
    /// No admissible cone height satisfies the requested rotation.
    Infeasible { reason: String },
}

impl core::fmt::Display for DevelopError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DevelopError::NoConeRegion => write!(f, "surface has no flat cone region"),
            DevelopError::OutOfDomain { reason } => {
                write!(f, "out of development domain: {reason}")
            }
            DevelopError::Infeasible { reason } => write!(f, "infeasible request: {reason}"),
        }
    }
}

/// Isometric development of the cone region into a planar sector.
#[derive(Clone, Copy, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DevelopedCone {
    /// Developed radius of the outer (belt/cone) boundary parallel.
    pub apex_radius_outer: f64,
    /// Developed radius of the inner (cone/cap) boundary parallel.
    pub apex_radius_inner: f64,
    /// Planar angle corresponding to one full 2*pi rotation on the surface.
    pub sector_angle_per_turn: f64,
    /// Scale factor that gives the outer boundary parallel unit length.
    pub normalization: f64,
    /// sin of the cone half-angle.
    pub sin_half_angle: f64,
    /// Surface radii of the two boundary parallels.
    pub outer_radius: f64,
    pub inner_radius: f64,
    /// Profile parameters of the two boundaries and the virtual apex.
    pub t_outer: f64,
    pub t_inner: f64,
    pub t_apex: f64,
}

impl DevelopedCone {
    /// Map a surface point of the cone region to the developed plane (in
    /// the universal cover: theta is not reduced modulo 2*pi).
    pub fn to_plane(&self, t: f64, theta: f64) -> [f64; 2] {
        let rho = self.t_apex - t;
        let chi = theta * self.sin_half_angle;
        [rho * libm::cos(chi), rho * libm::sin(chi)]
    }

    /// Inverse of [`to_plane`] on the principal sheet.
    pub fn from_plane(&self, p: [f64; 2]) -> (f64, f64) {
        let rho = libm::hypot(p[0], p[1]);
        let chi = libm::atan2(p[1], p[0]);
        (self.t_apex - rho, chi / self.sin_half_angle)
    }

    /// First-return rotation of a chord entering the outer boundary at
    /// angle `alpha_entry` with the parallel, in surface radians.
    ///
    /// The chord's pericenter sits at developed radius
    /// rho_outer * cos(alpha_entry); the planar angle between entry and the
    /// symmetric exit is exactly 2*alpha_entry, which divides by
    /// sin(half-angle) on the way back to the surface.
    pub fn first_return_rotation(&self, alpha_entry: f64) -> Result<f64, DevelopError> {
        if !(alpha_entry > 0.0 && alpha_entry < core::f64::consts::FRAC_PI_2) {
            return Err(DevelopError::OutOfDomain {
                reason: alloc::format!("entry angle {alpha_entry} outside (0, pi/2)"),
            });
        }
        let pericenter = self.apex_radius_outer * libm::cos(alpha_entry);
        if pericenter <= self.apex_radius_inner {
            return Err(DevelopError::OutOfDomain {
                reason: alloc::format!(
                    "chord reaches the cap boundary: pericenter {pericenter} <= inner {}",
                    self.apex_radius_inner
                ),
            });
        }
        Ok(2.0 * alpha_entry / self.sin_half_angle)
    }

    /// Surface rotation of a chord whose turning depth below the outer
    /// boundary is `depth` (measured along the surface meridian, which the
    /// development preserves).
    pub fn rotation_at_depth(&self, depth: f64) -> Result<f64, DevelopError> {
        if !(depth > 0.0) || depth >= self.apex_radius_outer - self.apex_radius_inner {
            return Err(DevelopError::OutOfDomain {
                reason: alloc::format!("depth {depth} outside the cone annulus"),
            });
        }
        let cos_entry = 1.0 - depth / self.apex_radius_outer;
        self.first_return_rotation(libm::acos(cos_entry.clamp(-1.0, 1.0)))
    }

    /// Depth below the outer boundary at which a chord accumulates the
    /// given first-return rotation.
    pub fn depth_for_rotation(&self, rotation: f64) -> Result<f64, DevelopError> {
        let alpha = 0.5 * rotation * self.sin_half_angle;
        if !(alpha > 0.0 && alpha < core::f64::consts::FRAC_PI_2) {
            return Err(DevelopError::OutOfDomain {
                reason: alloc::format!("rotation {rotation} not attainable by a turning chord"),
            });
        }
        Ok(self.apex_radius_outer * (1.0 - libm::cos(alpha)))
    }
}

/// Unroll the flat cone region of a smoothed-cone surface.
pub fn develop(surface: &SurfaceOfRevolution) -> Result<DevelopedCone, DevelopError> {
    let (t_outer, t_inner) = surface
        .profile()
        .region_span(Region::Cone)
        .ok_or(DevelopError::NoConeRegion)?;
    let p_outer = surface.eval(t_outer);
    let p_inner = surface.eval(t_inner);
    // The cone piece is a straight profile line; |r'| is sin(half-angle).
    let sin_half = p_outer.dr.abs();
    if sin_half < 1e-12 {
        return Err(DevelopError::NoConeRegion);
    }
    let t_apex = t_outer + p_outer.r / sin_half;
    let apex_radius_outer = p_outer.r / sin_half;
    let apex_radius_inner = p_inner.r / sin_half;
    let sector_angle_per_turn = core::f64::consts::TAU * sin_half;
    let normalization = 1.0 / (core::f64::consts::TAU * p_outer.r);
    Ok(DevelopedCone {
        apex_radius_outer,
        apex_radius_inner,
        sector_angle_per_turn,
        normalization,
        sin_half_angle: sin_half,
        outer_radius: p_outer.r,
        inner_radius: p_inner.r,
        t_outer,
        t_inner,
        t_apex,
    })
}

/// Reference chord depth L(n) = n (1 - sqrt(1 - sin^2(1/(2n)))): the
/// sagitta of a chord subtending arc length 1 on a circle of radius n.
/// Decreases like 1/(8n); used as the classical smallness gauge for how
/// shallow a full-sector chord sits on a tall cone.
pub fn chord_depth(n: f64) -> f64 {
    let s = libm::sin(1.0 / (2.0 * n));
    n * (1.0 - libm::sqrt(1.0 - s * s))
}

/// Smallest integer cone height n >= 2 such that, on the idealized cone
/// (unit-radius rim, half-angle atan(1/n)), every chord turning deeper than
/// `depth` below the rim has first-return rotation above `target_rotation`
/// radians.
pub fn min_height_for_rotation(target_rotation: f64, depth: f64) -> Result<u64, DevelopError> {
    if !(target_rotation > 0.0) || !(depth > 0.0) {
        return Err(DevelopError::Infeasible {
            reason: alloc::format!(
                "rotation {target_rotation} and depth {depth} must be positive"
            ),
        });
    }
    const N_MAX: u64 = 100_000_000;
    let rotation_at = |n: f64| -> Option<f64> {
        let rho = libm::sqrt(n * n + 1.0); // developed rim radius
        if depth >= rho {
            return None; // chord cannot be that deep on this cone
        }
        let alpha = libm::acos((1.0 - depth / rho).clamp(-1.0, 1.0));
        Some(2.0 * alpha * rho) // 2 alpha / sin(half-angle)
    };
    if let Some(rot) = rotation_at(2.0) {
        if rot > target_rotation {
            return Ok(2);
        }
    }
    let mut hi = 2u64;
    loop {
        if let Some(rot) = rotation_at(hi as f64) {
            if rot > target_rotation {
                break;
            }
        }
        if hi >= N_MAX {
            return Err(DevelopError::Infeasible {
                reason: alloc::format!(
                    "no cone height up to {N_MAX} reaches rotation {target_rotation} at depth {depth}"
                ),
            });
        }
        hi = (hi * 2).min(N_MAX);
    }
    let mut lo = 2u64;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match rotation_at(mid as f64) {
            Some(rot) if rot > target_rotation => hi = mid,
            _ => lo = mid,
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate_until, launch_from_great_parallel, FlowTolerances, StopWhen};
    use crate::profile::{build_smoothed_cone, ConeParams, FilletKind};
    use core::f64::consts::{PI, TAU};

    fn m2(n: f64) -> SurfaceOfRevolution {
        SurfaceOfRevolution::new(
            build_smoothed_cone(&ConeParams::new(n, 0.05, 0.05, FilletKind::Quintic)).unwrap(),
        )
    }

    #[test]
    fn sector_angle_matches_cone_height() {
        let dev = develop(&m2(10.0)).unwrap();
        // The corner raise perturbs the half-angle by O(eps/n); compare
        // against the ideal 2*pi/sqrt(101) with that slack.
        let ideal = TAU / libm::sqrt(101.0);
        assert!(
            (dev.sector_angle_per_turn - ideal).abs() < 5e-3,
            "sector {} vs ideal {}",
            dev.sector_angle_per_turn,
            ideal
        );
        // Normalized outer boundary has unit developed length.
        let arc = dev.apex_radius_outer * dev.sector_angle_per_turn;
        assert!((arc * dev.normalization - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_on_random_points() {
        let surface = m2(10.0);
        let dev = develop(&surface).unwrap();
        // Deterministic pseudo-random points in the cone region.
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut rand01 = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let t = dev.t_outer + (dev.t_inner - dev.t_outer) * rand01();
            let theta = (rand01() - 0.5) * 2.0 * PI / dev.sin_half_angle * 0.49;
            let p = dev.to_plane(t, theta);
            let (t2, th2) = dev.from_plane(p);
            assert!((t - t2).abs() < 1e-10, "t {t} -> {t2}");
            assert!((theta - th2).abs() < 1e-10, "theta {theta} -> {th2}");
        }
    }

    #[test]
    fn development_agrees_with_integrated_flow() {
        // The rotation accumulated between entering and leaving the cone
        // must match the closed-form chord rotation.
        let surface = m2(10.0);
        let dev = develop(&surface).unwrap();
        let (a1, a2) = surface.region_angles().unwrap();
        let mut checked = 0;
        for i in 1..=8 {
            let alpha = a1 + (a2 - a1) * (i as f64) / 9.0;
            let c = surface.max_radius() * libm::cos(alpha);
            let alpha_entry = libm::acos((c / dev.outer_radius).clamp(-1.0, 1.0));
            let expected = match dev.first_return_rotation(alpha_entry) {
                Ok(t) => t,
                Err(_) => continue,
            };
            let st = launch_from_great_parallel(&surface, alpha);
            let trace = integrate_until(
                &surface,
                st,
                4000.0,
                &FlowTolerances::default(),
                StopWhen::GreatParallelCrossings(1),
            )
            .unwrap();
            // Rotation between the two crossings of the outer boundary.
            let t_outer = dev.t_outer;
            let mut crossings = alloc::vec::Vec::new();
            for w in trace.states.windows(2) {
                if (w[0].t - t_outer) * (w[1].t - t_outer) < 0.0 {
                    let s_root = crate::numeric::refine_root(
                        |s| trace.state_at(&surface, s).t - t_outer,
                        w[0].s,
                        w[1].s,
                        1e-11,
                    );
                    crossings.push(s_root);
                }
            }
            assert!(crossings.len() >= 2, "alpha {alpha} crossings {crossings:?}");
            let th_in = trace.state_at(&surface, crossings[0]).theta;
            let th_out = trace.state_at(&surface, crossings[1]).theta;
            let measured = (th_out - th_in).abs();
            assert!(
                (measured - expected).abs() < 1e-6,
                "alpha {alpha}: measured {measured} vs chord {expected}"
            );
            checked += 1;
        }
        assert!(checked >= 5, "only {checked} angles stayed in-domain");
    }

    #[test]
    fn first_return_rotation_limits_and_monotonicity() {
        let dev = develop(&m2(10.0)).unwrap();
        // Grazing chords rotate arbitrarily little.
        assert!(dev.first_return_rotation(1e-6).unwrap() < 1e-3);
        // Strictly increasing over an in-domain grid.
        let alpha_max = libm::acos(dev.apex_radius_inner / dev.apex_radius_outer) - 1e-9;
        let mut prev = 0.0;
        for i in 1..=200 {
            let a = alpha_max * i as f64 / 200.0;
            let t = dev.first_return_rotation(a).unwrap();
            assert!(t > prev + 1e-9, "not increasing at grid point {i}");
            prev = t;
        }
        // Beyond the cap boundary: out of domain.
        assert!(dev.first_return_rotation(alpha_max + 1e-3).is_err());
    }

    #[test]
    fn full_turn_chord_subtends_unit_arc() {
        // The chord with first-return rotation 2*pi connects the endpoints
        // of one fundamental-domain arc of the outer boundary: its planar
        // angle is the whole sector angle.
        let dev = develop(&m2(10.0)).unwrap();
        let alpha = 0.5 * TAU * dev.sin_half_angle;
        let rot = dev.first_return_rotation(alpha).unwrap();
        assert!((rot - TAU).abs() < 1e-12);
        let depth = dev.depth_for_rotation(TAU).unwrap();
        let rot_back = dev.rotation_at_depth(depth).unwrap();
        assert!((rot_back - TAU).abs() < 1e-9);
    }

    #[test]
    fn chord_depth_matches_sagitta_oracle() {
        for n in [5.0f64, 10.0, 50.0, 100.0] {
            let oracle = n * (1.0 - libm::cos(1.0 / (2.0 * n)));
            assert!(
                (chord_depth(n) - oracle).abs() < 1e-12,
                "n={n}: {} vs {}",
                chord_depth(n),
                oracle
            );
        }
        // Frozen value for n = 10 (sagitta of a unit-arc chord on a
        // radius-10 circle).
        assert!((chord_depth(10.0) - 0.012497396050337535).abs() < 1e-12);
        // Asymptotics: L * 8n -> 1.
        assert!((chord_depth(100.0) * 800.0 - 1.0).abs() < 0.01);
        // Monotone decreasing.
        let mut prev = f64::MAX;
        for n in [5.0f64, 10.0, 50.0, 100.0] {
            assert!(chord_depth(n) < prev);
            prev = chord_depth(n);
        }
    }

    #[test]
    fn min_height_forward_checked() {
        // The returned height must actually deliver the rotation at the
        // requested depth, and the next smaller height must not.
        for (target, depth) in [(TAU, 0.05), (8.0 * PI, 0.01), (8.0 * PI, 0.05)] {
            let n = min_height_for_rotation(target, depth).unwrap();
            let nf = n as f64;
            let rho = libm::sqrt(nf * nf + 1.0);
            let rot = 2.0 * libm::acos(1.0 - depth / rho) * rho;
            assert!(rot > target, "n={n} rot={rot} target={target}");
            if n > 2 {
                let m = (n - 1) as f64;
                let rho = libm::sqrt(m * m + 1.0);
                let rot = 2.0 * libm::acos(1.0 - depth / rho) * rho;
                assert!(rot <= target, "n-1={m} already reaches {rot}");
            }
        }
        // Tiny target: the minimum allowed height suffices.
        assert_eq!(min_height_for_rotation(1e-9, 0.01).unwrap(), 2);
        assert!(min_height_for_rotation(-1.0, 0.01).is_err());
    }

    #[test]
    fn straight_chords_develop_onto_integrated_segments() {
        // Map a planar chord into the chart and compare against the ODE
        // integrator state by state (cross-module oracle).
        let surface = m2(10.0);
        let dev = develop(&surface).unwrap();
        let alpha_entry = 0.35f64;
        let t0 = dev.t_outer;
        let r0 = dev.outer_radius;
        let st = crate::flow::GeodesicState {
            t: t0,
            theta: 0.0,
            u: libm::sin(alpha_entry),
            v: libm::cos(alpha_entry) / r0,
            s: 0.0,
        };
        let trace = integrate_until(
            &surface,
            st,
            3.0,
            &FlowTolerances::default(),
            StopWhen::MaxLength,
        )
        .unwrap();
        // The same launch as a planar ray. At theta = 0 the developed
        // radial direction is (-1, 0) (increasing t decreases rho) and the
        // tangential direction is (0, +1).
        let p0 = dev.to_plane(t0, 0.0);
        let dir = [-libm::sin(alpha_entry), libm::cos(alpha_entry)];
        for i in 1..=10 {
            let s = 0.25 * i as f64;
            if s > trace.length {
                break;
            }
            let q = trace.state_at(&surface, s);
            if surface.profile().region_at(q.t) != Region::Cone {
                continue;
            }
            let plane = [p0[0] + dir[0] * s, p0[1] + dir[1] * s];
            let got = dev.to_plane(q.t, q.theta);
            let gap = libm::hypot(plane[0] - got[0], plane[1] - got[1]);
            assert!(gap < 1e-6, "s={s}: chord {plane:?} vs trace {got:?}");
        }
    }
}

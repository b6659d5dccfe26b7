//! Generating curves for surfaces of revolution.
//!
//! A profile is a planar curve (x(t), r(t)) parameterized by arc length,
//! with x the axial coordinate and r >= 0 the distance to the axis. The
//! smoothed-cone family replaces the two corners of the right-triangle
//! skeleton (disc + slant) with short fillet arcs; spheres and tori are
//! provided as analytic control surfaces.
//!
//! Pieces are either straight lines or "tangent arcs": curves given by a
//! polynomial tangent angle phi(t) in arc length, so that
//! (x', r') = (cos phi, sin phi) holds exactly. A degree-1 phi is a circular
//! arc; a quintic smoothstep phi matches position, tangent and curvature at
//! both junctions. Positions along tangent arcs are precomputed on a fine
//! node table by Gauss-Legendre quadrature and evaluated with quintic
//! Hermite interpolation, keeping r and its derivatives consistent to
//! ~1e-13.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::numeric::{gl10, hermite5, refine_root, Poly5};

/// Radial tolerance used when normalizing the great-parallel radius.
const APEX_RADIUS_TOL: f64 = 1e-13;

/// Region labels along a profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Region {
    Disc,
    Belt,
    Cone,
    Cap,
    /// Whole-profile label for analytic control surfaces (sphere, torus)
    /// and imported profiles.
    Body,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Disc => "disc",
            Region::Belt => "belt",
            Region::Cone => "cone",
            Region::Cap => "cap",
            Region::Body => "body",
        }
    }
}

/// Corner-smoothing arc family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FilletKind {
    /// Constant-curvature arc; tangent-continuous but with curvature jumps
    /// at the junctions. Retained for cross-checking.
    CircularArc,
    /// Quintic tangent-angle blend; curvature-continuous at the junctions.
    Quintic,
}

/// Parameters of the smoothed-cone family.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConeParams {
    /// Cone height (axial, dimensionless). The skeleton is the triangle
    /// side (0,1)-(n,0) plus the base segment (0,0)-(0,1), revolved.
    pub n: f64,
    /// Profile arc length of the fillet at the great-parallel corner; the
    /// belt extends roughly half this on each side of the great parallel.
    pub belt_half_width: f64,
    /// Profile arc length of the fillet at the tip.
    pub cap_half_width: f64,
    pub fillet: FilletKind,
}

impl ConeParams {
    pub fn new(n: f64, belt_half_width: f64, cap_half_width: f64, fillet: FilletKind) -> Self {
        Self {
            n,
            belt_half_width,
            cap_half_width,
            fillet,
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if !(self.n >= 2.0) {
            return Err(ProfileError::Params(format!(
                "cone height n must be >= 2, got {}",
                self.n
            )));
        }
        if !(self.belt_half_width > 0.0 && self.belt_half_width < 0.1) {
            return Err(ProfileError::Params(format!(
                "belt half-width must lie in (0, 0.1), got {}",
                self.belt_half_width
            )));
        }
        let slant = libm::sqrt(self.n * self.n + 1.0);
        if !(self.cap_half_width > 0.0 && self.cap_half_width < 0.1 * slant) {
            return Err(ProfileError::Params(format!(
                "cap half-width must lie in (0, {:.3}), got {}",
                0.1 * slant,
                self.cap_half_width
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileError {
    Params(String),
    FilletOverlap { needed: f64, available: f64 },
}

impl core::fmt::Display for ProfileError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ProfileError::Params(msg) => write!(f, "invalid profile parameters: {msg}"),
            ProfileError::FilletOverlap { needed, available } => write!(
                f,
                "fillets overlap: need {needed:.6} of slant length, only {available:.6} available"
            ),
        }
    }
}

/// Pointwise profile data at a parameter value.
#[derive(Clone, Copy, Debug)]
pub struct ProfilePoint {
    pub x: f64,
    pub r: f64,
    pub dr: f64,
    pub ddr: f64,
}

/// One row of the dense sample table (CSV export layout).
#[derive(Clone, Copy, Debug)]
pub struct ProfileSample {
    pub t: f64,
    pub x: f64,
    pub r: f64,
    pub dr: f64,
    pub ddr: f64,
    pub region: Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileTopology {
    /// Profile runs pole to pole; the surface is diffeomorphic to a sphere.
    TwoPoles,
    /// Closed profile not meeting the axis; the surface is a torus.
    Periodic,
}

#[derive(Clone, Debug)]
struct TangentArc {
    phi: Poly5,
    dphi: Poly5,
    ddphi: Poly5,
    len: f64,
    /// Cumulative (x, r) positions at len * i / n_sub.
    nodes: Vec<[f64; 2]>,
}

impl TangentArc {
    fn build(phi: Poly5, len: f64, x0: f64, r0: f64) -> Self {
        let dphi = phi.deriv();
        let max_dphi = dphi.max_abs_on(len, 256).max(1e-9);
        // Keep h * |phi'| small enough that quintic Hermite interpolation of
        // sin/cos(phi) stays below ~1e-13.
        let n_sub = ((len * max_dphi / 0.02) as usize).max(16);
        let h = len / n_sub as f64;
        let mut nodes = Vec::with_capacity(n_sub + 1);
        let mut x = x0;
        let mut r = r0;
        nodes.push([x, r]);
        for i in 0..n_sub {
            let a = i as f64 * h;
            let b = a + h;
            x += gl10(&|s| libm::cos(phi.eval(s)), a, b);
            r += gl10(&|s| libm::sin(phi.eval(s)), a, b);
            nodes.push([x, r]);
        }
        let ddphi = dphi.deriv();
        Self {
            phi,
            dphi,
            ddphi,
            len,
            nodes,
        }
    }

    fn eval(&self, s: f64) -> ProfilePoint {
        let n_sub = self.nodes.len() - 1;
        let h = self.len / n_sub as f64;
        let i = ((s / h) as usize).min(n_sub - 1);
        let s0 = i as f64 * h;
        let s1 = s0 + h;
        let local = s - s0;
        let (p0, p1) = (self.nodes[i], self.nodes[i + 1]);

        let (phi0, phi1) = (self.phi.eval(s0), self.phi.eval(s1));
        let (k0, k1) = (self.dphi.eval(s0), self.dphi.eval(s1));
        let (r, _) = hermite5(
            p0[1],
            libm::sin(phi0),
            k0 * libm::cos(phi0),
            p1[1],
            libm::sin(phi1),
            k1 * libm::cos(phi1),
            h,
            local,
        );
        let (x, _) = hermite5(
            p0[0],
            libm::cos(phi0),
            -k0 * libm::sin(phi0),
            p1[0],
            libm::cos(phi1),
            -k1 * libm::sin(phi1),
            h,
            local,
        );
        let phi = self.phi.eval(s);
        let k = self.dphi.eval(s);
        ProfilePoint {
            x,
            r,
            dr: libm::sin(phi),
            ddr: k * libm::cos(phi),
        }
    }

    fn third_radial_deriv(&self, s: f64) -> f64 {
        let phi = self.phi.eval(s);
        let k = self.dphi.eval(s);
        let dk = self.ddphi.eval(s);
        dk * libm::cos(phi) - k * k * libm::sin(phi)
    }

    fn end_point(&self) -> [f64; 2] {
        *self.nodes.last().unwrap()
    }
}

#[derive(Clone, Debug)]
enum PieceKind {
    Line { x0: f64, r0: f64, dx: f64, dr: f64 },
    Arc(TangentArc),
    /// Imported sample table: quintic Hermite in r, cubic-ish in x.
    Sampled { rows: Vec<ProfileSample> },
}

#[derive(Clone, Debug)]
struct Piece {
    t0: f64,
    t1: f64,
    region: Region,
    kind: PieceKind,
}

impl Piece {
    fn eval(&self, t: f64) -> ProfilePoint {
        let s = t - self.t0;
        match &self.kind {
            PieceKind::Line { x0, r0, dx, dr } => ProfilePoint {
                x: x0 + dx * s,
                r: r0 + dr * s,
                dr: *dr,
                ddr: 0.0,
            },
            PieceKind::Arc(arc) => arc.eval(s),
            PieceKind::Sampled { rows } => {
                let n = rows.len() - 1;
                let h = (self.t1 - self.t0) / n as f64;
                let i = ((s / h) as usize).min(n - 1);
                let a = &rows[i];
                let b = &rows[i + 1];
                let local = t - a.t;
                let hh = b.t - a.t;
                let (r, _) = hermite5(a.r, a.dr, a.ddr, b.r, b.dr, b.ddr, hh, local);
                let slope_a = (b.x - a.x) / hh;
                let x = a.x + slope_a * local;
                let u = local / hh;
                let dr = a.dr * (1.0 - u) + b.dr * u;
                let ddr = a.ddr * (1.0 - u) + b.ddr * u;
                let _ = r;
                ProfilePoint {
                    x,
                    r: {
                        let (rv, _) = hermite5(a.r, a.dr, a.ddr, b.r, b.dr, b.ddr, hh, local);
                        rv
                    },
                    dr,
                    ddr,
                }
            }
        }
    }

    fn third_radial_deriv(&self, t: f64) -> f64 {
        match &self.kind {
            PieceKind::Line { .. } => 0.0,
            PieceKind::Arc(arc) => arc.third_radial_deriv(t - self.t0),
            PieceKind::Sampled { .. } => 0.0,
        }
    }
}

/// Arc-length-parameterized generating curve with region annotations.
#[derive(Clone, Debug)]
pub struct ProfileCurve {
    pieces: Vec<Piece>,
    total_length: f64,
    topology: ProfileTopology,
    /// (t, r) of the parallel of maximal radius.
    great_parallel: (f64, f64),
    samples: Vec<ProfileSample>,
    region_marks: Vec<(f64, f64, Region)>,
}

impl ProfileCurve {
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn topology(&self) -> ProfileTopology {
        self.topology
    }

    pub fn great_parallel_t(&self) -> f64 {
        self.great_parallel.0
    }

    pub fn max_radius(&self) -> f64 {
        self.great_parallel.1
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn region_marks(&self) -> &[(f64, f64, Region)] {
        &self.region_marks
    }

    /// Parameter range of a region, if present.
    pub fn region_span(&self, region: Region) -> Option<(f64, f64)> {
        self.region_marks
            .iter()
            .find(|(_, _, r)| *r == region)
            .map(|(a, b, _)| (*a, *b))
    }

    pub fn region_at(&self, t: f64) -> Region {
        let t = self.fold_param(t).0;
        for (a, b, r) in &self.region_marks {
            if t >= *a - 1e-12 && t <= *b + 1e-12 {
                if t <= *b {
                    return *r;
                }
            }
        }
        self.region_marks.last().map(|m| m.2).unwrap_or(Region::Body)
    }

    /// Fold a parameter into the profile domain. Two-pole profiles extend by
    /// odd reflection of r about each pole (the smooth continuation through
    /// the axis); periodic profiles wrap.
    fn fold_param(&self, t: f64) -> (f64, f64) {
        let l = self.total_length;
        match self.topology {
            ProfileTopology::Periodic => {
                let mut s = t % l;
                if s < 0.0 {
                    s += l;
                }
                (s, 1.0)
            }
            ProfileTopology::TwoPoles => {
                if t < 0.0 {
                    (-t, -1.0)
                } else if t > l {
                    ((2.0 * l - t).max(0.0), -1.0)
                } else {
                    (t, 1.0)
                }
            }
        }
    }

    fn piece_at(&self, t: f64) -> &Piece {
        // Few pieces; a linear scan beats binary search here.
        for p in &self.pieces {
            if t <= p.t1 {
                return p;
            }
        }
        self.pieces.last().unwrap()
    }

    /// Radius, its first two derivatives, and the axial coordinate at `t`.
    pub fn eval(&self, t: f64) -> ProfilePoint {
        let (tf, sign) = self.fold_param(t);
        let p = self.piece_at(tf).eval(tf);
        if sign < 0.0 {
            ProfilePoint {
                x: p.x,
                r: -p.r,
                dr: p.dr,
                ddr: -p.ddr,
            }
        } else {
            p
        }
    }

    pub fn radius(&self, t: f64) -> f64 {
        self.eval(t).r
    }

    /// d^3 r / dt^3, used for curvature limits at the poles.
    pub fn third_radial_deriv(&self, t: f64) -> f64 {
        let (tf, _) = self.fold_param(t);
        self.piece_at(tf).third_radial_deriv(tf)
    }

    /// Embedded position with the axis along x.
    pub fn point3d(&self, t: f64, theta: f64) -> [f64; 3] {
        let p = self.eval(t);
        [p.x, p.r * libm::cos(theta), p.r * libm::sin(theta)]
    }

    fn build_samples(pieces: &[Piece]) -> Vec<ProfileSample> {
        let mut out = Vec::new();
        for (pi, p) in pieces.iter().enumerate() {
            let len = p.t1 - p.t0;
            let count = match &p.kind {
                PieceKind::Line { .. } => ((len / 0.05) as usize).clamp(16, 4096),
                PieceKind::Arc(arc) => (arc.nodes.len() - 1).clamp(16, 8192),
                PieceKind::Sampled { rows } => rows.len() - 1,
            };
            let start = if pi == 0 { 0 } else { 1 };
            for i in start..=count {
                let t = p.t0 + len * i as f64 / count as f64;
                let e = p.eval(t);
                out.push(ProfileSample {
                    t,
                    x: e.x,
                    r: e.r,
                    dr: e.dr,
                    ddr: e.ddr,
                    region: p.region,
                });
            }
        }
        out
    }
}

/// Tangent-angle profile of a fillet turning from `phi0` to `phi1` over
/// arc length `len`.
fn fillet_phi(kind: FilletKind, phi0: f64, phi1: f64, len: f64) -> Poly5 {
    match kind {
        FilletKind::CircularArc => Poly5::linear(phi0, (phi1 - phi0) / len),
        FilletKind::Quintic => Poly5::smoothstep(phi0, phi1, len),
    }
}

/// Displacement of a tangent-angle arc over [0, len].
fn arc_displacement(phi: &Poly5, len: f64) -> [f64; 2] {
    let max_dphi = phi.deriv().max_abs_on(len, 256).max(1e-9);
    let panels = ((len * max_dphi / 0.5) as usize).max(8);
    let h = len / panels as f64;
    let mut dx = 0.0;
    let mut dr = 0.0;
    for i in 0..panels {
        let a = i as f64 * h;
        let b = a + h;
        dx += gl10(&|s| libm::cos(phi.eval(s)), a, b);
        dr += gl10(&|s| libm::sin(phi.eval(s)), a, b);
    }
    [dx, dr]
}

/// Builds the smoothed cone: a unit-radius, height-n cone with the
/// great-parallel corner and the tip replaced by fillet arcs.
///
/// The corner is raised by a small amount (tip held fixed) so that the
/// maximal radius over the belt fillet is exactly 1.
pub fn build_smoothed_cone(params: &ConeParams) -> Result<ProfileCurve, ProfileError> {
    params.validate()?;
    let n = params.n;
    let belt_len = params.belt_half_width;
    let cap_len = params.cap_half_width;

    // Apex radius as a function of the corner raise; monotone increasing.
    let corner_geometry = |delta: f64| -> (f64, f64, f64, f64, Poly5, [f64; 2]) {
        let hgt = 1.0 + delta;
        let slant = libm::sqrt(n * n + hgt * hgt);
        let (dx, drr) = (n / slant, -hgt / slant);
        let phi_cone = libm::atan2(drr, dx);
        let phi = fillet_phi(params.fillet, core::f64::consts::FRAC_PI_2, phi_cone, belt_len);
        let disp = arc_displacement(&phi, belt_len);
        // Solve m0 * (0,1) + m1 * (dx,drr) = disp for the cut lengths.
        let m1 = disp[0] / dx;
        let m0 = disp[1] - drr * m1;
        (hgt, m0, m1, phi_cone, phi, [dx, drr])
    };

    let apex_radius = |delta: f64| -> f64 {
        let (hgt, m0, _, _, phi, _) = corner_geometry(delta);
        let t_apex = refine_root(|s| phi.eval(s), 0.0, belt_len, 1e-14);
        let r_start = hgt - m0;
        let max_dphi = phi.deriv().max_abs_on(belt_len, 256).max(1e-9);
        let panels = ((t_apex * max_dphi / 0.5) as usize).max(8);
        let h = t_apex / panels as f64;
        let mut r = r_start;
        for i in 0..panels {
            r += gl10(&|s| libm::sin(phi.eval(s)), i as f64 * h, (i + 1) as f64 * h);
        }
        r
    };

    let deficiency = 1.0 - apex_radius(0.0);
    let mut hi = (4.0 * deficiency).max(1e-6);
    while apex_radius(hi) < 1.0 {
        hi *= 2.0;
        if hi > 0.5 {
            return Err(ProfileError::Params(
                "belt fillet cannot be normalized to unit apex radius".into(),
            ));
        }
    }
    let delta = refine_root(|d| apex_radius(d) - 1.0, 0.0, hi, APEX_RADIUS_TOL);

    let (hgt, m0, m1, phi_cone, belt_phi, dir) = corner_geometry(delta);
    let slant = libm::sqrt(n * n + hgt * hgt);

    // Cap fillet: turn from the slant direction to -pi/2 so the profile
    // meets the axis radially. The cut length on the slant is fixed by
    // requiring the end radius to be exactly zero.
    let cap_phi = fillet_phi(params.fillet, phi_cone, -core::f64::consts::FRAC_PI_2, cap_len);
    let cap_disp = arc_displacement(&cap_phi, cap_len);
    let m_cap = cap_disp[1] / dir[1];

    let disc_len = hgt - m0;
    if disc_len <= 0.0 {
        return Err(ProfileError::FilletOverlap {
            needed: m0,
            available: hgt,
        });
    }
    let cone_len = slant - m1 - m_cap;
    if cone_len <= 0.0 {
        return Err(ProfileError::FilletOverlap {
            needed: m1 + m_cap,
            available: slant,
        });
    }

    let mut pieces = Vec::with_capacity(4);
    // Base disc: from the axis straight out to the belt fillet.
    pieces.push(Piece {
        t0: 0.0,
        t1: disc_len,
        region: Region::Disc,
        kind: PieceKind::Line {
            x0: 0.0,
            r0: 0.0,
            dx: 0.0,
            dr: 1.0,
        },
    });
    let belt = TangentArc::build(belt_phi, belt_len, 0.0, disc_len);
    let belt_end = belt.end_point();
    let t_belt0 = disc_len;
    let t_belt1 = t_belt0 + belt_len;
    let t_apex_local = refine_root(|s| belt.phi.eval(s), 0.0, belt_len, 1e-14);
    pieces.push(Piece {
        t0: t_belt0,
        t1: t_belt1,
        region: Region::Belt,
        kind: PieceKind::Arc(belt),
    });
    pieces.push(Piece {
        t0: t_belt1,
        t1: t_belt1 + cone_len,
        region: Region::Cone,
        kind: PieceKind::Line {
            x0: belt_end[0],
            r0: belt_end[1],
            dx: dir[0],
            dr: dir[1],
        },
    });
    let cap_x0 = belt_end[0] + dir[0] * cone_len;
    let cap_r0 = belt_end[1] + dir[1] * cone_len;
    let cap = TangentArc::build(cap_phi, cap_len, cap_x0, cap_r0);
    let t_cap0 = t_belt1 + cone_len;
    let total = t_cap0 + cap_len;
    pieces.push(Piece {
        t0: t_cap0,
        t1: total,
        region: Region::Cap,
        kind: PieceKind::Arc(cap),
    });

    let region_marks = pieces.iter().map(|p| (p.t0, p.t1, p.region)).collect();
    let samples = ProfileCurve::build_samples(&pieces);
    let profile = ProfileCurve {
        pieces,
        total_length: total,
        topology: ProfileTopology::TwoPoles,
        great_parallel: (t_belt0 + t_apex_local, 1.0),
        samples,
        region_marks,
    };
    debug_assert!((profile.radius(profile.great_parallel_t()) - 1.0).abs() < 1e-11);
    Ok(profile)
}

/// Round sphere of the given radius: r(t) = radius * sin(t / radius).
pub fn build_sphere(radius: f64) -> ProfileCurve {
    assert!(radius > 0.0, "sphere radius must be positive");
    let len = core::f64::consts::PI * radius;
    let phi = Poly5::linear(core::f64::consts::FRAC_PI_2, -1.0 / radius);
    let arc = TangentArc::build(phi, len, 0.0, 0.0);
    let pieces = alloc::vec![Piece {
        t0: 0.0,
        t1: len,
        region: Region::Body,
        kind: PieceKind::Arc(arc),
    }];
    let samples = ProfileCurve::build_samples(&pieces);
    ProfileCurve {
        pieces,
        total_length: len,
        topology: ProfileTopology::TwoPoles,
        great_parallel: (len * 0.5, radius),
        samples,
        region_marks: alloc::vec![(0.0, len, Region::Body)],
    }
}

/// Torus of revolution: tube of radius `minor` around a circle of radius
/// `major`. The profile is the closed tube circle; t = 0 sits on the outer
/// equator.
pub fn build_torus(major: f64, minor: f64) -> Result<ProfileCurve, ProfileError> {
    if !(major > minor && minor > 0.0) {
        return Err(ProfileError::Params(format!(
            "torus requires major > minor > 0, got major={major}, minor={minor}"
        )));
    }
    let len = core::f64::consts::TAU * minor;
    let phi = Poly5::linear(0.0, -1.0 / minor);
    let arc = TangentArc::build(phi, len, 0.0, major + minor);
    let pieces = alloc::vec![Piece {
        t0: 0.0,
        t1: len,
        region: Region::Body,
        kind: PieceKind::Arc(arc),
    }];
    let samples = ProfileCurve::build_samples(&pieces);
    Ok(ProfileCurve {
        pieces,
        total_length: len,
        topology: ProfileTopology::Periodic,
        great_parallel: (0.0, major + minor),
        samples,
        region_marks: alloc::vec![(0.0, len, Region::Body)],
    })
}

/// Rebuild a profile from an exported sample table (CSV import path).
pub fn from_samples(rows: Vec<ProfileSample>, periodic: bool) -> Result<ProfileCurve, ProfileError> {
    if rows.len() < 4 {
        return Err(ProfileError::Params("need at least 4 sample rows".into()));
    }
    let total = rows.last().unwrap().t;
    if !(total > 0.0) || rows[0].t != 0.0 {
        return Err(ProfileError::Params(
            "sample table must start at t=0 and end at t>0".into(),
        ));
    }
    // Region marks from contiguous runs of the label column.
    let mut region_marks: Vec<(f64, f64, Region)> = Vec::new();
    for row in &rows {
        match region_marks.last_mut() {
            Some((_, b, r)) if *r == row.region => *b = row.t,
            _ => region_marks.push((row.t, row.t, row.region)),
        }
    }
    let mut best = (0usize, f64::MIN);
    for (i, row) in rows.iter().enumerate() {
        if row.r > best.1 {
            best = (i, row.r);
        }
    }
    let gp = (rows[best.0].t, best.1);
    let pieces = alloc::vec![Piece {
        t0: 0.0,
        t1: total,
        region: rows[best.0].region,
        kind: PieceKind::Sampled { rows: rows.clone() },
    }];
    Ok(ProfileCurve {
        pieces,
        total_length: total,
        topology: if periodic {
            ProfileTopology::Periodic
        } else {
            ProfileTopology::TwoPoles
        },
        great_parallel: gp,
        samples: rows,
        region_marks,
    })
}

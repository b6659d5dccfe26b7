//! Numerical geodesics on surfaces of revolution.
//!
//! The crate builds smoothed-cone surfaces (a one-parameter family of
//! convex caps over a tall cone with a flat base), integrates unit-speed
//! geodesics with conserved-quantity monitoring, enumerates closed
//! geodesics by shooting on the launch angle at the great parallel, and
//! tests whether a closed geodesic of length l is distance-minimizing on
//! every subsegment of length l/k, producing explicit shortcut witnesses
//! when it is not.
//!
//! The core is `no_std` + `alloc`; IO, file formats and the command line
//! live in the companion `revgeo-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod development;
pub mod flow;
pub mod mesh;
pub mod minimality;
pub mod numeric;
pub mod profile;
pub mod scan;
pub mod search;
pub mod surface;

pub use development::{chord_depth, develop, min_height_for_rotation, DevelopedCone};
pub use flow::{
    clairaut_angle, crosses_great_parallel, detect_self_intersections, integrate,
    integrate_until, launch_from_great_parallel, FlowTolerances, GeodesicState, GeodesicTrace,
    StopWhen,
};
pub use mesh::{build_mesh, MeshResolution, SurfaceMesh};
pub use minimality::{
    check_k_geodesic, distance_upper_bound, intersection_jump_witness, loop_decomposition,
    CheckOptions, MinimalityReport, ShortcutKind, Verdict, Witness,
};
pub use profile::{
    build_smoothed_cone, build_sphere, build_torus, ConeParams, FilletKind, ProfileCurve, Region,
};
pub use scan::{scan, sphere_control, torus_control, ScanConfig, ScanReport};
pub use search::{find_closed, period_rotation, CaseLabel, ClosedGeodesic, SearchOptions};
pub use surface::SurfaceOfRevolution;

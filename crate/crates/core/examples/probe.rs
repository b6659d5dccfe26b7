use revgeo_core::flow::FlowTolerances;
use revgeo_core::mesh::{build_mesh, MeshResolution};
use revgeo_core::profile::{build_smoothed_cone, ConeParams, FilletKind};
use revgeo_core::search::{find_closed, SearchOptions};
use revgeo_core::surface::SurfaceOfRevolution;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let params = ConeParams::new(20.0, 0.02, 0.02, FilletKind::Quintic);
    let surface = SurfaceOfRevolution::new(build_smoothed_cone(&params).unwrap());
    let mesh = build_mesh(&surface, MeshResolution::new(192, 192)).unwrap();
    println!("surface+mesh: {:?}", t0.elapsed());

    let t1 = Instant::now();
    let opts = SearchOptions {
        length_cutoff: 800.0,
        q_max: 12,
        ..SearchOptions::default()
    };
    let census = find_closed(&surface, 2000, &[], &opts).unwrap();
    println!(
        "find_closed: {:?} ({} closed, {} unresolved)",
        t1.elapsed(),
        census.closed.len(),
        census.unresolved.len()
    );
    let total_states: usize = census.closed.iter().map(|c| c.trace.states.len()).sum();
    let total_len: f64 = census.closed.iter().map(|c| c.length).sum();
    println!("total stored states {total_states}, total length {total_len:.0}");

    let t2 = Instant::now();
    let mut hits_total = 0usize;
    for cg in &census.closed {
        hits_total += revgeo_core::flow::detect_self_intersections(&surface, &cg.trace).len();
    }
    println!("intersections: {:?} ({hits_total} crossings)", t2.elapsed());

    let t3 = Instant::now();
    let mut fails = 0usize;
    for cg in &census.closed {
        let hits = revgeo_core::flow::detect_self_intersections(&surface, &cg.trace);
        let r = revgeo_core::minimality::check_k_geodesic_from(
            &surface, &mesh, cg, 2,
            &revgeo_core::minimality::CheckOptions { n_offsets: 256, ..Default::default() },
            &hits,
        ).unwrap();
        if r.verdict == revgeo_core::minimality::Verdict::Not1k { fails += 1; }
    }
    println!("check_k (incl. 2nd detect): {:?} ({fails}/{} fail)", t3.elapsed(), census.closed.len());
}

//! Surface meshes for distance upper bounds.
//!
//! Vertices sit on a (t, theta) grid; edges connect grid neighbors and both
//! cell diagonals, weighted by the exact metric length of the parameter
//! straight segment (8-point Gauss quadrature). Every edge is therefore a
//! genuine path on the surface, so shortest-path distances through the
//! graph are true upper bounds of the Riemannian distance, and refining the
//! grid can only tighten them. Poles are single vertices fanned to the
//! first ring.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::numeric::gl8;
use crate::surface::SurfaceOfRevolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeshResolution {
    pub n_t: usize,
    pub n_theta: usize,
}

impl MeshResolution {
    pub fn new(n_t: usize, n_theta: usize) -> Self {
        Self { n_t, n_theta }
    }

    pub fn square(n: usize) -> Self {
        Self { n_t: n, n_theta: n }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshError {
    DegenerateResolution { n_t: usize, n_theta: usize },
    Disconnected(String),
}

impl core::fmt::Display for MeshError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MeshError::DegenerateResolution { n_t, n_theta } => {
                write!(f, "mesh resolution ({n_t}, {n_theta}) below the (64, 64) minimum")
            }
            MeshError::Disconnected(msg) => write!(f, "mesh graph disconnected: {msg}"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MeshVertex {
    pub t: f64,
    pub theta: f64,
    pub position: [f64; 3],
}

/// Grid mesh over a surface of revolution with metric edge lengths.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    surface: SurfaceOfRevolution,
    resolution: MeshResolution,
    vertices: Vec<MeshVertex>,
    /// CSR adjacency: neighbor list offsets and (vertex, length) pairs.
    adj_offsets: Vec<u32>,
    adj: Vec<(u32, f64)>,
    /// Row parameter values (t per ring), plus pole bookkeeping.
    row_t: Vec<f64>,
    periodic: bool,
    pole_start: Option<u32>,
    pole_end: Option<u32>,
    edge_count: usize,
}

impl SurfaceMesh {
    pub fn resolution(&self) -> MeshResolution {
        self.resolution
    }

    pub fn surface(&self) -> &SurfaceOfRevolution {
        &self.surface
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertices(&self) -> &[MeshVertex] {
        &self.vertices
    }

    /// Iterate undirected edges as index pairs with their metric lengths.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.vertices.len() as u32).flat_map(move |i| {
            let lo = self.adj_offsets[i as usize] as usize;
            let hi = self.adj_offsets[i as usize + 1] as usize;
            self.adj[lo..hi]
                .iter()
                .filter(move |(j, _)| *j > i)
                .map(move |(j, w)| (i, *j, *w))
        })
    }

    /// Metric length of the straight parameter segment between two points.
    pub fn param_segment_length(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        param_length(&self.surface, a, b)
    }

    /// Index of the grid vertex nearest to (t, theta).
    pub fn nearest_vertex(&self, t: f64, theta: f64) -> u32 {
        let th = crate::numeric::fold_angle(theta);
        let n_theta = self.resolution.n_theta;
        let col = ((th / core::f64::consts::TAU * n_theta as f64) + 0.5) as usize % n_theta;
        // Nearest ring by t.
        let mut best_row = 0usize;
        let mut best_gap = f64::MAX;
        for (i, rt) in self.row_t.iter().enumerate() {
            let gap = if self.periodic {
                let l = self.surface.profile().total_length();
                let mut d = (t - rt).abs() % l;
                if d > 0.5 * l {
                    d = l - d;
                }
                d
            } else {
                (t - rt).abs()
            };
            if gap < best_gap {
                best_gap = gap;
                best_row = i;
            }
        }
        let ring_vertex = (best_row * n_theta + col) as u32
            + if self.pole_start.is_some() { 1 } else { 0 };
        // Poles may be closer than any ring.
        let mut best = (ring_vertex, best_gap);
        if let Some(p) = self.pole_start {
            if t < self.row_t[0] && t.abs() < best.1 {
                best = (p, t.abs());
            }
        }
        if let Some(p) = self.pole_end {
            let l = self.surface.profile().total_length();
            if t > *self.row_t.last().unwrap() && (l - t).abs() < best.1 {
                best = (p, (l - t).abs());
            }
        }
        best.0
    }

    pub fn vertex_param(&self, v: u32) -> (f64, f64) {
        let mv = &self.vertices[v as usize];
        (mv.t, mv.theta)
    }

    /// Single-source shortest paths; stops early when `target` is settled.
    pub fn dijkstra(&self, source: u32, target: Option<u32>) -> (Vec<f64>, Vec<u32>) {
        #[derive(PartialEq)]
        struct Entry {
            dist: f64,
            node: u32,
        }
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> core::cmp::Ordering {
                // Min-heap via reversed comparison.
                other
                    .dist
                    .total_cmp(&self.dist)
                    .then_with(|| other.node.cmp(&self.node))
            }
        }

        let n = self.vertices.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![u32::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[source as usize] = 0.0;
        heap.push(Entry {
            dist: 0.0,
            node: source,
        });
        while let Some(Entry { dist: d, node }) = heap.pop() {
            if d > dist[node as usize] {
                continue;
            }
            if target == Some(node) {
                break;
            }
            let lo = self.adj_offsets[node as usize] as usize;
            let hi = self.adj_offsets[node as usize + 1] as usize;
            for &(next, w) in &self.adj[lo..hi] {
                let nd = d + w;
                if nd < dist[next as usize] {
                    dist[next as usize] = nd;
                    parent[next as usize] = node;
                    heap.push(Entry {
                        dist: nd,
                        node: next,
                    });
                }
            }
        }
        (dist, parent)
    }

    /// Length of a genuine surface path between two surface points, plus
    /// the mesh polyline realizing it (including the snap legs).
    pub fn path_upper_bound(
        &self,
        p: (f64, f64),
        q: (f64, f64),
    ) -> Result<(f64, Vec<(f64, f64)>), MeshError> {
        let vp = self.nearest_vertex(p.0, p.1);
        let vq = self.nearest_vertex(q.0, q.1);
        let snap_p = param_length(&self.surface, p, self.vertex_param(vp));
        let snap_q = param_length(&self.surface, self.vertex_param(vq), q);
        if vp == vq {
            // Degenerate: both snap to the same vertex; use the direct
            // parameter segment instead.
            let direct = param_length(&self.surface, p, q);
            return Ok((direct.min(snap_p + snap_q), vec![p, q]));
        }
        let (dist, parent) = self.dijkstra(vp, Some(vq));
        let through = dist[vq as usize];
        if !through.is_finite() {
            return Err(MeshError::Disconnected(alloc::format!(
                "no path between vertices {vp} and {vq}"
            )));
        }
        let mut chain = vec![q, self.vertex_param(vq)];
        let mut cur = vq;
        while cur != vp {
            cur = parent[cur as usize];
            if cur == u32::MAX {
                return Err(MeshError::Disconnected("broken parent chain".into()));
            }
            chain.push(self.vertex_param(cur));
        }
        chain.push(p);
        chain.reverse();
        Ok((snap_p + through + snap_q, chain))
    }

    /// Distance upper bound between two surface points.
    pub fn distance_upper_bound(&self, p: (f64, f64), q: (f64, f64)) -> Result<f64, MeshError> {
        self.path_upper_bound(p, q).map(|(d, _)| d)
    }
}

fn param_length(surface: &SurfaceOfRevolution, a: (f64, f64), b: (f64, f64)) -> f64 {
    // Short way around in theta; short way around in t on periodic profiles.
    let mut dt = b.0 - a.0;
    if surface.is_periodic() {
        let l = surface.profile().total_length();
        if dt > 0.5 * l {
            dt -= l;
        } else if dt < -0.5 * l {
            dt += l;
        }
    }
    let dth = if (b.1 - a.1).abs() <= core::f64::consts::PI {
        b.1 - a.1
    } else {
        crate::numeric::angle_diff(b.1, a.1)
    };
    if dt == 0.0 && dth == 0.0 {
        return 0.0;
    }
    gl8(
        &|sigma: f64| {
            let t = a.0 + sigma * dt;
            let r = surface.radius(t);
            libm::sqrt(dt * dt + r * r * dth * dth)
        },
        0.0,
        1.0,
    )
}

/// Build the grid mesh. Resolution must be at least (64, 64).
pub fn build_mesh(
    surface: &SurfaceOfRevolution,
    resolution: MeshResolution,
) -> Result<SurfaceMesh, MeshError> {
    if resolution.n_t < 64 || resolution.n_theta < 64 {
        return Err(MeshError::DegenerateResolution {
            n_t: resolution.n_t,
            n_theta: resolution.n_theta,
        });
    }
    let periodic = surface.is_periodic();
    let l = surface.profile().total_length();
    let n_t = resolution.n_t;
    let n_th = resolution.n_theta;
    let two_pi = core::f64::consts::TAU;

    let row_t: Vec<f64> = if periodic {
        (0..n_t).map(|i| l * i as f64 / n_t as f64).collect()
    } else {
        (1..=n_t).map(|i| l * i as f64 / (n_t + 1) as f64).collect()
    };

    let mut vertices = Vec::new();
    let pole_start = if periodic {
        None
    } else {
        vertices.push(MeshVertex {
            t: 0.0,
            theta: 0.0,
            position: surface.point3d(0.0, 0.0),
        });
        Some(0u32)
    };
    let ring_base = vertices.len() as u32;
    for &t in &row_t {
        for j in 0..n_th {
            let theta = two_pi * j as f64 / n_th as f64;
            vertices.push(MeshVertex {
                t,
                theta,
                position: surface.point3d(t, theta),
            });
        }
    }
    let pole_end = if periodic {
        None
    } else {
        vertices.push(MeshVertex {
            t: l,
            theta: 0.0,
            position: surface.point3d(l, 0.0),
        });
        Some((vertices.len() - 1) as u32)
    };

    let nv = vertices.len();
    let mut neighbors: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nv];
    let mut edge_count = 0usize;
    let add_edge = |neighbors: &mut Vec<Vec<(u32, f64)>>,
                        edge_count: &mut usize,
                        a: u32,
                        b: u32,
                        w: f64| {
        neighbors[a as usize].push((b, w));
        neighbors[b as usize].push((a, w));
        *edge_count += 1;
    };

    let idx = |row: usize, col: usize| -> u32 { ring_base + (row * n_th + col) as u32 };
    let vp = |v: u32, vertices: &Vec<MeshVertex>| -> (f64, f64) {
        (vertices[v as usize].t, vertices[v as usize].theta)
    };

    // Ring edges (theta direction) and intra-ring wrap.
    for (i, &t) in row_t.iter().enumerate() {
        let r = surface.radius(t);
        let w = r * two_pi / n_th as f64;
        for j in 0..n_th {
            add_edge(
                &mut neighbors,
                &mut edge_count,
                idx(i, j),
                idx(i, (j + 1) % n_th),
                w,
            );
        }
    }

    // Meridian edges and cell diagonals between consecutive rings.
    let row_pairs: Vec<(usize, usize)> = if periodic {
        (0..n_t).map(|i| (i, (i + 1) % n_t)).collect()
    } else {
        (0..n_t - 1).map(|i| (i, i + 1)).collect()
    };
    for &(i0, i1) in &row_pairs {
        let dt = if periodic && i1 == 0 {
            l - row_t[i0]
        } else {
            row_t[i1] - row_t[i0]
        };
        for j in 0..n_th {
            let a = idx(i0, j);
            let b = idx(i1, j);
            add_edge(&mut neighbors, &mut edge_count, a, b, dt.abs());
            // Diagonals of the cell (j, j+1).
            let c = idx(i1, (j + 1) % n_th);
            let d = idx(i0, (j + 1) % n_th);
            let (ta, _) = vp(a, &vertices);
            let tb = if periodic && i1 == 0 { ta + dt } else { row_t[i1] };
            let dth = two_pi / n_th as f64;
            let diag = gl8(
                &|sigma: f64| {
                    let t = ta + sigma * (tb - ta);
                    let r = surface.radius(t);
                    libm::sqrt((tb - ta) * (tb - ta) + r * r * dth * dth)
                },
                0.0,
                1.0,
            );
            add_edge(&mut neighbors, &mut edge_count, a, c, diag);
            add_edge(&mut neighbors, &mut edge_count, d, b, diag);
        }
    }

    // Pole fans.
    if let Some(p) = pole_start {
        let t0 = row_t[0];
        for j in 0..n_th {
            add_edge(&mut neighbors, &mut edge_count, p, idx(0, j), t0);
        }
    }
    if let Some(p) = pole_end {
        let t1 = *row_t.last().unwrap();
        for j in 0..n_th {
            add_edge(&mut neighbors, &mut edge_count, p, idx(n_t - 1, j), l - t1);
        }
    }

    let mut adj_offsets = Vec::with_capacity(nv + 1);
    let mut adj = Vec::with_capacity(2 * edge_count);
    adj_offsets.push(0u32);
    for list in &neighbors {
        adj.extend_from_slice(list);
        adj_offsets.push(adj.len() as u32);
    }

    Ok(SurfaceMesh {
        surface: surface.clone(),
        resolution,
        vertices,
        adj_offsets,
        adj,
        row_t,
        periodic,
        pole_start,
        pole_end,
        edge_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{build_smoothed_cone, build_sphere, build_torus, ConeParams, FilletKind};
    use core::f64::consts::PI;

    fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
        libm::sqrt(
            (a[0] - b[0]) * (a[0] - b[0])
                + (a[1] - b[1]) * (a[1] - b[1])
                + (a[2] - b[2]) * (a[2] - b[2]),
        )
    }

    #[test]
    fn resolution_floor_enforced() {
        let sph = SurfaceOfRevolution::new(build_sphere(1.0));
        assert!(build_mesh(&sph, MeshResolution::new(32, 64)).is_err());
    }

    #[test]
    fn edge_count_matches_grid_formula() {
        let sph = SurfaceOfRevolution::new(build_sphere(1.0));
        let (n_t, n_th) = (64usize, 64usize);
        let mesh = build_mesh(&sph, MeshResolution::new(n_t, n_th)).unwrap();
        // Rings: n_t * n_th; meridian: (n_t - 1) * n_th; diagonals:
        // 2 (n_t - 1) n_th; pole fans: 2 n_th.
        let expected = n_t * n_th + (n_t - 1) * n_th + 2 * (n_t - 1) * n_th + 2 * n_th;
        assert_eq!(mesh.edge_count(), expected);
        assert_eq!(mesh.vertex_count(), n_t * n_th + 2);

        let torus = SurfaceOfRevolution::new(build_torus(3.0, 1.0).unwrap());
        let mesh = build_mesh(&torus, MeshResolution::new(n_t, n_th)).unwrap();
        let expected = n_t * n_th + n_t * n_th + 2 * n_t * n_th;
        assert_eq!(mesh.edge_count(), expected);
        assert_eq!(mesh.vertex_count(), n_t * n_th);
    }

    #[test]
    fn every_edge_dominates_its_chord() {
        for surface in [
            SurfaceOfRevolution::new(build_sphere(1.0)),
            SurfaceOfRevolution::new(build_torus(3.0, 1.0).unwrap()),
            SurfaceOfRevolution::new(
                build_smoothed_cone(&ConeParams::new(10.0, 0.05, 0.05, FilletKind::Quintic))
                    .unwrap(),
            ),
        ] {
            let mesh = build_mesh(&surface, MeshResolution::new(64, 64)).unwrap();
            for (a, b, w) in mesh.edges() {
                let chord = dist3(
                    &mesh.vertices()[a as usize].position,
                    &mesh.vertices()[b as usize].position,
                );
                assert!(
                    w >= chord - 1e-9,
                    "edge {a}-{b}: length {w} below chord {chord}"
                );
            }
        }
    }

    #[test]
    fn sphere_pole_to_pole_close_to_pi() {
        let sph = SurfaceOfRevolution::new(build_sphere(1.0));
        let mesh = build_mesh(&sph, MeshResolution::new(256, 256)).unwrap();
        let d = mesh
            .distance_upper_bound((0.0, 0.0), (sph.profile().total_length(), 0.0))
            .unwrap();
        assert!(d >= PI - 1e-9, "upper bound {d} below the true distance");
        assert!(d <= PI * 1.01, "upper bound {d} too loose");
    }

    #[test]
    fn flat_disc_distances_dominate_chords() {
        let m2 = SurfaceOfRevolution::new(
            build_smoothed_cone(&ConeParams::new(10.0, 0.05, 0.05, FilletKind::Quintic)).unwrap(),
        );
        let mesh = build_mesh(&m2, MeshResolution::new(128, 128)).unwrap();
        // Two points on the flat disc: the true distance is the planar
        // chord 2 rho sin(dtheta/2).
        let rho = 0.6f64;
        for dth in [0.3f64, 1.0, PI] {
            let chord = 2.0 * rho * libm::sin(0.5 * dth);
            let d = mesh.distance_upper_bound((rho, 0.0), (rho, dth)).unwrap();
            assert!(d >= chord - 1e-9);
            assert!(d <= chord * 1.05 + 0.02, "disc bound {d} vs chord {chord}");
        }
    }

    #[test]
    fn refinement_tightens_distances() {
        // Nested refinement: rows sit at i/(n_t + 1), so doubling the cell
        // count (n_t -> 2 n_t + 1, n_theta -> 2 n_theta) keeps every coarse
        // vertex, and every coarse edge decomposes into fine edges. Pairs
        // are sampled at coarse vertices so no snap legs interfere.
        let sph = SurfaceOfRevolution::new(build_sphere(1.0));
        let coarse = build_mesh(&sph, MeshResolution::new(64, 64)).unwrap();
        let fine = build_mesh(&sph, MeshResolution::new(129, 128)).unwrap();
        let pairs = [(65u32, 1900u32), (300, 3000), (10, 4000), (128, 2048)];
        for (a, b) in pairs {
            let p = coarse.vertex_param(a);
            let q = coarse.vertex_param(b);
            let dc = coarse.distance_upper_bound(p, q).unwrap();
            let df = fine.distance_upper_bound(p, q).unwrap();
            assert!(df <= dc + 1e-6, "refinement loosened {dc} -> {df}");
        }
    }

    #[test]
    fn identical_points_have_zero_distance() {
        let sph = SurfaceOfRevolution::new(build_sphere(1.0));
        let mesh = build_mesh(&sph, MeshResolution::new(64, 64)).unwrap();
        let d = mesh.distance_upper_bound((1.0, 2.0), (1.0, 2.0)).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn torus_wraps_in_both_directions() {
        let torus = SurfaceOfRevolution::new(build_torus(3.0, 0.5).unwrap());
        let mesh = build_mesh(&torus, MeshResolution::new(64, 128)).unwrap();
        let l = torus.profile().total_length();
        // Going the short way around the tube: points at t=0.1 and
        // t=l-0.1 are 0.2 apart through the seam.
        let d = mesh.distance_upper_bound((0.1, 0.0), (l - 0.1, 0.0)).unwrap();
        assert!(d < 0.25, "tube seam distance {d}");
    }
}

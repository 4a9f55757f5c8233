//! Robust 3D convex hull (quickhull) and exact mesh volume.
//!
//! The hull is grown from an initial tetrahedron of extreme points by
//! repeatedly lifting the farthest outside point, removing the faces it
//! sees and stitching new faces along the horizon. Planarity tests use a
//! relative tolerance of 1e-9 times the input's bounding-box diagonal, so
//! degeneracy handling is scale-free.

use std::collections::HashMap;

use crate::error::{Degeneracy, Error, Result};
use crate::geom::{Point3, PointCloud};

/// Relative factor applied to the AABB diagonal for "on plane" tests.
pub const HULL_EPS_FACTOR: f64 = 1e-9;

/// A closed, convex, outward-oriented triangle mesh.
///
/// Faces are counter-clockwise when viewed from outside. Vertices are a
/// subset of the points the hull was built from; no coordinates are
/// invented.
#[derive(Debug, Clone, PartialEq)]
pub struct HullMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
}

impl HullMesh {
    /// Assembles a mesh from raw parts without validating convexity.
    /// [`hull_volume`] checks closedness before trusting the faces.
    pub fn from_parts(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Self {
        HullMesh { vertices, faces }
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Mean of the vertices; strictly inside for any non-degenerate hull.
    pub fn vertex_centroid(&self) -> Point3 {
        let mut c = Point3::ORIGIN;
        for v in &self.vertices {
            c = c + *v;
        }
        c * (1.0 / self.vertices.len() as f64)
    }

    /// Checks that the mesh is a closed orientable 2-manifold: every
    /// directed edge appears exactly once and its reverse exactly once,
    /// vertex indices are in range, and the Euler formula V - E + F = 2
    /// holds.
    pub fn validate_closed(&self) -> Result<()> {
        if self.faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        let mut directed = HashMap::with_capacity(self.faces.len() * 3);
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                if a >= self.vertices.len() || b >= self.vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "face {fi} references vertex out of range"
                    )));
                }
                if a == b {
                    return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex")));
                }
                if directed.insert((a, b), fi).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "directed edge ({a}, {b}) appears more than once"
                    )));
                }
            }
        }
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a}, {b}) has no opposite; mesh is open"
                )));
            }
        }
        let v = self.vertices.len() as i64;
        let e = directed.len() as i64 / 2;
        let f = self.faces.len() as i64;
        if v - e + f != 2 {
            return Err(Error::InvalidMesh(format!(
                "Euler formula violated: V={v}, E={e}, F={f}"
            )));
        }
        Ok(())
    }

    /// Unit normal and offset of a face plane, `None` for a zero-area face.
    pub fn face_plane(&self, face: usize) -> Option<(Point3, f64)> {
        let [a, b, c] = self.faces[face];
        let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let n = (vb - va).cross(vc - va).normalized()?;
        Some((n, n.dot(va)))
    }
}

/// Computes the convex hull of a point set.
///
/// Needs at least four points spanning a non-degenerate volume; otherwise
/// the exact flavor of degeneracy (coincident / collinear / coplanar) is
/// reported so callers can map flat slabs to zero volume. Duplicate points
/// are deduplicated up front.
pub fn convex_hull(cloud: &PointCloud) -> Result<HullMesh> {
    convex_hull_of_points(&cloud.points)
}

pub fn convex_hull_of_points(points: &[Point3]) -> Result<HullMesh> {
    let pts = dedup_points(points);
    if pts.len() < 2 {
        return Err(Error::Degenerate(Degeneracy::Coincident));
    }

    let aabb_diag = {
        let cloud = PointCloud::new(pts.clone());
        cloud.bounding_box().expect("non-empty").diagonal()
    };
    let eps = HULL_EPS_FACTOR * aabb_diag;

    let mut builder = Builder::new(pts, eps)?;
    builder.run();
    Ok(builder.finish())
}

fn dedup_points(points: &[Point3]) -> Vec<Point3> {
    let mut seen = HashMap::with_capacity(points.len());
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let key = (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
        if seen.insert(key, ()).is_none() {
            out.push(*p);
        }
    }
    out
}

struct Face {
    verts: [u32; 3],
    normal: Point3,
    offset: f64,
    outside: Vec<u32>,
    farthest: u32,
    farthest_dist: f64,
    alive: bool,
}

impl Face {
    fn signed_dist(&self, p: Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

struct Builder {
    pts: Vec<Point3>,
    eps: f64,
    faces: Vec<Face>,
    /// Directed edge (a, b) -> id of the live face that owns it.
    edges: HashMap<(u32, u32), u32>,
    /// Fixed interior point (centroid of the initial tetrahedron).
    interior: Point3,
    pending: Vec<u32>,
}

impl Builder {
    fn new(pts: Vec<Point3>, eps: f64) -> Result<Builder> {
        let simplex = initial_simplex(&pts, eps)?;
        let [i0, i1, i2, i3] = simplex;
        let interior = (pts[i0 as usize] + pts[i1 as usize] + pts[i2 as usize]
            + pts[i3 as usize])
            * 0.25;

        let mut builder = Builder {
            pts,
            eps,
            faces: Vec::new(),
            edges: HashMap::new(),
            interior,
            pending: Vec::new(),
        };
        for (a, b, c) in [(i0, i1, i2), (i0, i2, i3), (i0, i3, i1), (i1, i3, i2)] {
            builder.add_face_oriented(a, b, c);
        }

        // Hand every remaining point to the first face it lies outside of.
        for idx in 0..builder.pts.len() as u32 {
            if simplex.contains(&idx) {
                continue;
            }
            builder.assign_point(idx, 0..4);
        }
        for f in 0..4u32 {
            if !builder.faces[f as usize].outside.is_empty() {
                builder.pending.push(f);
            }
        }
        Ok(builder)
    }

    /// Creates a face over (a, b, c), flipping the winding if needed so the
    /// interior point lies behind it. Only the initial tetrahedron needs
    /// the flip; cone faces inherit their winding from the horizon.
    fn add_face_oriented(&mut self, a: u32, b: u32, c: u32) -> u32 {
        let (pa, pb, pc) = (
            self.pts[a as usize],
            self.pts[b as usize],
            self.pts[c as usize],
        );
        let normal = (pb - pa)
            .cross(pc - pa)
            .normalized()
            .unwrap_or(Point3::ORIGIN);
        if normal.dot(self.interior) - normal.dot(pa) > 0.0 {
            self.add_face(a, c, b)
        } else {
            self.add_face(a, b, c)
        }
    }

    fn add_face(&mut self, a: u32, b: u32, c: u32) -> u32 {
        let (pa, pb, pc) = (
            self.pts[a as usize],
            self.pts[b as usize],
            self.pts[c as usize],
        );
        let verts = [a, b, c];
        let normal = (pb - pa)
            .cross(pc - pa)
            .normalized()
            .unwrap_or(Point3::ORIGIN);
        let offset = normal.dot(pa);
        let id = self.faces.len() as u32;
        self.faces.push(Face {
            verts,
            normal,
            offset,
            outside: Vec::new(),
            farthest: 0,
            farthest_dist: f64::NEG_INFINITY,
            alive: true,
        });
        for k in 0..3 {
            let e = (verts[k], verts[(k + 1) % 3]);
            let prev = self.edges.insert(e, id);
            debug_assert!(prev.is_none(), "duplicate directed edge {e:?}");
        }
        id
    }

    fn assign_point(&mut self, idx: u32, faces: std::ops::Range<u32>) {
        let p = self.pts[idx as usize];
        for f in faces {
            let face = &mut self.faces[f as usize];
            if !face.alive {
                continue;
            }
            let d = face.signed_dist(p);
            if d > self.eps {
                face.outside.push(idx);
                if d > face.farthest_dist
                    || (d == face.farthest_dist && idx < face.farthest)
                {
                    face.farthest_dist = d;
                    face.farthest = idx;
                }
                return;
            }
        }
        // inside (or on) every candidate face: interior point, dropped
    }

    fn run(&mut self) {
        while let Some(fid) = self.pending.pop() {
            let face = &self.faces[fid as usize];
            if !face.alive || face.outside.is_empty() {
                continue;
            }
            let apex = face.farthest;
            self.insert_point(fid, apex);
        }
    }

    fn insert_point(&mut self, start: u32, apex: u32) {
        let p = self.pts[apex as usize];

        // Flood-fill the faces the apex can see; edges from a visible face
        // to a hidden one form the horizon loop.
        let mut visible = vec![start];
        let mut visited: HashMap<u32, ()> = HashMap::new();
        visited.insert(start, ());
        let mut stack = vec![start];
        while let Some(fid) = stack.pop() {
            let verts = self.faces[fid as usize].verts;
            for k in 0..3 {
                let a = verts[k];
                let b = verts[(k + 1) % 3];
                let neighbor = *self
                    .edges
                    .get(&(b, a))
                    .expect("closed hull: every edge has a twin");
                if visited.contains_key(&neighbor) {
                    continue;
                }
                if self.faces[neighbor as usize].signed_dist(p) > self.eps {
                    visited.insert(neighbor, ());
                    visible.push(neighbor);
                    stack.push(neighbor);
                }
            }
        }

        // With tolerance-based visibility the horizon can pinch: a vertex
        // whose surrounding faces alternate visible / hidden appears twice
        // in the loop and would break the stitching. Absorb every live face
        // around such a vertex into the visible set (they are within
        // tolerance of the apex's view anyway) until the loop is simple.
        let mut horizon: Vec<(u32, u32)>;
        loop {
            horizon = Vec::new();
            for &fid in &visible {
                let verts = self.faces[fid as usize].verts;
                for k in 0..3 {
                    let a = verts[k];
                    let b = verts[(k + 1) % 3];
                    let neighbor = *self
                        .edges
                        .get(&(b, a))
                        .expect("closed hull: every edge has a twin");
                    if !visited.contains_key(&neighbor) {
                        horizon.push((a, b));
                    }
                }
            }
            let mut pinch = None;
            let mut starts: HashMap<u32, u32> = HashMap::new();
            for &(a, _) in &horizon {
                let count = starts.entry(a).or_insert(0);
                *count += 1;
                if *count > 1 {
                    pinch = Some(a);
                    break;
                }
            }
            let Some(v) = pinch else { break };
            let mut grew = false;
            for fid in 0..self.faces.len() as u32 {
                let face = &self.faces[fid as usize];
                if face.alive && !visited.contains_key(&fid) && face.verts.contains(&v) {
                    visited.insert(fid, ());
                    visible.push(fid);
                    grew = true;
                }
            }
            debug_assert!(grew, "pinch vertex {v} has no absorbable faces");
            if !grew {
                break;
            }
        }
        if horizon.is_empty() {
            // Absorption swallowed the whole surface; give the apex up
            // rather than tear the mesh open.
            return;
        }

        // Retire the visible faces and pool their candidate points.
        let mut orphans: Vec<u32> = Vec::new();
        for &fid in &visible {
            let face = &mut self.faces[fid as usize];
            face.alive = false;
            orphans.append(&mut face.outside);
            let verts = face.verts;
            for k in 0..3 {
                self.edges.remove(&(verts[k], verts[(k + 1) % 3]));
            }
        }

        // Stitch the cone from the horizon to the apex.
        let first_new = self.faces.len() as u32;
        for &(a, b) in &horizon {
            self.add_face(a, b, apex);
        }
        let end_new = self.faces.len() as u32;

        orphans.sort_unstable();
        for idx in orphans {
            if idx == apex {
                continue;
            }
            self.assign_point(idx, first_new..end_new);
        }
        for fid in first_new..end_new {
            if !self.faces[fid as usize].outside.is_empty() {
                self.pending.push(fid);
            }
        }
    }

    fn finish(self) -> HullMesh {
        let mut remap: HashMap<u32, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for face in self.faces.iter().filter(|f| f.alive) {
            let mut tri = [0usize; 3];
            for (slot, &v) in tri.iter_mut().zip(face.verts.iter()) {
                *slot = *remap.entry(v).or_insert_with(|| {
                    vertices.push(self.pts[v as usize]);
                    vertices.len() - 1
                });
            }
            faces.push(tri);
        }
        let mesh = HullMesh { vertices, faces };
        debug_assert!(mesh.validate_closed().is_ok());
        mesh
    }
}

/// Picks four points spanning the largest extent, detecting coincident,
/// collinear and coplanar inputs along the way.
fn initial_simplex(pts: &[Point3], eps: f64) -> Result<[u32; 4]> {
    // Extreme points along each coordinate axis.
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for (i, p) in pts.iter().enumerate() {
        let c = [p.x, p.y, p.z];
        for d in 0..3 {
            let clo = [pts[lo[d]].x, pts[lo[d]].y, pts[lo[d]].z][d];
            let chi = [pts[hi[d]].x, pts[hi[d]].y, pts[hi[d]].z][d];
            if c[d] < clo {
                lo[d] = i;
            }
            if c[d] > chi {
                hi[d] = i;
            }
        }
    }
    let candidates: Vec<usize> = lo.iter().chain(hi.iter()).copied().collect();

    // Farthest pair among the extremes spans the base edge.
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for i in 0..candidates.len() {
        for j in (i + 1)..candidates.len() {
            let d = pts[candidates[i]].distance(pts[candidates[j]]);
            if d > best.2 {
                best = (candidates[i], candidates[j], d);
            }
        }
    }
    let (i0, i1, span) = best;
    if span <= eps {
        return Err(Error::Degenerate(Degeneracy::Coincident));
    }

    // Farthest point from the base line.
    let dir = (pts[i1] - pts[i0]).normalized().expect("span > 0");
    let mut i2 = usize::MAX;
    let mut d2 = f64::NEG_INFINITY;
    for (i, p) in pts.iter().enumerate() {
        let v = *p - pts[i0];
        let perp = (v - dir * v.dot(dir)).norm();
        if perp > d2 {
            d2 = perp;
            i2 = i;
        }
    }
    if d2 <= eps {
        return Err(Error::Degenerate(Degeneracy::Collinear));
    }

    // Farthest point from the base plane.
    let normal = (pts[i1] - pts[i0])
        .cross(pts[i2] - pts[i0])
        .normalized()
        .expect("non-collinear");
    let offset = normal.dot(pts[i0]);
    let mut i3 = usize::MAX;
    let mut d3 = f64::NEG_INFINITY;
    for (i, p) in pts.iter().enumerate() {
        let d = (normal.dot(*p) - offset).abs();
        if d > d3 {
            d3 = d;
            i3 = i;
        }
    }
    if d3 <= eps {
        return Err(Error::Degenerate(Degeneracy::Coplanar));
    }

    Ok([i0 as u32, i1 as u32, i2 as u32, i3 as u32])
}

/// Volume of a closed hull mesh by a centroid-anchored tetrahedron fan.
///
/// Translating the fan apex to the vertex centroid keeps the summands well
/// conditioned for hulls far from the origin. Errors with `InvalidMesh`
/// when the mesh is open or non-manifold.
pub fn hull_volume(mesh: &HullMesh) -> Result<f64> {
    mesh.validate_closed()?;
    let c = mesh.vertex_centroid();
    let mut six_volume = 0.0;
    for f in mesh.faces() {
        let v0 = mesh.vertices()[f[0]] - c;
        let v1 = mesh.vertices()[f[1]] - c;
        let v2 = mesh.vertices()[f[2]] - c;
        six_volume += v0.dot(v1.cross(v2));
    }
    Ok((six_volume / 6.0).abs())
}

/// True when `p` lies within `eps` of the inside of every face plane.
pub fn hull_contains(mesh: &HullMesh, p: Point3, eps: f64) -> bool {
    for i in 0..mesh.faces().len() {
        if let Some((n, d)) = mesh.face_plane(i) {
            if n.dot(p) - d > eps {
                return false;
            }
        }
    }
    true
}

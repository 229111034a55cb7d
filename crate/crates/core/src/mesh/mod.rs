//! Simplicial meshes in 1D (intervals) and 2D (triangles) with conforming
//! bisection refinement, inverse-bisection coarsening, and the geometric
//! queries the error estimators need.
//!
//! A `Mesh` owns the whole bisection forest of its lineage: every element
//! ever created lives in `forest`, and the *active* elements (the leaves)
//! form the current triangulation. Public element ids index the active list,
//! so per-element data stays contiguous. Meshes are immutable after
//! construction; `refine`/`coarsen` return new meshes.

mod adapt;

pub use adapt::{CoarsenPatch, CoarsenStats};

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};


use crate::error::{Error, Result};
use crate::scalar::{geom_tol, real, Real};

/// Sentinel for the unused third vertex slot of 1D elements.
pub(crate) const UNUSED: usize = usize::MAX;

/// One node of the bisection forest.
#[derive(Debug, Clone)]
pub(crate) struct ElementNode {
    /// Vertex ids. 2D: `[v0, v1, peak]` with refinement edge `(v0, v1)`
    /// (newest-vertex bisection bookkeeping). 1D: `[a, b, UNUSED]`.
    pub verts: [usize; 3],
    pub parent: Option<usize>,
    pub children: Option<[usize; 2]>,
    pub level: u32,
}

/// Interior face shared by exactly two active elements.
#[derive(Debug, Clone)]
pub struct InteriorFace<S> {
    /// 2D: the two edge endpoints. 1D: `[v, UNUSED]`.
    pub verts: [usize; 2],
    /// Adjacent active element ids, ascending.
    pub elements: [usize; 2],
    /// 2D: edge length. 1D: mean of the two adjacent element lengths.
    pub diameter: S,
}

/// Boundary face with its Dirichlet marker.
#[derive(Debug, Clone)]
pub struct BoundaryFace {
    pub verts: [usize; 2],
    pub element: usize,
    pub dirichlet: bool,
}

/// Result of point location: containing element plus barycentric coordinates.
#[derive(Debug, Clone, Copy)]
pub struct ElementLocation<S> {
    pub element: usize,
    /// Barycentric coordinates w.r.t. the element's vertex order; entry `d+1`
    /// and beyond are zero.
    pub barycentric: [S; 3],
}

pub struct Mesh<S> {
    dim: usize,
    vertices: Vec<[S; 2]>,
    forest: Vec<ElementNode>,
    /// Forest ids of the leaves, in forest order. Public element ids index
    /// this list.
    active: Vec<usize>,
    forest_to_active: Vec<Option<usize>>,
    measures: Vec<S>,
    diameters: Vec<S>,
    /// Per active element, neighbor across the face opposite local vertex k.
    neighbors: Vec<[Option<usize>; 3]>,
    interior_faces: Vec<InteriorFace<S>>,
    boundary_faces: Vec<BoundaryFace>,
    boundary_vertex: Vec<bool>,
    /// Active elements incident to each vertex, ascending.
    vertex_elements: Vec<Vec<usize>>,
    domain_measure: S,
    bbox: ([S; 2], [S; 2]),
    shape_regularity: S,
    locate_cache: AtomicUsize,
}

impl<S: Real> Clone for Mesh<S> {
    fn clone(&self) -> Self {
        Mesh {
            dim: self.dim,
            vertices: self.vertices.clone(),
            forest: self.forest.clone(),
            active: self.active.clone(),
            forest_to_active: self.forest_to_active.clone(),
            measures: self.measures.clone(),
            diameters: self.diameters.clone(),
            neighbors: self.neighbors.clone(),
            interior_faces: self.interior_faces.clone(),
            boundary_faces: self.boundary_faces.clone(),
            boundary_vertex: self.boundary_vertex.clone(),
            vertex_elements: self.vertex_elements.clone(),
            domain_measure: self.domain_measure,
            bbox: self.bbox,
            shape_regularity: self.shape_regularity,
            locate_cache: AtomicUsize::new(0),
        }
    }
}

impl<S: Real> std::fmt::Debug for Mesh<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Mesh({}D, {} vertices, {} elements)",
            self.dim,
            self.vertices.len(),
            self.active.len()
        )
    }
}

impl<S: Real> Mesh<S> {
    /// Uniform 1D mesh of `[a, b]` with `n` elements.
    pub fn interval(a: S, b: S, n: usize) -> Self {
        assert!(n >= 1 && b > a, "need n >= 1 and b > a");
        let nf = real::<S>(n as f64);
        let vertices: Vec<[S; 2]> = (0..=n)
            .map(|i| [a + (b - a) * real::<S>(i as f64) / nf, S::zero()])
            .collect();
        let forest: Vec<ElementNode> = (0..n)
            .map(|i| ElementNode {
                verts: [i, i + 1, UNUSED],
                parent: None,
                children: None,
                level: 0,
            })
            .collect();
        Self::finish(1, vertices, forest)
    }

    /// Structured triangulation of the rectangle `[lo, hi]` with `nx` by `ny`
    /// cells, each split along its diagonal. Refinement edges are the
    /// diagonals, which makes the initial labeling compatible for
    /// newest-vertex bisection.
    pub fn rectangle(nx: usize, ny: usize, lo: [S; 2], hi: [S; 2]) -> Self {
        assert!(nx >= 1 && ny >= 1 && hi[0] > lo[0] && hi[1] > lo[1]);
        let nxf = real::<S>(nx as f64);
        let nyf = real::<S>(ny as f64);
        let idx = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    lo[0] + (hi[0] - lo[0]) * real::<S>(i as f64) / nxf,
                    lo[1] + (hi[1] - lo[1]) * real::<S>(j as f64) / nyf,
                ]);
            }
        }
        let mut forest = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (p00, p10) = (idx(i, j), idx(i + 1, j));
                let (p01, p11) = (idx(i, j + 1), idx(i + 1, j + 1));
                // Both triangles use the cell diagonal as refinement edge.
                forest.push(ElementNode {
                    verts: [p10, p01, p00],
                    parent: None,
                    children: None,
                    level: 0,
                });
                forest.push(ElementNode {
                    verts: [p01, p10, p11],
                    parent: None,
                    children: None,
                    level: 0,
                });
            }
        }
        Self::finish(2, vertices, forest)
    }

    /// Builds every derived table from the raw forest. Panics if the forest
    /// violates conformity or positive orientation.
    pub(crate) fn finish(dim: usize, vertices: Vec<[S; 2]>, forest: Vec<ElementNode>) -> Self {
        assert!(dim == 1 || dim == 2, "only 1D and 2D meshes are supported");
        let active: Vec<usize> = (0..forest.len())
            .filter(|&i| forest[i].children.is_none())
            .collect();
        let mut forest_to_active = vec![None; forest.len()];
        for (a, &f) in active.iter().enumerate() {
            forest_to_active[f] = Some(a);
        }

        let nv = dim + 1;
        let mut measures = Vec::with_capacity(active.len());
        let mut diameters = Vec::with_capacity(active.len());
        for &f in &active {
            let vs = &forest[f].verts;
            let (m, d) = simplex_measure_diameter(dim, vs, &vertices);
            assert!(m > S::zero(), "element {f} has non-positive measure");
            measures.push(m);
            diameters.push(d);
        }

        // Face incidence: key = sorted vertex tuple of the face.
        let mut face_map: BTreeMap<[usize; 2], Vec<(usize, usize)>> = BTreeMap::new();
        for (a, &f) in active.iter().enumerate() {
            let vs = &forest[f].verts;
            for k in 0..nv {
                let face = local_face(dim, vs, k);
                face_map.entry(face).or_default().push((a, k));
            }
        }

        let mut neighbors = vec![[None; 3]; active.len()];
        let mut interior_faces = Vec::new();
        let mut boundary_faces = Vec::new();
        let mut boundary_vertex = vec![false; vertices.len()];
        for (face, owners) in &face_map {
            match owners.as_slice() {
                [(a, _)] => {
                    boundary_faces.push(BoundaryFace {
                        verts: *face,
                        element: *a,
                        dirichlet: true,
                    });
                    boundary_vertex[face[0]] = true;
                    if face[1] != UNUSED {
                        boundary_vertex[face[1]] = true;
                    }
                }
                [(a, ka), (b, kb)] => {
                    neighbors[*a][*ka] = Some(*b);
                    neighbors[*b][*kb] = Some(*a);
                    let (lo, hi) = if a < b { (*a, *b) } else { (*b, *a) };
                    let diameter = if dim == 2 {
                        let p = vertices[face[0]];
                        let q = vertices[face[1]];
                        dist2(p, q)
                    } else {
                        (measures[*a] + measures[*b]) / real(2.0)
                    };
                    interior_faces.push(InteriorFace {
                        verts: *face,
                        elements: [lo, hi],
                        diameter,
                    });
                }
                _ => panic!("non-conforming mesh: face {face:?} shared by >2 elements"),
            }
        }

        let mut vertex_elements = vec![Vec::new(); vertices.len()];
        for (a, &f) in active.iter().enumerate() {
            for &v in &forest[f].verts[..nv] {
                vertex_elements[v].push(a);
            }
        }

        let domain_measure = measures.iter().copied().fold(S::zero(), |s, m| s + m);
        let mut lo = [S::infinity(); 2];
        let mut hi = [S::neg_infinity(); 2];
        for p in &vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }

        let mut shape_reg = S::zero();
        for (i, &f) in active.iter().enumerate() {
            let ratio = if dim == 1 {
                real(2.0)
            } else {
                let vs = &forest[f].verts;
                let (a, b, c) = (vertices[vs[0]], vertices[vs[1]], vertices[vs[2]]);
                let per = dist2(a, b) + dist2(b, c) + dist2(c, a);
                // inradius = area / semi-perimeter
                diameters[i] * per / (real::<S>(2.0) * measures[i])
            };
            shape_reg = shape_reg.max(ratio);
        }

        Mesh {
            dim,
            vertices,
            forest,
            active,
            forest_to_active,
            measures,
            diameters,
            neighbors,
            interior_faces,
            boundary_faces,
            boundary_vertex,
            vertex_elements,
            domain_measure,
            bbox: (lo, hi),
            shape_regularity: shape_reg,
            locate_cache: AtomicUsize::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, v: usize) -> [S; 2] {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[[S; 2]] {
        &self.vertices
    }

    /// Number of active elements.
    pub fn n_elements(&self) -> usize {
        self.active.len()
    }

    /// Vertex ids of active element `e` (`dim + 1` entries).
    pub fn element_verts(&self, e: usize) -> &[usize] {
        &self.forest[self.active[e]].verts[..self.dim + 1]
    }

    pub fn element_measure(&self, e: usize) -> S {
        self.measures[e]
    }

    pub fn element_diameter(&self, e: usize) -> S {
        self.diameters[e]
    }

    pub fn element_level(&self, e: usize) -> u32 {
        self.forest[self.active[e]].level
    }

    pub fn neighbor(&self, e: usize, face: usize) -> Option<usize> {
        self.neighbors[e][face]
    }

    pub fn interior_faces(&self) -> &[InteriorFace<S>] {
        &self.interior_faces
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// Sorted ids of the boundary vertices.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| self.boundary_vertex[v])
            .collect()
    }

    /// Active elements incident to vertex `v`, ascending.
    pub fn vertex_elements(&self, v: usize) -> &[usize] {
        &self.vertex_elements[v]
    }

    pub fn domain_measure(&self) -> S {
        self.domain_measure
    }

    pub fn bbox(&self) -> ([S; 2], [S; 2]) {
        self.bbox
    }

    pub fn domain_diameter(&self) -> S {
        let (lo, hi) = self.bbox;
        if self.dim == 1 {
            hi[0] - lo[0]
        } else {
            dist2(lo, hi)
        }
    }

    /// Worst ratio of element diameter to inradius over the active elements.
    pub fn shape_regularity(&self) -> S {
        self.shape_regularity
    }

    /// Barycentric coordinates of `p` w.r.t. active element `e` (unclamped).
    pub fn barycentric(&self, e: usize, p: [S; 2]) -> [S; 3] {
        let vs = self.element_verts(e);
        if self.dim == 1 {
            let a = self.vertices[vs[0]][0];
            let b = self.vertices[vs[1]][0];
            let l1 = (p[0] - a) / (b - a);
            [S::one() - l1, l1, S::zero()]
        } else {
            let p0 = self.vertices[vs[0]];
            let p1 = self.vertices[vs[1]];
            let p2 = self.vertices[vs[2]];
            let det = cross(sub(p1, p0), sub(p2, p0));
            let l1 = cross(sub(p, p0), sub(p2, p0)) / det;
            let l2 = cross(sub(p1, p0), sub(p, p0)) / det;
            [S::one() - l1 - l2, l1, l2]
        }
    }

    /// Locates `p`, walking from the last successful hit.
    pub fn locate(&self, p: [S; 2]) -> Result<ElementLocation<S>> {
        let hint = self.locate_cache.load(Ordering::Relaxed);
        self.locate_hinted(p, Some(hint.min(self.active.len().saturating_sub(1))))
    }

    /// Locates `p`, walking from `hint` if given. Points on shared faces
    /// resolve to the lowest containing element id.
    pub fn locate_hinted(&self, p: [S; 2], hint: Option<usize>) -> Result<ElementLocation<S>> {
        let tol = geom_tol::<S>();
        let n = self.active.len();
        let mut e = hint.unwrap_or(0).min(n - 1);
        let mut found = None;
        for _ in 0..(2 * n + 8) {
            let lam = self.barycentric(e, p);
            let (kmin, lmin) = argmin(&lam[..self.dim + 1]);
            if lmin >= -tol {
                found = Some((e, lam));
                break;
            }
            match self.neighbors[e][kmin] {
                Some(next) => e = next,
                None => break,
            }
        }
        let (e, lam) = match found {
            Some(hit) => hit,
            None => self.locate_scan(p)?,
        };
        let resolved = self.resolve_face_ties(e, lam, p, tol);
        self.locate_cache.store(resolved.element, Ordering::Relaxed);
        Ok(resolved)
    }

    /// Brute-force fallback: best element by least barycentric deficit.
    fn locate_scan(&self, p: [S; 2]) -> Result<(usize, [S; 3])> {
        let mut best: Option<(usize, [S; 3], S)> = None;
        for e in 0..self.active.len() {
            let lam = self.barycentric(e, p);
            let (_, lmin) = argmin(&lam[..self.dim + 1]);
            if best.as_ref().map_or(true, |&(_, _, b)| lmin > b) {
                best = Some((e, lam, lmin));
            }
        }
        let (e, lam, lmin) = best.expect("mesh has no elements");
        if lmin >= -geom_tol::<S>() {
            return Ok((e, lam));
        }
        // Convert the barycentric deficit into a distance and compare with
        // the 1e-10 * diam(domain) admission threshold.
        let dist = self.deficit_distance(e, &lam);
        if dist <= real::<S>(1e-10) * self.domain_diameter() {
            Ok((e, lam))
        } else {
            Err(Error::PointOutsideDomain {
                point: [
                    p[0].to_f64().unwrap_or(f64::NAN),
                    p[1].to_f64().unwrap_or(f64::NAN),
                ],
            })
        }
    }

    fn deficit_distance(&self, e: usize, lam: &[S; 3]) -> S {
        let mut dist = S::zero();
        for k in 0..self.dim + 1 {
            if lam[k] < S::zero() {
                let height = if self.dim == 1 {
                    self.measures[e]
                } else {
                    let face = local_face(2, &three_verts(self.element_verts(e)), k);
                    let len = dist2(self.vertices[face[0]], self.vertices[face[1]]);
                    real::<S>(2.0) * self.measures[e] / len
                };
                dist = dist.max(-lam[k] * height);
            }
        }
        dist
    }

    /// A point on a shared face belongs to every incident element; return the
    /// lowest element id so location is deterministic.
    fn resolve_face_ties(&self, e: usize, lam: [S; 3], p: [S; 2], tol: S) -> ElementLocation<S> {
        let nv = self.dim + 1;
        let on_face = lam[..nv].iter().any(|&l| l <= tol);
        let mut chosen = (e, lam);
        if on_face {
            // The point lies on the sub-simplex spanned by the vertices with
            // positive weight; candidates are the active elements containing
            // all of them.
            let vs = self.element_verts(e);
            let positives: Vec<usize> = (0..nv).filter(|&k| lam[k] > tol).map(|k| vs[k]).collect();
            if !positives.is_empty() {
                for &cand in self.vertex_elements[positives[0]].iter() {
                    if cand >= chosen.0 {
                        break;
                    }
                    let cvs = self.element_verts(cand);
                    if !positives.iter().all(|v| cvs.contains(v)) {
                        continue;
                    }
                    let clam = self.barycentric(cand, p);
                    if clam[..nv].iter().all(|&l| l >= -tol) {
                        chosen = (cand, clam);
                        break;
                    }
                }
            }
        }
        let (e, mut lam) = chosen;
        // Clamp and renormalize so downstream interpolation sees a convex
        // combination even for admitted slightly-outside points.
        let mut sum = S::zero();
        for l in lam.iter_mut().take(nv) {
            *l = l.max(S::zero()).min(S::one());
            sum += *l;
        }
        for l in lam.iter_mut().take(nv) {
            *l = *l / sum;
        }
        ElementLocation {
            element: e,
            barycentric: lam,
        }
    }

    /// Structural equality of the discretization (vertices plus active
    /// element vertex tuples); hierarchy bookkeeping is ignored.
    pub fn same_discretization(&self, other: &Mesh<S>) -> bool {
        self.dim == other.dim
            && self.vertices == other.vertices
            && self.active.len() == other.active.len()
            && (0..self.active.len()).all(|e| self.element_verts(e) == other.element_verts(e))
    }

    pub(crate) fn forest(&self) -> &[ElementNode] {
        &self.forest
    }

    pub(crate) fn active_forest_ids(&self) -> &[usize] {
        &self.active
    }

    pub(crate) fn active_id_of(&self, forest_id: usize) -> Option<usize> {
        self.forest_to_active[forest_id]
    }
}

fn three_verts(vs: &[usize]) -> [usize; 3] {
    [vs[0], vs[1], if vs.len() > 2 { vs[2] } else { UNUSED }]
}

/// Face opposite local vertex `k`, as a sorted vertex tuple.
pub(crate) fn local_face(dim: usize, verts: &[usize; 3], k: usize) -> [usize; 2] {
    if dim == 1 {
        // Face 0 is the endpoint verts[1], face 1 the endpoint verts[0].
        [verts[1 - k], UNUSED]
    } else {
        let a = verts[(k + 1) % 3];
        let b = verts[(k + 2) % 3];
        if a < b {
            [a, b]
        } else {
            [b, a]
        }
    }
}

fn simplex_measure_diameter<S: Real>(dim: usize, vs: &[usize; 3], verts: &[[S; 2]]) -> (S, S) {
    if dim == 1 {
        let len = verts[vs[1]][0] - verts[vs[0]][0];
        (len, len)
    } else {
        let (a, b, c) = (verts[vs[0]], verts[vs[1]], verts[vs[2]]);
        let area = cross(sub(b, a), sub(c, a)) / real(2.0);
        let diam = dist2(a, b).max(dist2(b, c)).max(dist2(c, a));
        (area, diam)
    }
}

#[inline]
pub(crate) fn sub<S: Real>(a: [S; 2], b: [S; 2]) -> [S; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn cross<S: Real>(a: [S; 2], b: [S; 2]) -> S {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn dist2<S: Real>(a: [S; 2], b: [S; 2]) -> S {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

fn argmin<S: Real>(xs: &[S]) -> (usize, S) {
    let mut k = 0;
    let mut v = xs[0];
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x < v {
            k = i;
            v = x;
        }
    }
    (k, v)
}

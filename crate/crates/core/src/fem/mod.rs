//! Continuous piecewise-linear (P1) finite elements: mass/stiffness assembly,
//! energy functional and norm, quadrature-based error norms, and nodal
//! interpolation between meshes.

mod sparse;

pub use sparse::{solve_pcg, PcgSolution, SparseSymMatrix};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{ElementLocation, Mesh};
use crate::scalar::{real, Real};

/// P1 finite-element function: one coefficient per mesh vertex.
pub struct FeFunction<S> {
    mesh: Arc<Mesh<S>>,
    coeffs: Vec<S>,
}

impl<S: Real> Clone for FeFunction<S> {
    fn clone(&self) -> Self {
        FeFunction {
            mesh: self.mesh.clone(),
            coeffs: self.coeffs.clone(),
        }
    }
}

impl<S: Real> std::fmt::Debug for FeFunction<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FeFunction({:?}, {} coeffs)", self.mesh, self.coeffs.len())
    }
}

impl<S: Real> FeFunction<S> {
    pub fn new(mesh: Arc<Mesh<S>>, coeffs: Vec<S>) -> Self {
        assert_eq!(
            coeffs.len(),
            mesh.n_vertices(),
            "coefficient count must match vertex count"
        );
        FeFunction { mesh, coeffs }
    }

    pub fn zero(mesh: Arc<Mesh<S>>) -> Self {
        let n = mesh.n_vertices();
        FeFunction::new(mesh, vec![S::zero(); n])
    }

    /// Nodal interpolant of a pointwise function.
    pub fn interpolate(mesh: Arc<Mesh<S>>, f: impl Fn([S; 2]) -> S) -> Self {
        let coeffs = mesh.vertices().iter().map(|&p| f(p)).collect();
        FeFunction::new(mesh, coeffs)
    }

    pub fn mesh(&self) -> &Arc<Mesh<S>> {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [S] {
        &mut self.coeffs
    }

    /// Value at a located point.
    pub fn eval_located(&self, loc: &ElementLocation<S>) -> S {
        let vs = self.mesh.element_verts(loc.element);
        let mut v = S::zero();
        for (k, &vert) in vs.iter().enumerate() {
            v += loc.barycentric[k] * self.coeffs[vert];
        }
        v
    }

    pub fn eval(&self, p: [S; 2]) -> Result<S> {
        Ok(self.eval_located(&self.mesh.locate(p)?))
    }

    /// Barycentric interpolation at each point; exact for P1 data.
    pub fn eval_at_points(&self, points: &[[S; 2]]) -> Result<Vec<S>> {
        let mut out = Vec::with_capacity(points.len());
        let mut hint = None;
        for &p in points {
            let loc = self.mesh.locate_hinted(p, hint)?;
            hint = Some(loc.element);
            out.push(self.eval_located(&loc));
        }
        Ok(out)
    }
}

/// Exact P1 mass matrix (analytic element integrals).
pub fn assemble_mass<S: Real>(mesh: &Mesh<S>) -> SparseSymMatrix<S> {
    let nv = mesh.dim() + 1;
    let mut triplets = Vec::with_capacity(mesh.n_elements() * nv * nv);
    for e in 0..mesh.n_elements() {
        let vs = mesh.element_verts(e);
        let local = local_mass(mesh.dim(), mesh.element_measure(e));
        for i in 0..nv {
            for j in 0..nv {
                triplets.push((vs[i], vs[j], local[i][j]));
            }
        }
    }
    SparseSymMatrix::from_triplets(mesh.n_vertices(), &triplets)
}

/// Stiffness matrix of the bilinear form eps * (grad v, grad w).
pub fn assemble_stiffness<S: Real>(mesh: &Mesh<S>, epsilon: S) -> Result<SparseSymMatrix<S>> {
    if epsilon <= S::zero() {
        return Err(Error::NonPositiveEpsilon {
            value: epsilon.to_f64().unwrap_or(f64::NAN),
        });
    }
    let nv = mesh.dim() + 1;
    let mut triplets = Vec::with_capacity(mesh.n_elements() * nv * nv);
    for e in 0..mesh.n_elements() {
        let vs = mesh.element_verts(e);
        let grads = element_gradients(mesh, e);
        let measure = mesh.element_measure(e);
        for i in 0..nv {
            for j in 0..nv {
                let gij = grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1];
                triplets.push((vs[i], vs[j], epsilon * measure * gij));
            }
        }
    }
    Ok(SparseSymMatrix::from_triplets(mesh.n_vertices(), &triplets))
}

/// Local P1 mass matrix scaled by the element measure.
pub(crate) fn local_mass<S: Real>(dim: usize, measure: S) -> [[S; 3]; 3] {
    let mut m = [[S::zero(); 3]; 3];
    if dim == 1 {
        let (d, o) = (measure / real(3.0), measure / real(6.0));
        m[0] = [d, o, S::zero()];
        m[1] = [o, d, S::zero()];
    } else {
        let (d, o) = (measure / real(6.0), measure / real(12.0));
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = if i == j { d } else { o };
            }
        }
    }
    m
}

/// Constant gradients of the barycentric basis functions on element `e`.
pub(crate) fn element_gradients<S: Real>(mesh: &Mesh<S>, e: usize) -> [[S; 2]; 3] {
    let vs = mesh.element_verts(e);
    if mesh.dim() == 1 {
        let h = mesh.element_measure(e);
        [
            [-h.recip(), S::zero()],
            [h.recip(), S::zero()],
            [S::zero(); 2],
        ]
    } else {
        let p = [
            mesh.vertex(vs[0]),
            mesh.vertex(vs[1]),
            mesh.vertex(vs[2]),
        ];
        let two_area = real::<S>(2.0) * mesh.element_measure(e);
        let mut g = [[S::zero(); 2]; 3];
        for i in 0..3 {
            let a = p[(i + 1) % 3];
            let b = p[(i + 2) % 3];
            // grad(lambda_i) = rot90(b - a) / (2 |area|), oriented inward.
            g[i] = [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area];
        }
        g
    }
}

/// Gradient of a P1 function on element `e` (constant per element).
pub(crate) fn function_gradient<S: Real>(mesh: &Mesh<S>, coeffs: &[S], e: usize) -> [S; 2] {
    let vs = mesh.element_verts(e);
    let grads = element_gradients(mesh, e);
    let mut g = [S::zero(); 2];
    for (k, &v) in vs.iter().enumerate() {
        g[0] += coeffs[v] * grads[k][0];
        g[1] += coeffs[v] * grads[k][1];
    }
    g
}

/// Potential phi(u) = (eps/2) * ||grad u||^2 = (1/2) u' A u.
pub fn dirichlet_energy<S: Real>(u: &FeFunction<S>, epsilon: S) -> S {
    let mesh = u.mesh();
    let mut acc = S::zero();
    for e in 0..mesh.n_elements() {
        let g = function_gradient(mesh, u.coeffs(), e);
        acc += mesh.element_measure(e) * (g[0] * g[0] + g[1] * g[1]);
    }
    epsilon / real(2.0) * acc
}

/// Energy norm |||u||| = sqrt(a(u, u)) = sqrt(2 phi(u)).
pub fn energy_norm<S: Real>(u: &FeFunction<S>, epsilon: S) -> S {
    (real::<S>(2.0) * dirichlet_energy(u, epsilon)).sqrt()
}

/// L2 norm via the exact mass matrix.
pub fn l2_norm<S: Real>(u: &FeFunction<S>) -> S {
    let mass = assemble_mass(u.mesh());
    mass.quadratic_form(u.coeffs(), u.coeffs()).max(S::zero()).sqrt()
}

/// Nodal interpolation onto another mesh covering the same domain: target
/// vertex values are evaluations of `u`.
pub fn interpolate_to<S: Real>(u: &FeFunction<S>, target: &Arc<Mesh<S>>) -> Result<FeFunction<S>> {
    if Arc::ptr_eq(u.mesh(), target) {
        return Ok(u.clone());
    }
    let coeffs = u.eval_at_points(target.vertices())?;
    Ok(FeFunction::new(target.clone(), coeffs))
}

/// Quadrature rule in barycentric coordinates, exact to degree >= 4.
/// 1D: 3-point Gauss (degree 5). 2D: 6-point triangle rule (degree 4).
pub(crate) fn quadrature_rule<S: Real>(dim: usize) -> Vec<([S; 3], S)> {
    if dim == 1 {
        let s = real::<S>(0.774_596_669_241_483_377_04);
        let half = real::<S>(0.5);
        let w0 = real::<S>(8.0 / 18.0);
        let w1 = real::<S>(5.0 / 18.0);
        vec![
            ([half, half, S::zero()], w0),
            ([half * (S::one() + s), half * (S::one() - s), S::zero()], w1),
            ([half * (S::one() - s), half * (S::one() + s), S::zero()], w1),
        ]
    } else {
        let a1 = real::<S>(0.445_948_490_915_964_886_32);
        let w1 = real::<S>(0.223_381_589_678_011_471_81);
        let a2 = real::<S>(0.091_576_213_509_770_743_46);
        let w2 = real::<S>(0.109_951_743_655_321_868_6);
        let one = S::one();
        let two = real::<S>(2.0);
        vec![
            ([a1, a1, one - two * a1], w1),
            ([a1, one - two * a1, a1], w1),
            ([one - two * a1, a1, a1], w1),
            ([a2, a2, one - two * a2], w2),
            ([a2, one - two * a2, a2], w2),
            ([one - two * a2, a2, a2], w2),
        ]
    }
}

/// Integrates `g` over the mesh with the degree-4 rule and returns the L2
/// norm sqrt(int g^2).
pub fn l2_norm_quadrature<S: Real>(g: impl Fn([S; 2]) -> S, mesh: &Mesh<S>) -> S {
    let rule = quadrature_rule::<S>(mesh.dim());
    let nv = mesh.dim() + 1;
    let mut acc = S::zero();
    for e in 0..mesh.n_elements() {
        let vs = mesh.element_verts(e);
        let measure = mesh.element_measure(e);
        for (lam, w) in &rule {
            let mut p = [S::zero(); 2];
            for k in 0..nv {
                let pv = mesh.vertex(vs[k]);
                p[0] += lam[k] * pv[0];
                p[1] += lam[k] * pv[1];
            }
            let val = g(p);
            acc += *w * measure * val * val;
        }
    }
    acc.max(S::zero()).sqrt()
}

/// L2 distance between a P1 function and a pointwise exact function.
pub fn l2_error<S: Real>(u: &FeFunction<S>, exact: impl Fn([S; 2]) -> S) -> S {
    let mesh = u.mesh();
    let rule = quadrature_rule::<S>(mesh.dim());
    let nv = mesh.dim() + 1;
    let mut acc = S::zero();
    for e in 0..mesh.n_elements() {
        let vs = mesh.element_verts(e);
        let measure = mesh.element_measure(e);
        for (lam, w) in &rule {
            let mut p = [S::zero(); 2];
            let mut uh = S::zero();
            for k in 0..nv {
                let pv = mesh.vertex(vs[k]);
                p[0] += lam[k] * pv[0];
                p[1] += lam[k] * pv[1];
                uh += lam[k] * u.coeffs()[vs[k]];
            }
            let d = uh - exact(p);
            acc += *w * measure * d * d;
        }
    }
    acc.max(S::zero()).sqrt()
}

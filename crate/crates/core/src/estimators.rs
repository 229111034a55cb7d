//! A posteriori indicators: the temporal indicator along characteristics,
//! the residual-type spatial indicator, the coarsening indicator, the
//! source dual-norm surrogate, and the accumulated error bound.

use std::sync::Arc;

use crate::characteristics::{trace_feet, TraceOptions, VelocityField};
use crate::elm::SpaceTimeFn;
use crate::error::Result;
use crate::fem::{
    assemble_mass, dirichlet_energy, function_gradient, interpolate_to,
    local_mass, quadrature_rule, FeFunction,
};
use crate::mesh::Mesh;
use crate::scalar::{real, Real};

/// Per-step record of every indicator.
#[derive(Debug, Clone)]
pub struct IndicatorReport<S> {
    /// Temporal indicator xi_n (>= 0 for solver-produced steps).
    pub xi_n: S,
    /// Per-element spatial indicators eta_tau^n.
    pub eta_elements: Vec<S>,
    /// Total spatial indicator (sum of the per-element values).
    pub eta_n: S,
    /// Per-coarsenable-patch coarsening indicators, aligned with
    /// `mesh.coarsen_patches()`.
    pub zeta_patches: Vec<S>,
    pub zeta_total: S,
    /// Dual-norm surrogate of ||f - f_h||_{-a}.
    pub source_term: S,
    /// Running value of the accumulated upper bound after this step.
    pub bound_accumulator: S,
    /// Diagnostics: |||U^n - U~|||^2, ||d||^2, and (phi(U^n) - phi(U~))/k_n.
    pub energy_increment_sq: S,
    pub d_norm_sq: S,
    pub phi_rate: S,
}

/// The temporal indicator plus the diagnostic quantities the acceptance
/// checks compare it against.
#[derive(Debug, Clone, Copy)]
pub struct XiParts<S> {
    pub xi: S,
    /// |||U^n - U~|||^2 (for solver steps, xi = this / (2 k_n)).
    pub energy_increment_sq: S,
    pub d_norm_sq: S,
    /// (phi(U^n) - phi(U~)) / k_n.
    pub phi_rate: S,
}

/// Temporal indicator
/// xi_n = (f_h - d, d) - (phi(U^n) - phi(U~)) / k_n,  d = (U^n - U~)/k_n,
/// with every inner product taken through the exact mass/stiffness matrices.
pub fn temporal_indicator<S: Real>(
    u_new: &FeFunction<S>,
    u_transported: &FeFunction<S>,
    f_h: &FeFunction<S>,
    k_n: S,
    epsilon: S,
) -> S {
    temporal_indicator_parts(u_new, u_transported, f_h, k_n, epsilon).xi
}

pub fn temporal_indicator_parts<S: Real>(
    u_new: &FeFunction<S>,
    u_transported: &FeFunction<S>,
    f_h: &FeFunction<S>,
    k_n: S,
    epsilon: S,
) -> XiParts<S> {
    let mesh = u_new.mesh();
    assert!(Arc::ptr_eq(mesh, u_transported.mesh()) && Arc::ptr_eq(mesh, f_h.mesh()));
    let mass = assemble_mass(mesh);
    let d: Vec<S> = u_new
        .coeffs()
        .iter()
        .zip(u_transported.coeffs())
        .map(|(&a, &b)| (a - b) / k_n)
        .collect();
    let fd: Vec<S> = f_h.coeffs().iter().zip(&d).map(|(&f, &di)| f - di).collect();
    let inner = mass.quadratic_form(&fd, &d);
    let phi_new = dirichlet_energy(u_new, epsilon);
    let phi_tilde = dirichlet_energy(u_transported, epsilon);
    let diff = FeFunction::new(
        mesh.clone(),
        u_new
            .coeffs()
            .iter()
            .zip(u_transported.coeffs())
            .map(|(&a, &b)| a - b)
            .collect(),
    );
    let energy_increment_sq = real::<S>(2.0) * dirichlet_energy(&diff, epsilon);
    let phi_rate = (phi_new - phi_tilde) / k_n;
    XiParts {
        xi: inner - phi_rate,
        energy_increment_sq,
        d_norm_sq: mass.quadratic_form(&d, &d),
        phi_rate,
    }
}

/// Residual-type spatial indicator. Per element,
/// eta_tau = (1/eps) h_tau^2 ||R||_{L2(tau)}^2 + eps * sum_e h_e ||J_e||_{L2(e)}^2
/// with R = f_h - d (the P1 interior residual; the Laplacian of a P1 function
/// vanishes elementwise) and J_e the normal jump of grad(U^n). Every interior
/// face charges both adjacent elements in full.
pub fn spatial_indicator<S: Real>(
    u_new: &FeFunction<S>,
    u_transported: &FeFunction<S>,
    f_h: &FeFunction<S>,
    k_n: S,
    epsilon: S,
) -> (Vec<S>, S) {
    let mesh = u_new.mesh();
    assert!(Arc::ptr_eq(mesh, u_transported.mesh()) && Arc::ptr_eq(mesh, f_h.mesh()));
    let nv = mesh.dim() + 1;
    let residual: Vec<S> = (0..mesh.n_vertices())
        .map(|v| {
            f_h.coeffs()[v] - (u_new.coeffs()[v] - u_transported.coeffs()[v]) / k_n
        })
        .collect();

    let mut eta = vec![S::zero(); mesh.n_elements()];
    for e in 0..mesh.n_elements() {
        let vs = mesh.element_verts(e);
        let local = local_mass(mesh.dim(), mesh.element_measure(e));
        let mut r2 = S::zero();
        for i in 0..nv {
            for j in 0..nv {
                r2 += residual[vs[i]] * local[i][j] * residual[vs[j]];
            }
        }
        let h = mesh.element_diameter(e);
        eta[e] = h * h / epsilon * r2;
    }

    for face in mesh.interior_faces() {
        let [e1, e2] = face.elements;
        let g1 = function_gradient(mesh, u_new.coeffs(), e1);
        let g2 = function_gradient(mesh, u_new.coeffs(), e2);
        // Normal convention: from the lower to the higher element id. The
        // squared jump is orientation-independent.
        let jump_sq = if mesh.dim() == 1 {
            let j = g1[0] - g2[0];
            j * j
        } else {
            let p = mesh.vertex(face.verts[0]);
            let q = mesh.vertex(face.verts[1]);
            let len = crate::mesh::dist2(p, q);
            let nu = [(q[1] - p[1]) / len, (p[0] - q[0]) / len];
            let j = (g1[0] - g2[0]) * nu[0] + (g1[1] - g2[1]) * nu[1];
            // ||J||^2_{L2(e)} = J^2 * |e| for the constant jump.
            j * j * len
        };
        let contribution = epsilon * face.diameter * jump_sq;
        eta[e1] += contribution;
        eta[e2] += contribution;
    }

    let total = eta.iter().copied().fold(S::zero(), |a, v| a + v);
    (eta, total)
}

/// Coarsening indicator against a one-level-coarsened candidate mesh:
/// zeta_tau = ||e||^2_{L2(tau)} + k_n * eps * ||grad e||^2_{L2(tau)} with
/// e = U^n - I_H U^n lifted back to the fine mesh, aggregated per
/// coarsenable patch of `u_new.mesh()`.
pub fn coarsening_indicator<S: Real>(
    u_new: &FeFunction<S>,
    coarse: &Arc<Mesh<S>>,
    k_n: S,
    epsilon: S,
) -> Result<(Vec<S>, S)> {
    let mesh = u_new.mesh();
    let down = interpolate_to(u_new, coarse)?;
    let lifted = interpolate_to(&down, mesh)?;
    let defect: Vec<S> = u_new
        .coeffs()
        .iter()
        .zip(lifted.coeffs())
        .map(|(&a, &b)| a - b)
        .collect();

    let nv = mesh.dim() + 1;
    let elem_zeta = |e: usize| -> S {
        let vs = mesh.element_verts(e);
        let local = local_mass(mesh.dim(), mesh.element_measure(e));
        let mut l2 = S::zero();
        for i in 0..nv {
            for j in 0..nv {
                l2 += defect[vs[i]] * local[i][j] * defect[vs[j]];
            }
        }
        let g = function_gradient(mesh, &defect, e);
        let energy = (g[0] * g[0] + g[1] * g[1]) * mesh.element_measure(e);
        l2 + k_n * epsilon * energy
    };

    let patches = mesh.coarsen_patches();
    let mut per_patch = Vec::with_capacity(patches.len());
    for patch in &patches {
        let z = patch
            .elements
            .iter()
            .map(|&e| elem_zeta(e))
            .fold(S::zero(), |a, v| a + v);
        per_patch.push(z);
    }
    let total = per_patch.iter().copied().fold(S::zero(), |a, v| a + v);
    Ok((per_patch, total))
}

/// Poincare surrogate of the dual norm term:
/// (diam(Omega)/pi / sqrt(eps)) * ||f(x^n(t_mid), t_mid) - f_h||_{L2},
/// sampling f along the characteristic positions at the half step.
/// The designated zero source returns exactly zero.
pub fn source_surrogate<S: Real>(
    source: Option<&SpaceTimeFn<S>>,
    f_h: &FeFunction<S>,
    field: &VelocityField<S>,
    t_n: S,
    k_n: S,
    epsilon: S,
) -> Result<S> {
    let f = match source {
        None => return Ok(S::zero()),
        Some(f) => f,
    };
    let mesh = f_h.mesh();
    let t_mid = t_n - k_n / real(2.0);
    let rule = quadrature_rule::<S>(mesh.dim());
    let nv = mesh.dim() + 1;

    // Quadrature points of all elements, traced back half a step.
    let mut points = Vec::with_capacity(mesh.n_elements() * rule.len());
    let mut fh_vals = Vec::with_capacity(points.capacity());
    let mut weights = Vec::with_capacity(points.capacity());
    for e in 0..mesh.n_elements() {
        let vs = mesh.element_verts(e);
        let measure = mesh.element_measure(e);
        for (lam, w) in &rule {
            let mut p = [S::zero(); 3];
            let mut fh = S::zero();
            for k in 0..nv {
                let pv = mesh.vertex(vs[k]);
                p[0] += lam[k] * pv[0];
                p[1] += lam[k] * pv[1];
                fh += lam[k] * f_h.coeffs()[vs[k]];
            }
            points.push(p);
            fh_vals.push(fh);
            weights.push(*w * measure);
        }
    }
    let opts = TraceOptions {
        clamp_box: Some(mesh.bbox()),
        history_floor: Some(S::zero()),
        ..TraceOptions::default()
    };
    let trace = trace_feet(field, &points, t_n, k_n / real(2.0), &opts)?;

    let mut acc = S::zero();
    for i in 0..points.len() {
        let foot = [trace.feet[i][0], trace.feet[i][1]];
        let d = f(foot, t_mid) - fh_vals[i];
        acc += weights[i] * d * d;
    }
    let poincare = mesh.domain_diameter() / real::<S>(std::f64::consts::PI);
    Ok(poincare / epsilon.sqrt() * acc.max(S::zero()).sqrt())
}

/// Accumulated right-hand side of the a posteriori bound:
/// ||u(0) - U^0||^2 + sum_n (k_n^2 xi_n + C k_n eta_n + k_n source_n^2),
/// reported with C = 1.
pub fn accumulate_bound<S: Real>(
    initial_error_sq: S,
    steps: impl IntoIterator<Item = (S, S, S, S)>,
) -> S {
    let mut acc = initial_error_sq;
    for (k_n, xi_n, eta_n, source_n) in steps {
        acc += k_n * k_n * xi_n + k_n * eta_n + k_n * source_n * source_n;
    }
    acc
}

/// Header of the per-step CSV emitted by the drivers.
pub const CSV_HEADER: &str = "n,t_n,k_n,xi_n,eta_n,zeta_total,source_term,bound_accumulator,dof,l2_error";

/// One accepted step in a run log.
#[derive(Debug, Clone)]
pub struct StepRecord<S> {
    pub n: usize,
    pub t_n: S,
    pub k_n: S,
    pub dof: usize,
    pub l2_error: Option<S>,
    pub report: IndicatorReport<S>,
}

impl<S: Real> StepRecord<S> {
    pub fn csv_row(&self) -> String {
        let err = match self.l2_error {
            Some(e) => format!("{e:.12e}"),
            None => String::new(),
        };
        format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{}",
            self.n,
            self.t_n,
            self.k_n,
            self.report.xi_n,
            self.report.eta_n,
            self.report.zeta_total,
            self.report.source_term,
            self.report.bound_accumulator,
            self.dof,
            err
        )
    }
}

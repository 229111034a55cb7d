//! One fully discrete ELM time step: trace feet, transport the previous
//! solution, assemble, and solve the symmetric backward-Euler diffusion
//! system
//!
//! ```text
//!     (M/k + A) U^n = (M/k) U~ + M f_h^n,     U~ = U^{n-1}(x^n(t_{n-1})),
//! ```
//!
//! with Dirichlet elimination. `U~` is the nodal interpolant of the
//! transported previous solution, so it lives in the current FE space and
//! the temporal-indicator identity is exact.

use std::sync::Arc;

use crate::characteristics::{trace_feet, TraceOptions, TraceResult, VelocityField};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_mass, assemble_stiffness, interpolate_to, solve_pcg, FeFunction, SparseSymMatrix,
};
use crate::mesh::Mesh;
use crate::scalar::{real, Real};

/// Pointwise space-time scalar function (boundary data, sources).
pub type SpaceTimeFn<S> = Arc<dyn Fn([S; 2], S) -> S + Send + Sync>;

/// Inputs of one ELM step. `u_prev` may live on a different mesh; it is
/// first carried to `mesh` by nodal interpolation, then transported.
pub struct StepInput<'a, S> {
    pub mesh: &'a Arc<Mesh<S>>,
    pub u_prev: &'a FeFunction<S>,
    pub field: &'a VelocityField<S>,
    /// Source term; `None` is the designated zero function.
    pub source: Option<&'a SpaceTimeFn<S>>,
    /// Dirichlet boundary data g(x, t).
    pub boundary: &'a SpaceTimeFn<S>,
    pub t_n: S,
    pub k_n: S,
    pub epsilon: S,
}

#[derive(Debug, Clone)]
pub struct StepOutput<S: Real> {
    pub u_new: FeFunction<S>,
    /// Nodal interpolant of U^{n-1} composed with the characteristic feet.
    pub u_transported: FeFunction<S>,
    /// Nodal interpolant of f(., t_n) (zero function when no source).
    pub f_h: FeFunction<S>,
    pub trace: TraceResult<S>,
    /// Final relative residual of the CG solve.
    pub linear_residual: S,
    pub cg_iterations: usize,
}

/// Transports a function to `mesh_new` by evaluating it at the traced feet:
/// coefficient i = u_prev(foot_i).
pub fn transport<S: Real>(
    u_prev: &FeFunction<S>,
    mesh_new: &Arc<Mesh<S>>,
    trace: &TraceResult<S>,
) -> Result<FeFunction<S>> {
    assert_eq!(trace.feet.len(), mesh_new.n_vertices(), "one foot per vertex");
    let points: Vec<[S; 2]> = trace.feet.iter().map(|f| [f[0], f[1]]).collect();
    let coeffs = u_prev.eval_at_points(&points)?;
    Ok(FeFunction::new(mesh_new.clone(), coeffs))
}

/// Executes one ELM step.
pub fn elm_step<S: Real>(input: &StepInput<'_, S>) -> Result<StepOutput<S>> {
    let mesh = input.mesh;
    let k = input.k_n;
    assert!(k > S::zero(), "step size must be positive");
    if input.epsilon <= S::zero() {
        return Err(Error::NonPositiveEpsilon {
            value: input.epsilon.to_f64().unwrap_or(f64::NAN),
        });
    }

    // Carry the previous solution onto the current mesh first (it may come
    // from a refined/coarsened mesh within the same step).
    let u_carried = interpolate_to(input.u_prev, mesh)?;

    let points: Vec<[S; 3]> = mesh
        .vertices()
        .iter()
        .map(|&p| [p[0], p[1], S::zero()])
        .collect();
    let opts = TraceOptions {
        clamp_box: Some(mesh.bbox()),
        // The model problem starts at t = 0; the first step has no velocity
        // history before that.
        history_floor: Some(S::zero()),
        ..TraceOptions::default()
    };
    let trace = trace_feet(input.field, &points, input.t_n, k, &opts)?;
    let u_transported = transport(&u_carried, mesh, &trace)?;

    let f_h = match input.source {
        Some(f) => FeFunction::interpolate(mesh.clone(), |p| f(p, input.t_n)),
        None => FeFunction::zero(mesh.clone()),
    };

    let mass = assemble_mass(mesh);
    let stiffness = assemble_stiffness(mesh, input.epsilon)?;
    let mut system = mass.add_scaled(k.recip(), &stiffness, S::one());

    // rhs = M (U~/k + f_h)
    let w: Vec<S> = u_transported
        .coeffs()
        .iter()
        .zip(f_h.coeffs())
        .map(|(&ut, &f)| ut / k + f)
        .collect();
    let mut rhs = vec![S::zero(); mesh.n_vertices()];
    mass.matvec(&w, &mut rhs);

    let mut constrained: Vec<Option<S>> = vec![None; mesh.n_vertices()];
    for v in 0..mesh.n_vertices() {
        if mesh.is_boundary_vertex(v) {
            constrained[v] = Some((input.boundary)(mesh.vertex(v), input.t_n));
        }
    }
    system.apply_dirichlet(&mut rhs, &constrained);

    let mut x0 = u_transported.coeffs().to_vec();
    for (v, c) in constrained.iter().enumerate() {
        if let Some(g) = *c {
            x0[v] = g;
        }
    }
    // 1e-12 rather than 1e-10: the temporal-indicator identity divides the
    // solver error by k twice and must stay below 1e-8 relative. Widened to
    // 50*eps for scalar types that cannot reach 1e-12.
    let cg_tol = real::<S>(1e-12).max(S::epsilon() * real(50.0));
    let max_iter = 10 * mesh.n_vertices();
    let sol = solve_pcg(&system, &rhs, &x0, cg_tol, max_iter)?;

    Ok(StepOutput {
        u_new: FeFunction::new(mesh.clone(), sol.x),
        u_transported,
        f_h,
        trace,
        linear_residual: sol.residual,
        cg_iterations: sol.iterations,
    })
}

impl<S: Real> SparseSymMatrix<S> {
    /// alpha * self + beta * other, merging sparsity patterns.
    pub fn add_scaled(&self, alpha: S, other: &Self, beta: S) -> Self {
        assert_eq!(self.dim(), other.dim());
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.dim() {
            for (c, v) in self.row(r) {
                triplets.push((r, c, alpha * v));
            }
            for (c, v) in other.row(r) {
                triplets.push((r, c, beta * v));
            }
        }
        SparseSymMatrix::from_triplets(self.dim(), &triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::l2_norm;

    fn zero_fn() -> SpaceTimeFn<f64> {
        Arc::new(|_, _| 0.0)
    }

    fn step_b0(
        mesh: &Arc<Mesh<f64>>,
        u_prev: &FeFunction<f64>,
        source: Option<&SpaceTimeFn<f64>>,
        k: f64,
        eps: f64,
        boundary: &SpaceTimeFn<f64>,
    ) -> StepOutput<f64> {
        let field = VelocityField::still(mesh.dim());
        elm_step(&StepInput {
            mesh,
            u_prev,
            field: &field,
            source,
            boundary,
            t_n: 0.5,
            k_n: k,
            epsilon: eps,
        })
        .unwrap()
    }

    /// Dense Gaussian elimination with partial pivoting; independent oracle
    /// for small systems.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let mut s = b[r];
            for c in r + 1..n {
                s -= a[r][c] * x[c];
            }
            x[r] = s / a[r][r];
        }
        x
    }

    fn to_dense(m: &SparseSymMatrix<f64>) -> Vec<Vec<f64>> {
        let n = m.dim();
        let mut d = vec![vec![0.0; n]; n];
        for r in 0..n {
            for (c, v) in m.row(r) {
                d[r][c] += v;
            }
        }
        d
    }

    #[test]
    fn zero_input_gives_zero_step() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 8));
        let u0 = FeFunction::zero(mesh.clone());
        let out = step_b0(&mesh, &u0, None, 0.1, 1.0, &zero_fn());
        assert!(out.u_new.coeffs().iter().all(|&c| c.abs() <= 1e-14));
        assert!(out.linear_residual <= 1e-10);
    }

    #[test]
    fn heat_step_damps_generalized_eigenvector() {
        // On a uniform 1D mesh the discrete sine vectors are eigenvectors of
        // both M and A, so A v = lambda M v with an analytic lambda; a b=0
        // step must scale the eigenvector by 1/(1 + k lambda).
        let n = 16;
        let eps = 0.8;
        let k = 0.05;
        let h = 1.0 / n as f64;
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, n));
        let j = 3.0;
        let u0 = FeFunction::interpolate(mesh.clone(), |p| (j * std::f64::consts::PI * p[0]).sin());
        let theta = j * std::f64::consts::PI * h;
        let lambda_a = 2.0 * eps / h * (1.0 - theta.cos());
        let lambda_m = h / 3.0 * (2.0 + theta.cos());
        let lambda = lambda_a / lambda_m;
        let out = step_b0(&mesh, &u0, None, k, eps, &zero_fn());
        let factor = 1.0 / (1.0 + k * lambda);
        for v in 0..mesh.n_vertices() {
            let want = factor * u0.coeffs()[v];
            assert!(
                (out.u_new.coeffs()[v] - want).abs() <= 1e-8,
                "vertex {v}: {} vs {want}",
                out.u_new.coeffs()[v]
            );
        }
    }

    #[test]
    fn stationary_solution_is_a_fixed_point() {
        // u solving A u = M f_h (dense oracle) is unchanged by a b=0 step.
        let n = 12;
        let eps = 0.6;
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, n));
        let source: SpaceTimeFn<f64> = Arc::new(|p, _| 1.0 + p[0]);
        let f_h = FeFunction::interpolate(mesh.clone(), |p| 1.0 + p[0]);
        let mass = assemble_mass(&mesh);
        let mut stiff = assemble_stiffness(&mesh, eps).unwrap();
        let mut rhs = vec![0.0; mesh.n_vertices()];
        mass.matvec(f_h.coeffs(), &mut rhs);
        let mut constrained = vec![None; mesh.n_vertices()];
        for v in mesh.boundary_vertices() {
            constrained[v] = Some(0.0);
        }
        stiff.apply_dirichlet(&mut rhs, &constrained);
        let u_prev = FeFunction::new(mesh.clone(), dense_solve(to_dense(&stiff), rhs));

        let out = step_b0(&mesh, &u_prev, Some(&source), 0.25, eps, &zero_fn());
        for v in 0..mesh.n_vertices() {
            assert!((out.u_new.coeffs()[v] - u_prev.coeffs()[v]).abs() <= 1e-8);
        }
    }

    #[test]
    fn transport_identity_without_velocity() {
        let mesh = Arc::new(Mesh::<f64>::rectangle(3, 3, [0.0, 0.0], [1.0, 1.0]));
        let u = FeFunction::interpolate(mesh.clone(), |p| (p[0] - 0.3) * p[1]);
        let out = step_b0(&mesh, &u, None, 0.1, 1.0, &zero_fn());
        for v in 0..mesh.n_vertices() {
            assert!((out.u_transported.coeffs()[v] - u.coeffs()[v]).abs() <= 1e-13);
        }
    }

    #[test]
    fn transport_reproduces_linear_data_exactly() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 10));
        let u = FeFunction::interpolate(mesh.clone(), |p| 2.0 - 0.7 * p[0]);
        let field = VelocityField::constant(1, [0.35, 0.0, 0.0]);
        let points: Vec<[f64; 3]> = mesh.vertices().iter().map(|p| [p[0], 0.0, 0.0]).collect();
        let opts = TraceOptions {
            clamp_box: Some(mesh.bbox()),
            ..TraceOptions::default()
        };
        let trace = trace_feet(&field, &points, 1.0, 0.037, &opts).unwrap();
        let t = transport(&u, &mesh, &trace).unwrap();
        for (v, &c) in t.coeffs().iter().enumerate() {
            let foot = trace.feet[v][0];
            assert!((c - (2.0 - 0.7 * foot)).abs() <= 1e-12);
        }
    }

    #[test]
    fn transport_shifts_indices_when_feet_land_on_vertices() {
        let n = 10;
        let h = 1.0 / n as f64;
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, n));
        let coeffs: Vec<f64> = (0..=n).map(|i| (i as f64).sin()).collect();
        let u = FeFunction::new(mesh.clone(), coeffs.clone());
        let field = VelocityField::constant(1, [1.0, 0.0, 0.0]);
        let points: Vec<[f64; 3]> = mesh.vertices().iter().map(|p| [p[0], 0.0, 0.0]).collect();
        let opts = TraceOptions {
            clamp_box: Some(mesh.bbox()),
            ..TraceOptions::default()
        };
        let trace = trace_feet(&field, &points, 1.0, h, &opts).unwrap();
        let t = transport(&u, &mesh, &trace).unwrap();
        for v in 1..=n {
            assert!((t.coeffs()[v] - coeffs[v - 1]).abs() <= 1e-12, "vertex {v}");
        }
    }

    #[test]
    fn discrete_energy_inequality_holds_for_source_free_steps() {
        // ||d||^2 + (phi(U^n) - phi(U~))/k <= 0 up to solver slack.
        let mesh = Arc::new(Mesh::interval(-1.0, 2.0, 64));
        let field = VelocityField::constant(1, [1.0, 0.0, 0.0]);
        let boundary = zero_fn();
        let eps = 0.01;
        let k = 0.05;
        let mut u = FeFunction::interpolate(mesh.clone(), |p: [f64; 2]| (-(p[0] / 0.2).powi(2)).exp());
        let mut t = 0.0;
        for _ in 0..6 {
            t += k;
            let out = elm_step(&StepInput {
                mesh: &mesh,
                u_prev: &u,
                field: &field,
                source: None,
                boundary: &boundary,
                t_n: t,
                k_n: k,
                epsilon: eps,
            })
            .unwrap();
            let d: Vec<f64> = out
                .u_new
                .coeffs()
                .iter()
                .zip(out.u_transported.coeffs())
                .map(|(a, b)| (a - b) / k)
                .collect();
            let dfun = FeFunction::new(mesh.clone(), d);
            let d_norm2 = l2_norm(&dfun).powi(2);
            let phi_new = crate::fem::dirichlet_energy(&out.u_new, eps);
            let phi_tilde = crate::fem::dirichlet_energy(&out.u_transported, eps);
            let lhs = d_norm2 + (phi_new - phi_tilde) / k;
            let scale = d_norm2 + ((phi_new - phi_tilde) / k).abs();
            assert!(lhs <= 1e-10 * scale.max(1.0), "lhs = {lhs:e}");
            u = out.u_new;
        }
    }

    #[test]
    fn maximum_principle_smoke_test() {
        // Consistent-mass backward Euler only respects the maximum principle
        // for k * eps not too small against h^2/6; stay in that regime.
        let mesh = Arc::new(Mesh::<f64>::rectangle(16, 16, [0.0, 0.0], [1.0, 1.0]));
        let field = VelocityField::rotation();
        let bump = |p: [f64; 2]| {
            0.25 + 0.75 * (-(((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)) / 0.08)).exp()
        };
        let boundary: SpaceTimeFn<f64> = Arc::new(move |p, _| bump(p));
        let u = FeFunction::interpolate(mesh.clone(), bump);
        let out = elm_step(&StepInput {
            mesh: &mesh,
            u_prev: &u,
            field: &field,
            source: None,
            boundary: &boundary,
            t_n: 0.2,
            k_n: 0.2,
            epsilon: 0.05,
        })
        .unwrap();
        let lo = u.coeffs().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = u.coeffs().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for &c in out.u_new.coeffs() {
            assert!(c >= lo - 1e-8 && c <= hi + 1e-8, "value {c} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn full_step_works_in_f32() {
        let mesh = Arc::new(Mesh::<f32>::interval(0.0, 1.0, 16));
        let u = FeFunction::interpolate(mesh.clone(), |p: [f32; 2]| {
            (-((p[0] - 0.5) / 0.2).powi(2)).exp()
        });
        let field = VelocityField::constant(1, [0.3, 0.0, 0.0]);
        let boundary: SpaceTimeFn<f32> = Arc::new(|_, _| 0.0);
        let out = elm_step(&StepInput {
            mesh: &mesh,
            u_prev: &u,
            field: &field,
            source: None,
            boundary: &boundary,
            t_n: 0.05,
            k_n: 0.05,
            epsilon: 0.01,
        })
        .unwrap();
        assert!(out.u_new.coeffs().iter().all(|c| c.is_finite()));
        assert!(out.linear_residual <= 1e-5);
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 4));
        let u = FeFunction::zero(mesh.clone());
        let field = VelocityField::still(1);
        let boundary = zero_fn();
        let err = elm_step(&StepInput {
            mesh: &mesh,
            u_prev: &u,
            field: &field,
            source: None,
            boundary: &boundary,
            t_n: 0.1,
            k_n: 0.1,
            epsilon: 0.0,
        });
        assert!(matches!(err, Err(Error::NonPositiveEpsilon { .. })));
    }
}

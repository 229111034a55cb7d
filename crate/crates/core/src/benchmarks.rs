//! Exact-solution benchmark problems and the convergence-study driver.
//!
//! The moving-front solutions are evaluated through `erfcx` so that the
//! `exp(b x / eps) * erfc(...)` products never overflow: with
//! `z = (x + b t) / (2 sqrt(eps t))` the identity
//! `exp(bx/eps) * erfc(z) = erfcx(z) * exp(-(x - b t)^2 / (4 eps t))`
//! holds for any `b`, and the surviving exponent is always <= 0.

use std::sync::Arc;

use crate::adaptivity::{run, AdaptMode, Tolerances};
use crate::characteristics::VelocityField;
use crate::elm::SpaceTimeFn;
use crate::error::Result;
use crate::fem::l2_norm_quadrature;
use crate::mesh::Mesh;
use crate::scalar::{real, Real};
use crate::special::{erfc, erfcx};

pub type PointFn<S> = Arc<dyn Fn([S; 2]) -> S + Send + Sync>;

/// A convection-diffusion problem with known exact solution.
pub struct BenchmarkProblem<S> {
    pub name: String,
    pub dim: usize,
    /// Axis-aligned domain box (lo, hi).
    pub domain: ([S; 2], [S; 2]),
    pub epsilon: S,
    pub velocity: VelocityField<S>,
    pub initial: PointFn<S>,
    /// Exact solution u(x, t); `exact(x, 0)` equals the initial data.
    pub exact: Option<SpaceTimeFn<S>>,
    /// Dirichlet boundary data, imposed from the exact formula.
    pub boundary: SpaceTimeFn<S>,
    /// `None` is the designated zero source.
    pub source: Option<SpaceTimeFn<S>>,
}

impl<S: Real> BenchmarkProblem<S> {
    /// Structured initial mesh with `resolution` subdivisions per direction.
    pub fn initial_mesh(&self, resolution: usize) -> Mesh<S> {
        let (lo, hi) = self.domain;
        if self.dim == 1 {
            Mesh::interval(lo[0], hi[0], resolution)
        } else {
            Mesh::rectangle(resolution, resolution, lo, hi)
        }
    }

    pub fn exact_at(&self, p: [S; 2], t: S) -> Option<S> {
        self.exact.as_ref().map(|e| e(p, t))
    }
}

impl<S: Real> std::fmt::Debug for BenchmarkProblem<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BenchmarkProblem({})", self.name)
    }
}

/// Constructs a benchmark by name with its published parameters.
pub fn by_name<S: Real>(name: &str, epsilon: S) -> Option<BenchmarkProblem<S>> {
    match name {
        "peak_1d" => Some(peak_1d(real(0.1), epsilon, S::one(), S::zero())),
        "shock_1d" => Some(shock_1d(epsilon, S::one())),
        "cone_2d" => Some(cone_2d(epsilon)),
        "shock1_2d" => Some(shock1_2d(epsilon)),
        "shock2_2d" => Some(shock2_2d(epsilon)),
        "heat_1d" => Some(heat_1d(epsilon)),
        _ => None,
    }
}

/// Travelling Gaussian peak on [-1, 2]:
/// u = lambda/sqrt(lambda^2 + 2 eps t) * exp(-(x - x0 - b t)^2 / (2 (lambda^2 + 2 eps t))).
pub fn peak_1d<S: Real>(lambda: S, epsilon: S, b: S, x0: S) -> BenchmarkProblem<S> {
    assert!(lambda > S::zero() && epsilon > S::zero());
    let formula = move |x: S, t: S| -> S {
        let var = lambda * lambda + real::<S>(2.0) * epsilon * t;
        let dx = x - x0 - b * t;
        lambda / var.sqrt() * (-(dx * dx) / (real::<S>(2.0) * var)).exp()
    };
    let exact: SpaceTimeFn<S> = Arc::new(move |p, t| formula(p[0], t));
    let boundary = exact.clone();
    BenchmarkProblem {
        name: "peak_1d".into(),
        dim: 1,
        domain: ([-S::one(), S::zero()], [real(2.0), S::zero()]),
        epsilon,
        velocity: VelocityField::constant(1, [b, S::zero(), S::zero()]),
        initial: Arc::new(move |p| formula(p[0], S::zero())),
        exact: Some(exact),
        boundary,
        source: None,
    }
}

/// Stabilized second term of the moving-front solution:
/// exp(b x / eps) * erfc((x + b t)/(2 sqrt(eps t))).
fn front_second_term<S: Real>(x: S, t: S, b: S, epsilon: S) -> S {
    let root = (epsilon * t).sqrt() * real(2.0);
    let z = (x + b * t) / root;
    let expo = -((x - b * t) * (x - b * t)) / (real::<S>(4.0) * epsilon * t);
    erfcx(z) * expo.exp()
}

fn front_factor<S: Real>(x: S, t: S, b: S, epsilon: S) -> S {
    let root = (epsilon * t).sqrt() * real(2.0);
    erfc((x - b * t) / root) + front_second_term(x, t, b, epsilon)
}

/// Moving front on [0, 2] with u(0) = 1, u(2) = 0:
/// u = (1/2) [ erfc((x - bt)/(2 sqrt(eps t))) + exp(bx/eps) erfc((x + bt)/(2 sqrt(eps t))) ].
pub fn shock_1d<S: Real>(epsilon: S, b: S) -> BenchmarkProblem<S> {
    assert!(epsilon > S::zero());
    let half = real::<S>(0.5);
    let step = move |x: S| if x <= S::zero() { S::one() } else { S::zero() };
    let exact: SpaceTimeFn<S> = Arc::new(move |p, t| {
        if t <= S::zero() {
            step(p[0])
        } else {
            half * front_factor(p[0], t, b, epsilon)
        }
    });
    let boundary = exact.clone();
    BenchmarkProblem {
        name: "shock_1d".into(),
        dim: 1,
        domain: ([S::zero(), S::zero()], [real(2.0), S::zero()]),
        epsilon,
        velocity: VelocityField::constant(1, [b, S::zero(), S::zero()]),
        initial: Arc::new(move |p| step(p[0])),
        exact: Some(exact),
        boundary,
        source: None,
    }
}

/// Rotating Gaussian cone, velocity b = (y, -x), lambda = 1/8, centered at
/// (-1/2, 0). The cone circles the origin, so the domain is [-1, 1]^2.
pub fn cone_2d<S: Real>(epsilon: S) -> BenchmarkProblem<S> {
    assert!(epsilon > S::zero());
    let lambda = real::<S>(0.125);
    let (x0, y0) = (real::<S>(-0.5), S::zero());
    let formula = move |p: [S; 2], t: S| -> S {
        let (s, c) = (t.sin(), t.cos());
        let xh = p[0] - x0 * c - y0 * s;
        let yh = p[1] + x0 * s - y0 * c;
        let l2 = lambda * lambda;
        let denom = real::<S>(2.0) * l2 + real::<S>(4.0) * epsilon * t;
        l2 / (l2 + real::<S>(2.0) * epsilon * t) * (-(xh * xh + yh * yh) / denom).exp()
    };
    let exact: SpaceTimeFn<S> = Arc::new(formula);
    let boundary = exact.clone();
    BenchmarkProblem {
        name: "cone_2d".into(),
        dim: 2,
        domain: ([-S::one(), -S::one()], [S::one(), S::one()]),
        epsilon,
        velocity: VelocityField::rotation(),
        initial: Arc::new(move |p| formula(p, S::zero())),
        exact: Some(exact),
        boundary,
        source: None,
    }
}

/// 2D front moving in x, velocity (1, 0), domain [0, 1]^2.
pub fn shock1_2d<S: Real>(epsilon: S) -> BenchmarkProblem<S> {
    assert!(epsilon > S::zero());
    let half = real::<S>(0.5);
    let cut = real::<S>(0.2);
    let exact: SpaceTimeFn<S> = Arc::new(move |p, t| {
        if t <= S::zero() {
            if p[0] < cut {
                S::one()
            } else {
                S::zero()
            }
        } else {
            half * front_factor(p[0], t, S::one(), epsilon)
        }
    });
    let boundary = exact.clone();
    let exact_init = exact.clone();
    BenchmarkProblem {
        name: "shock1_2d".into(),
        dim: 2,
        domain: ([S::zero(), S::zero()], [S::one(), S::one()]),
        epsilon,
        velocity: VelocityField::constant(2, [S::one(), S::zero(), S::zero()]),
        initial: Arc::new(move |p| exact_init(p, S::zero())),
        exact: Some(exact),
        boundary,
        source: None,
    }
}

/// 2D front moving diagonally, velocity (1, 1), domain [0, 1]^2; the exact
/// solution is the product of two 1D front factors scaled by 1/4.
pub fn shock2_2d<S: Real>(epsilon: S) -> BenchmarkProblem<S> {
    assert!(epsilon > S::zero());
    let quarter = real::<S>(0.25);
    let cut = real::<S>(0.2);
    let exact: SpaceTimeFn<S> = Arc::new(move |p, t| {
        if t <= S::zero() {
            if p[0] < cut && p[1] < cut {
                S::one()
            } else {
                S::zero()
            }
        } else {
            quarter * front_factor(p[0], t, S::one(), epsilon) * front_factor(p[1], t, S::one(), epsilon)
        }
    });
    let boundary = exact.clone();
    let exact_init = exact.clone();
    BenchmarkProblem {
        name: "shock2_2d".into(),
        dim: 2,
        domain: ([S::zero(), S::zero()], [S::one(), S::one()]),
        epsilon,
        velocity: VelocityField::constant(2, [S::one(), S::one(), S::zero()]),
        initial: Arc::new(move |p| exact_init(p, S::zero())),
        exact: Some(exact),
        boundary,
        source: None,
    }
}

/// Pure-diffusion mode on [0, 1]: u0 = sin(pi x), u = exp(-pi^2 eps t) sin(pi x).
pub fn heat_1d<S: Real>(epsilon: S) -> BenchmarkProblem<S> {
    assert!(epsilon > S::zero());
    let pi = real::<S>(std::f64::consts::PI);
    let exact: SpaceTimeFn<S> = Arc::new(move |p, t| {
        (-pi * pi * epsilon * t).exp() * (pi * p[0]).sin()
    });
    let boundary: SpaceTimeFn<S> = Arc::new(|_, _| S::zero());
    BenchmarkProblem {
        name: "heat_1d".into(),
        dim: 1,
        domain: ([S::zero(), S::zero()], [S::one(), S::zero()]),
        epsilon,
        velocity: VelocityField::still(1),
        initial: Arc::new(move |p| (pi * p[0]).sin()),
        exact: Some(exact),
        boundary,
        source: None,
    }
}

/// One row of a temporal convergence study.
#[derive(Debug, Clone)]
pub struct StudyRow<S> {
    pub k: S,
    /// max over accepted steps of ||u(t_n) - U^n||.
    pub error: S,
    /// Observed order against the previous row.
    pub order: Option<S>,
    /// A priori bound (1/4) k^2 ||F(u0)||^2 on the squared error.
    pub bound_error_sq: S,
}

#[derive(Debug, Clone)]
pub struct StudyResult<S> {
    pub rows: Vec<StudyRow<S>>,
    /// ||F(u0)|| = eps ||lap u0||, by fine quadrature of an FD Laplacian.
    pub f_u0_norm: S,
    /// Max-in-time error at the largest k on the given and once-refined mesh.
    pub spatial_check: (S, S),
    /// Spatial error estimate <= 10% of the temporal error at the largest k.
    pub spatial_ok: bool,
}

/// Runs uniform-step ELM for each `k` on a fixed mesh and reports
/// max-in-time L2 errors, observed orders, and the a priori bound.
pub fn convergence_study<S: Real>(
    problem: &BenchmarkProblem<S>,
    ks: &[S],
    resolution: usize,
    t_final: S,
) -> Result<StudyResult<S>> {
    assert!(problem.exact.is_some(), "study needs an exact solution");
    let f_u0_norm = f_of_initial_norm(problem, resolution * 2);

    let max_err = |res: usize, k: S| -> Result<S> {
        let mesh = Arc::new(problem.initial_mesh(res));
        let tol = Tolerances::uniform(t_final, k);
        let state = run(problem, mesh, &tol, AdaptMode::Uniform)?;
        let worst = state
            .history
            .iter()
            .filter_map(|r| r.l2_error)
            .fold(S::zero(), |a, e| a.max(e));
        Ok(worst)
    };

    let mut rows: Vec<StudyRow<S>> = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let error = max_err(resolution, k)?;
        let order = if i > 0 {
            let prev = &rows[i - 1];
            Some((prev.error / error).ln() / (prev.k / k).ln())
        } else {
            None
        };
        let bound = f_u0_norm * f_u0_norm * k * k / real(4.0);
        rows.push(StudyRow {
            k,
            error,
            order,
            bound_error_sq: bound,
        });
    }

    // One extra refinement at the largest k to check the spatial error is
    // subordinate.
    let k_big = ks[0];
    let e_h = rows[0].error;
    let e_h2 = max_err(resolution * 2, k_big)?;
    let spatial_est = (e_h - e_h2).abs();
    Ok(StudyResult {
        rows,
        f_u0_norm,
        spatial_check: (e_h, e_h2),
        spatial_ok: spatial_est <= real::<S>(0.1) * e_h,
    })
}

/// ||F(u0)|| = eps * ||lap u0||_{L2}, with the Laplacian taken by second
/// central differences (step 1e-4 of the domain diameter).
pub fn f_of_initial_norm<S: Real>(problem: &BenchmarkProblem<S>, resolution: usize) -> S {
    let mesh = problem.initial_mesh(resolution);
    let h = real::<S>(1e-4) * mesh.domain_diameter();
    let u0 = &problem.initial;
    let lap = |p: [S; 2]| -> S {
        let c = u0(p);
        let mut acc = S::zero();
        for d in 0..problem.dim {
            let mut pp = p;
            let mut pm = p;
            pp[d] += h;
            pm[d] -= h;
            acc += (u0(pp) - real::<S>(2.0) * c + u0(pm)) / (h * h);
        }
        acc
    };
    problem.epsilon * l2_norm_quadrature(lap, &mesh)
}

//! Backward tracing of characteristic feet for divergence-free velocity
//! fields.
//!
//! The core scheme is the implicit mid-point rule with a second-order time
//! extrapolation of the velocity: tracing from `t` back to `s = t - k`, the
//! foot `y` of a head `x` solves
//!
//! ```text
//!     (x - y) / k = (3/2) b((x+y)/2, s) - (1/2) b((x+y)/2, s - k).
//! ```
//!
//! Differentiating in `x` shows the one-step flow Jacobian is the Cayley
//! transform of (k/2) * grad(b~) at the mid-point, so in 2D the map has unit
//! determinant for any divergence-free field. In 3D that argument breaks,
//! and [`weyl`] supplies the volume-preserving planar splitting.

pub mod weyl;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

pub(crate) type Vec3<S> = [S; 3];

type EvalFn<S> = dyn Fn(Vec3<S>, S) -> Vec3<S> + Send + Sync;
type GradFn<S> = dyn Fn(Vec3<S>, S) -> [[S; 3]; 3] + Send + Sync;

/// Time-dependent velocity field `b(x, t)` with an optional analytic spatial
/// Jacobian. Vectors are padded to three components; `dim` says how many are
/// meaningful.
pub struct VelocityField<S> {
    dim: usize,
    eval: Arc<EvalFn<S>>,
    gradient: Option<Arc<GradFn<S>>>,
    divergence_free: bool,
}

impl<S: Real> Clone for VelocityField<S> {
    fn clone(&self) -> Self {
        VelocityField {
            dim: self.dim,
            eval: self.eval.clone(),
            gradient: self.gradient.clone(),
            divergence_free: self.divergence_free,
        }
    }
}

impl<S: Real> VelocityField<S> {
    pub fn new(
        dim: usize,
        eval: impl Fn(Vec3<S>, S) -> Vec3<S> + Send + Sync + 'static,
    ) -> Self {
        assert!((1..=3).contains(&dim));
        VelocityField {
            dim,
            eval: Arc::new(eval),
            gradient: None,
            divergence_free: true,
        }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(Vec3<S>, S) -> [[S; 3]; 3] + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn with_divergence_free(mut self, flag: bool) -> Self {
        self.divergence_free = flag;
        self
    }

    /// The zero field.
    pub fn still(dim: usize) -> Self {
        VelocityField::new(dim, |_, _| [S::zero(); 3])
    }

    /// Constant-in-space-and-time field.
    pub fn constant(dim: usize, v: Vec3<S>) -> Self {
        VelocityField::new(dim, move |_, _| v).with_gradient(|_, _| [[S::zero(); 3]; 3])
    }

    /// Rigid rotation b = (y, -x) in 2D.
    pub fn rotation() -> Self {
        VelocityField::new(2, |p: Vec3<S>, _| [p[1], -p[0], S::zero()]).with_gradient(|_, _| {
            let mut g = [[S::zero(); 3]; 3];
            g[0][1] = S::one();
            g[1][0] = -S::one();
            g
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    #[inline]
    pub fn eval(&self, x: Vec3<S>, t: S) -> Vec3<S> {
        (self.eval)(x, t)
    }

    /// Spatial Jacobian, analytic if supplied, otherwise central finite
    /// differences with step `1e-6 * max(1, |x|)`.
    pub fn grad(&self, x: Vec3<S>, t: S, allow_fd: bool) -> Result<[[S; 3]; 3]> {
        if let Some(g) = &self.gradient {
            return Ok(g(x, t));
        }
        if !allow_fd {
            return Err(Error::GradientUnavailable);
        }
        let h = real::<S>(1e-6) * S::one().max(norm3(x));
        let mut jac = [[S::zero(); 3]; 3];
        for j in 0..self.dim {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fp = self.eval(xp, t);
            let fm = self.eval(xm, t);
            for i in 0..self.dim {
                jac[i][j] = (fp[i] - fm[i]) / (real::<S>(2.0) * h);
            }
        }
        Ok(jac)
    }

    /// Largest |div b| over the sample points; a cheap diagnostic for the
    /// divergence-free flag.
    pub fn max_divergence(&self, samples: &[Vec3<S>], t: S) -> Result<S> {
        let mut worst = S::zero();
        for &x in samples {
            let g = self.grad(x, t, true)?;
            let div = (0..self.dim).map(|i| g[i][i]).fold(S::zero(), |a, v| a + v);
            worst = worst.max(div.abs());
        }
        Ok(worst)
    }
}

impl<S: Real> std::fmt::Debug for VelocityField<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "VelocityField({}D)", self.dim)
    }
}

/// Knobs for the implicit trace; the defaults are the production values.
#[derive(Debug, Clone)]
pub struct TraceOptions<S> {
    /// Relative fixed-point tolerance (scaled by max(1, |x|)).
    pub tolerance: S,
    pub max_iterations: usize,
    /// Axis-aligned box feet are clamped into, if any.
    pub clamp_box: Option<([S; 2], [S; 2])>,
    /// Earliest time the field history may be evaluated at. When the
    /// extrapolation would reach before it, the step falls back to
    /// b(., s) for both time levels (first-order for that step).
    pub history_floor: Option<S>,
}

impl<S: Real> Default for TraceOptions<S> {
    fn default() -> Self {
        TraceOptions {
            tolerance: real(1e-12),
            max_iterations: 50,
            clamp_box: None,
            history_floor: None,
        }
    }
}

/// Feet traced backward over one step, with iteration diagnostics.
#[derive(Debug, Clone)]
pub struct TraceResult<S> {
    pub feet: Vec<Vec3<S>>,
    pub iterations: Vec<usize>,
    /// Feet projected back into the clamp box.
    pub clamped_count: usize,
}

impl<S: Real> TraceResult<S> {
    pub fn mean_iterations(&self) -> f64 {
        if self.iterations.is_empty() {
            0.0
        } else {
            self.iterations.iter().sum::<usize>() as f64 / self.iterations.len() as f64
        }
    }
}

/// Traces every point backward from `t` to `t - k` with the extrapolated
/// mid-point scheme.
pub fn trace_feet<S: Real>(
    field: &VelocityField<S>,
    points: &[Vec3<S>],
    t: S,
    k: S,
    opts: &TraceOptions<S>,
) -> Result<TraceResult<S>> {
    assert!(k > S::zero(), "step size must be positive");
    let mut feet = Vec::with_capacity(points.len());
    let mut iterations = Vec::with_capacity(points.len());
    let mut clamped_count = 0;
    let moving = match field.dim() {
        1 => vec![0],
        2 => vec![0, 1],
        _ => vec![0, 1, 2],
    };
    for &x in points {
        let (mut y, iters) = midpoint_step(field, x, t, k, &moving, opts)?;
        if let Some((lo, hi)) = opts.clamp_box {
            let mut clamped = false;
            for d in 0..field.dim().min(2) {
                let c = y[d].max(lo[d]).min(hi[d]);
                if c != y[d] {
                    clamped = true;
                    y[d] = c;
                }
            }
            if clamped {
                clamped_count += 1;
            }
        }
        feet.push(y);
        iterations.push(iters);
    }
    Ok(TraceResult {
        feet,
        iterations,
        clamped_count,
    })
}

/// One implicit mid-point step from `t` back to `t - k`, moving only the
/// listed coordinates. Solved by damped fixed-point iteration; the damping
/// halves whenever the residual grows.
pub(crate) fn midpoint_step<S: Real>(
    field: &VelocityField<S>,
    x: Vec3<S>,
    t: S,
    k: S,
    moving: &[usize],
    opts: &TraceOptions<S>,
) -> Result<(Vec3<S>, usize)> {
    let s = t - k;
    let s_hist = match opts.history_floor {
        Some(floor) if s - k < floor => s,
        _ => s - k,
    };
    let scale = S::one().max(norm3(x));
    let tol = (opts.tolerance * scale).max(real::<S>(4.0) * S::epsilon() * scale);

    let half = real::<S>(0.5);
    let c1 = real::<S>(1.5);
    let velocity = |y: Vec3<S>| -> Vec3<S> {
        let mut mid = x;
        for &d in moving {
            mid[d] = (x[d] + y[d]) * half;
        }
        let b1 = field.eval(mid, s);
        let b0 = field.eval(mid, s_hist);
        let mut v = [S::zero(); 3];
        for &d in moving {
            v[d] = c1 * b1[d] - half * b0[d];
        }
        v
    };

    let mut y = x;
    let mut damping = S::one();
    let mut prev_delta = S::infinity();
    for it in 1..=opts.max_iterations {
        let v = velocity(y);
        let mut delta = S::zero();
        let mut y_next = y;
        for &d in moving {
            let target = x[d] - k * v[d];
            let step = target - y[d];
            y_next[d] = y[d] + damping * step;
            delta = delta.max(step.abs());
        }
        y = y_next;
        if delta <= tol {
            return Ok((y, it));
        }
        if delta > prev_delta {
            damping = (damping * half).max(real(0.125));
        }
        prev_delta = delta;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual: prev_delta.to_f64().unwrap_or(f64::NAN),
    })
}

/// Central-difference determinant of the one-step flow map `x -> y` with
/// stencil spacing `1e-6 * max(1, |x|)`. The stencil traces run to machine
/// precision so the differencing noise stays at the 1e-10 level.
pub fn flow_jacobian_det<S: Real>(
    field: &VelocityField<S>,
    x: Vec3<S>,
    t: S,
    k: S,
    opts: &TraceOptions<S>,
) -> Result<S> {
    let mut tight = opts.clone();
    tight.tolerance = S::zero(); // floor at 4*eps inside midpoint_step
    tight.clamp_box = None;
    let trace1 = |p: Vec3<S>| -> Result<Vec3<S>> {
        let moving: Vec<usize> = (0..field.dim()).collect();
        Ok(midpoint_step(field, p, t, k, &moving, &tight)?.0)
    };
    jacobian_det_of(field.dim(), x, trace1)
}

/// Central-difference Jacobian determinant of an arbitrary point map
/// (stencil spacing `1e-6 * max(1, |x|)`).
pub fn jacobian_det_of<S: Real>(
    dim: usize,
    x: Vec3<S>,
    map: impl Fn(Vec3<S>) -> Result<Vec3<S>>,
) -> Result<S> {
    let h = real::<S>(1e-6) * S::one().max(norm3(x));
    let mut jac = [[S::zero(); 3]; 3];
    for j in 0..dim {
        let mut xp = x;
        let mut xm = x;
        xp[j] += h;
        xm[j] -= h;
        let yp = map(xp)?;
        let ym = map(xm)?;
        for i in 0..dim {
            jac[i][j] = (yp[i] - ym[i]) / (real::<S>(2.0) * h);
        }
    }
    Ok(det(dim, &jac))
}

pub(crate) fn det<S: Real>(dim: usize, m: &[[S; 3]; 3]) -> S {
    match dim {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

pub(crate) fn norm3<S: Real>(x: Vec3<S>) -> S {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

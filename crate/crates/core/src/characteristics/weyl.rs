//! Volume-preserving 3D tracing by planar splitting.
//!
//! A divergence-free 3D field splits into two essentially-2D divergence-free
//! parts anchored at the traced point `x`:
//!
//! ```text
//!     b  = b1 + b2,
//!     b1 = (0,       b_2 - I,  b_3),    I(y) = int_{y2}^{x2} d(b_1)/d(y1) (y1, w, y3) dw,
//!     b2 = (b_1,     I,        0).
//! ```
//!
//! Each part is integrated with the 2D implicit mid-point step in its moving
//! plane (unit Jacobian there), and the composition of volume-preserving maps
//! is volume preserving. The substeps are arranged symmetrically
//! (`b1` half step, `b2` full step, `b1` half step) so the composition stays
//! second-order accurate.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

use super::{midpoint_step, TraceOptions, Vec3, VelocityField};

/// 8-point Gauss-Legendre nodes/weights on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_29),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_361_98),
    (0.183_434_642_495_649_8, 0.362_683_783_378_361_98),
    (0.525_532_409_916_329, 0.313_706_645_877_887_29),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Splits a divergence-free 3D field into the two planar parts anchored at
/// `anchor`. `b1` has zero first component, `b2` zero third component, and
/// `b1 + b2 = b` pointwise up to quadrature error in the line integral.
pub fn decompose_weyl<S: Real>(
    field: &VelocityField<S>,
    anchor: Vec3<S>,
    allow_fd_gradient: bool,
) -> Result<(VelocityField<S>, VelocityField<S>)> {
    assert_eq!(field.dim(), 3, "Weyl splitting is a 3D construction");
    if !field.has_gradient() && !allow_fd_gradient {
        return Err(Error::GradientUnavailable);
    }
    let x2 = anchor[1];

    let fa = field.clone();
    let b1 = VelocityField::new(3, move |y: Vec3<S>, s: S| {
        let b = fa.eval(y, s);
        let i = line_integral_db1(&fa, y, x2, s);
        [S::zero(), b[1] - i, b[2]]
    });
    let fb = field.clone();
    let b2 = VelocityField::new(3, move |y: Vec3<S>, s: S| {
        let b = fb.eval(y, s);
        let i = line_integral_db1(&fb, y, x2, s);
        [b[0], i, S::zero()]
    });
    Ok((b1, b2))
}

/// int_{y2}^{x2} d(b_1)/d(y1) (y1, w, y3, s) dw by composite 8-point
/// Gauss-Legendre, one panel per unit length.
fn line_integral_db1<S: Real>(field: &VelocityField<S>, y: Vec3<S>, x2: S, s: S) -> S {
    let a = y[1];
    let b = x2;
    if a == b {
        return S::zero();
    }
    let len = (b - a).abs();
    let panels = len.ceil().to_usize().unwrap_or(1).max(1);
    let pf = real::<S>(panels as f64);
    let mut acc = S::zero();
    for p in 0..panels {
        let lo = a + (b - a) * real::<S>(p as f64) / pf;
        let hi = a + (b - a) * real::<S>((p + 1) as f64) / pf;
        let mid = (lo + hi) / real(2.0);
        let half = (hi - lo) / real(2.0);
        for &(xi, w) in GL8.iter() {
            let wpt = mid + half * real::<S>(xi);
            let g = field
                .grad([y[0], wpt, y[2]], s, true)
                .expect("gradient availability checked at decomposition");
            acc += real::<S>(w) * half * g[0][0];
        }
    }
    acc
}

/// Volume-preserving backward trace over one step of a 3D divergence-free
/// field: symmetric composition of the planar mid-point sub-steps.
pub fn trace_volume_preserving_3d<S: Real>(
    field: &VelocityField<S>,
    x: Vec3<S>,
    t: S,
    k: S,
    opts: &TraceOptions<S>,
    allow_fd_gradient: bool,
) -> Result<Vec3<S>> {
    let (b1, b2) = decompose_weyl(field, x, allow_fd_gradient)?;
    let half = k / real(2.0);
    // b1 moves the (y2, y3) plane, b2 the (y1, y2) plane.
    let p1 = [1usize, 2];
    let p2 = [0usize, 1];
    let (z1, _) = midpoint_step(&b1, x, t, half, &p1, opts)?;
    let (z2, _) = midpoint_step(&b2, z1, t, k, &p2, opts)?;
    let (z3, _) = midpoint_step(&b1, z2, t - half, half, &p1, opts)?;
    Ok(z3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::testutil::rk4_backward;
    use crate::characteristics::{jacobian_det_of, trace_feet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn abc_field(a: f64, b: f64, c: f64) -> VelocityField<f64> {
        VelocityField::new(3, move |p: [f64; 3], _| {
            [
                a * p[2].sin() + c * p[1].cos(),
                b * p[0].sin() + a * p[2].cos(),
                c * p[1].sin() + b * p[0].cos(),
            ]
        })
        .with_gradient(move |p: [f64; 3], _| {
            [
                [0.0, -c * p[1].sin(), a * p[2].cos()],
                [b * p[0].cos(), 0.0, -a * p[2].sin()],
                [-b * p[0].sin(), c * p[1].cos(), 0.0],
            ]
        })
    }

    #[test]
    fn zero_field_decomposes_to_zero() {
        let field = VelocityField::<f64>::still(3);
        let (b1, b2) = decompose_weyl(&field, [0.2, 0.4, 0.6], true).unwrap();
        let v1 = b1.eval([0.1, 0.2, 0.3], 0.0);
        let v2 = b2.eval([0.1, 0.2, 0.3], 0.0);
        assert!(v1.iter().chain(&v2).all(|&v| v == 0.0));
        let y = trace_volume_preserving_3d(&field, [0.2, 0.4, 0.6], 1.0, 0.1, &Default::default(), true)
            .unwrap();
        assert_eq!(y, [0.2, 0.4, 0.6]);
    }

    #[test]
    fn field_without_first_component_goes_entirely_to_b1() {
        // b = (0, f(y3), g(y2)): d(b_1)/d(y1) = 0, so the line integral
        // vanishes and b2 is identically zero.
        let field = VelocityField::new(3, |p: [f64; 3], _| {
            [0.0, (2.0 * p[2]).cos(), (3.0 * p[1]).sin()]
        });
        let (b1, b2) = decompose_weyl(&field, [0.3, 0.7, 0.1], true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let y = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let v = field.eval(y, 0.0);
            let v1 = b1.eval(y, 0.0);
            let v2 = b2.eval(y, 0.0);
            for d in 0..3 {
                assert!((v1[d] + v2[d] - v[d]).abs() <= 1e-10);
                assert!(v2[d].abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn abc_field_reconstruction_and_divergence() {
        let field = abc_field(1.0, 0.7, 0.5);
        let anchor = [0.4, -0.2, 0.9];
        let (b1, b2) = decompose_weyl(&field, anchor, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let y = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let v = field.eval(y, 0.0);
            let v1 = b1.eval(y, 0.0);
            let v2 = b2.eval(y, 0.0);
            for d in 0..3 {
                assert!((v1[d] + v2[d] - v[d]).abs() <= 1e-8, "component {d}");
            }
            assert_eq!(v1[0], 0.0);
            assert_eq!(v2[2], 0.0);
            // Central-difference divergence of each part.
            for (part, name) in [(&b1, "b1"), (&b2, "b2")] {
                let h = 1e-5;
                let mut div = 0.0;
                for d in 0..3 {
                    let mut yp = y;
                    let mut ym = y;
                    yp[d] += h;
                    ym[d] -= h;
                    div += (part.eval(yp, 0.0)[d] - part.eval(ym, 0.0)[d]) / (2.0 * h);
                }
                assert!(div.abs() <= 1e-6, "{name} divergence {div:e}");
            }
        }
    }

    #[test]
    fn constant_field_composed_trace_is_exact() {
        let field = VelocityField::<f64>::constant(3, [0.3, -0.2, 0.5]);
        let x = [0.1, 0.2, 0.3];
        let k = 0.25;
        let y = trace_volume_preserving_3d(&field, x, 1.0, k, &Default::default(), true).unwrap();
        for d in 0..3 {
            let want = x[d] - k * [0.3, -0.2, 0.5][d];
            assert!((y[d] - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn composed_trace_second_order_on_abc_field() {
        let field = abc_field(1.0, 0.7, 0.5);
        let x = [0.3, 0.2, -0.4];
        let horizon = 0.8;
        let reference = rk4_backward(&field, x, horizon, horizon, 1000);
        let endpoint = |k: f64| -> [f64; 3] {
            let n = (horizon / k).round() as usize;
            let mut p = x;
            let mut t = horizon;
            for _ in 0..n {
                p = trace_volume_preserving_3d(&field, p, t, k, &Default::default(), true).unwrap();
                t -= k;
            }
            p
        };
        let err = |k: f64| -> f64 {
            let p = endpoint(k);
            (0..3).map(|d| (p[d] - reference[d]).powi(2)).sum::<f64>().sqrt()
        };
        let e1 = err(0.1);
        let e2 = err(0.05);
        let e3 = err(0.025);
        let s1 = (e1 / e2).log2();
        let s2 = (e2 / e3).log2();
        assert!((s1 - 2.0).abs() <= 0.3, "slope {s1}");
        assert!((s2 - 2.0).abs() <= 0.3, "slope {s2}");
    }

    #[test]
    fn composed_trace_preserves_volume() {
        let field = abc_field(1.0, 0.7, 0.5);
        for k in [0.1, 0.05] {
            let det = jacobian_det_of(3, [0.3, 0.2, -0.4], |p| {
                let mut tight = TraceOptions::<f64>::default();
                tight.tolerance = 0.0;
                trace_volume_preserving_3d(&field, p, 1.0, k, &tight, true)
            })
            .unwrap();
            assert!((det - 1.0).abs() <= 1e-6, "k = {k}, det = {det}");
        }
    }

    #[test]
    fn composed_trace_is_bit_deterministic() {
        let field = abc_field(1.0, 0.7, 0.5);
        let x = [0.3, 0.2, -0.4];
        let a = trace_volume_preserving_3d(&field, x, 1.0, 0.05, &Default::default(), true).unwrap();
        let b = trace_volume_preserving_3d(&field, x, 1.0, 0.05, &Default::default(), true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gradient_unavailable_without_fallback() {
        let field = VelocityField::new(3, |p: [f64; 3], _| [p[1], -p[0], 0.0]);
        assert!(matches!(
            decompose_weyl(&field, [0.0; 3], false),
            Err(Error::GradientUnavailable)
        ));
    }

    #[test]
    fn plain_2d_trace_still_works_on_3d_padded_points() {
        // Guards the moving-coordinate plumbing shared with the splitting.
        let field = VelocityField::<f64>::constant(3, [1.0, 1.0, 1.0]);
        let r = trace_feet(&field, &[[0.5, 0.5, 0.5]], 1.0, 0.1, &Default::default()).unwrap();
        for d in 0..3 {
            assert!((r.feet[0][d] - 0.4).abs() <= 1e-14);
        }
    }
}


//! Logarithmic negativity of the stationary mechanical-optical Gaussian state.
//!
//! The covariance is partitioned as V = [[A, C], [Cᵀ, B]] with the mechanical
//! block A on (q, p) and the optical block B on (X, Y). Vacuum variance is 1/2.

use nalgebra::Matrix4;

use crate::covariance::CovarianceMatrix;
use crate::error::{Error, Result};

/// Relative floor below which a negative discriminant Σ² − 4 det V is
/// treated as rounding and clamped to zero.
pub const DISCRIMINANT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementResult {
    /// Smallest symplectic eigenvalue of the partially transposed state.
    pub nu_min: f64,
    pub log_negativity: f64,
    /// det A + det B − 2 det C.
    pub sigma: f64,
    pub det_mechanical: f64,
    pub det_optical: f64,
    pub det_cross: f64,
    pub det_v: f64,
}

fn det2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    a * d - b * c
}

/// 4×4 determinant by Laplace expansion along the first two rows.
fn det4(m: &Matrix4<f64>) -> f64 {
    let minor = |r0: usize, r1: usize, c0: usize, c1: usize| det2(m[(r0, c0)], m[(r0, c1)], m[(r1, c0)], m[(r1, c1)]);
    minor(0, 1, 0, 1) * minor(2, 3, 2, 3) - minor(0, 1, 0, 2) * minor(2, 3, 1, 3)
        + minor(0, 1, 0, 3) * minor(2, 3, 1, 2)
        + minor(0, 1, 1, 2) * minor(2, 3, 0, 3)
        - minor(0, 1, 1, 3) * minor(2, 3, 0, 2)
        + minor(0, 1, 2, 3) * minor(2, 3, 0, 1)
}

pub fn log_negativity(v: &CovarianceMatrix) -> Result<EntanglementResult> {
    log_negativity_of(&v.matrix)
}

pub fn log_negativity_of(v: &Matrix4<f64>) -> Result<EntanglementResult> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("log_negativity", "covariance has non-finite entries"));
    }
    let det_mechanical = det2(v[(0, 0)], v[(0, 1)], v[(1, 0)], v[(1, 1)]);
    let det_optical = det2(v[(2, 2)], v[(2, 3)], v[(3, 2)], v[(3, 3)]);
    let det_cross = det2(v[(0, 2)], v[(0, 3)], v[(1, 2)], v[(1, 3)]);
    let det_v = det4(v);
    let sigma = det_mechanical + det_optical - 2.0 * det_cross;

    let mut disc = sigma * sigma - 4.0 * det_v;
    if disc < 0.0 {
        if disc < -DISCRIMINANT_FLOOR * sigma * sigma {
            return Err(Error::numerical(
                "log_negativity",
                format!("unphysical covariance: Σ² − 4 det V = {disc:e}"),
            ));
        }
        disc = 0.0;
    }
    if !(det_v > 0.0) {
        return Err(Error::numerical("log_negativity", format!("unphysical covariance: det V = {det_v:e}")));
    }
    // (Σ − √disc)/2 rewritten to avoid cancellation when ν_min is small.
    let denom = sigma + disc.sqrt();
    if !(denom > 0.0) {
        return Err(Error::numerical("log_negativity", format!("unphysical covariance: Σ = {sigma:e}")));
    }
    let nu_min = (2.0 * det_v / denom).sqrt();
    Ok(EntanglementResult {
        nu_min,
        log_negativity: (-(2.0 * nu_min).ln()).max(0.0),
        sigma,
        det_mechanical,
        det_optical,
        det_cross,
        det_v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix2, Vector4};
    use proptest::prelude::*;

    fn two_mode_squeezed(r: f64) -> Matrix4<f64> {
        let c = (2.0 * r).cosh() / 2.0;
        let s = (2.0 * r).sinh() / 2.0;
        Matrix4::new(c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c)
    }

    fn local_rotation(a: f64, b: f64) -> Matrix4<f64> {
        let rot = |t: f64| Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos());
        let mut r = Matrix4::zeros();
        r.fixed_view_mut::<2, 2>(0, 0).copy_from(&rot(a));
        r.fixed_view_mut::<2, 2>(2, 2).copy_from(&rot(b));
        r
    }

    #[test]
    fn determinant_matches_lu() {
        let m = Matrix4::new(2.0, 1.0, 0.5, -1.0, 0.3, 3.0, 1.0, 0.2, -0.7, 0.4, 1.5, 0.9, 1.1, -0.2, 0.6, 2.5);
        assert_relative_eq!(det4(&m), m.determinant(), max_relative = 1e-13);
    }

    #[test]
    fn vacuum_is_separable() {
        let r = log_negativity_of(&(Matrix4::identity() * 0.5)).unwrap();
        assert_eq!(r.sigma, 0.5);
        assert_eq!(r.det_v, 1.0 / 16.0);
        assert_eq!(r.nu_min, 0.5);
        assert_eq!(r.log_negativity, 0.0);
    }

    #[test]
    fn uncorrelated_thermal_state_is_separable() {
        for n in [0.0, 0.3, 5.0, 1e4] {
            let v = Matrix4::from_diagonal(&Vector4::new(n + 0.5, n + 0.5, 0.5, 0.5));
            assert_eq!(log_negativity_of(&v).unwrap().log_negativity, 0.0);
        }
    }

    #[test]
    fn two_mode_squeezed_state() {
        for r in [0.1, 0.5, 1.0, 2.0] {
            let res = log_negativity_of(&two_mode_squeezed(r)).unwrap();
            assert_relative_eq!(res.sigma, (4.0 * r).cosh() / 2.0, max_relative = 1e-12);
            assert_relative_eq!(res.det_v, 1.0 / 16.0, max_relative = 1e-10);
            assert_relative_eq!(res.nu_min, (-2.0 * r).exp() / 2.0, max_relative = 1e-10);
            assert_relative_eq!(res.log_negativity, 2.0 * r, max_relative = 1e-10);
        }
    }

    #[test]
    fn unphysical_input_is_rejected() {
        // Negative determinant.
        assert!(log_negativity_of(&Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, 1.0, 1.0))).is_err());
        assert!(log_negativity_of(&Matrix4::zeros()).is_err());
        let mut v = Matrix4::identity();
        v[(0, 0)] = f64::NAN;
        assert!(log_negativity_of(&v).is_err());
    }

    proptest! {
        #[test]
        fn local_rotations_leave_invariants(r in 0.0f64..1.5, extra in 0.0f64..3.0, a in -3.2f64..3.2, b in -3.2f64..3.2) {
            let v = two_mode_squeezed(r) + Matrix4::from_diagonal(&Vector4::new(extra, extra, 0.2 * extra, 0.0));
            let rot = local_rotation(a, b);
            let w = rot * v * rot.transpose();
            let x = log_negativity_of(&v).unwrap();
            let y = log_negativity_of(&w).unwrap();
            prop_assert!((x.sigma - y.sigma).abs() <= 1e-10 * x.sigma);
            prop_assert!((x.det_v - y.det_v).abs() <= 1e-10 * x.det_v);
            prop_assert!((x.nu_min - y.nu_min).abs() <= 1e-10 * x.nu_min);
            prop_assert!((x.log_negativity - y.log_negativity).abs() <= 1e-10 * x.log_negativity.max(1.0));
        }

        #[test]
        fn small_perturbations_move_negativity_little(r in 0.05f64..1.5, seed in proptest::array::uniform10(-1.0f64..1.0)) {
            let v = two_mode_squeezed(r);
            let mut dv = Matrix4::zeros();
            let mut k = 0;
            for i in 0..4 {
                for j in i..4 {
                    dv[(i, j)] = seed[k];
                    dv[(j, i)] = seed[k];
                    k += 1;
                }
            }
            let dv = dv * (1e-8 / dv.norm().max(f64::MIN_POSITIVE));
            let x = log_negativity_of(&v).unwrap().log_negativity;
            let y = log_negativity_of(&(v + dv)).unwrap().log_negativity;
            prop_assert!((x - y).abs() <= 1e-6);
        }

        #[test]
        fn block_diagonal_states_are_separable(n in 0.0f64..100.0, m in 0.0f64..100.0, sq in 0.0f64..2.0) {
            // Locally squeezed but uncorrelated.
            let v = Matrix4::from_diagonal(&Vector4::new(
                (n + 0.5) * sq.exp(), (n + 0.5) * (-sq).exp(), m + 0.5, m + 0.5));
            prop_assert!(log_negativity_of(&v).unwrap().log_negativity <= 1e-12);
        }
    }
}

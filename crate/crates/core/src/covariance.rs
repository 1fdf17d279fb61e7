//! Stationary covariance matrix from the Lyapunov equation AV + VAᵀ = −D,
//! and the cooling observables derived from it.

use nalgebra::{Matrix4, SMatrix, SVector};

use crate::dynamics;
use crate::error::{Error, Result};
use crate::noise::{phase_noise_spectrum, NoiseModel};
use crate::params::SystemParams;

/// Condition estimate above which a solve carries a warning flag.
pub const CONDITION_WARNING: f64 = 1e12;
/// Relative Frobenius residual above which a solve carries a warning flag.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

type Kron = SMatrix<f64, 16, 16>;

/// Symmetric covariance in ordering (q, p, X, Y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: Matrix4<f64>,
    /// 1-norm condition number of the vectorised Lyapunov operator.
    pub condition: f64,
    /// ‖AV + VAᵀ + D‖_F / ‖D‖_F.
    pub relative_residual: f64,
    pub ill_conditioned: bool,
}

impl CovarianceMatrix {
    /// The 10 independent entries, row by row from the upper triangle.
    pub fn upper_triangle(&self) -> [f64; 10] {
        let m = &self.matrix;
        let mut out = [0.0; 10];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                out[k] = m[(i, j)];
                k += 1;
            }
        }
        out
    }
}

fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

fn lyapunov_residual(a: &Matrix4<f64>, v: &Matrix4<f64>, d: &Matrix4<f64>) -> Matrix4<f64> {
    a * v + v * a.transpose() + d
}

fn relative(r: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

fn kronecker_operator(a: &Matrix4<f64>) -> Kron {
    // vec is column-major: entry (i, j) of V sits at i + 4j.
    let mut k = Kron::zeros();
    for j in 0..4 {
        for i in 0..4 {
            let row = i + 4 * j;
            for l in 0..4 {
                k[(row, l + 4 * j)] += a[(i, l)];
                k[(row, i + 4 * l)] += a[(j, l)];
            }
        }
    }
    k
}

fn one_norm<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

/// Solves AV + VAᵀ = −D through the 16×16 system (I⊗A + A⊗I)·vec V = −vec D.
pub fn solve_lyapunov(a: &Matrix4<f64>, d: &Matrix4<f64>) -> Result<CovarianceMatrix> {
    dynamics::require_stable(a)?;
    let k = kronecker_operator(a);
    let lu = k.lu();
    let rhs = -SVector::<f64, 16>::from_column_slice(d.as_slice());
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::numerical("solve_lyapunov", "singular Kronecker operator"))?;
    let condition = match lu.try_inverse() {
        Some(inv) => one_norm(&k) * one_norm(&inv),
        None => f64::INFINITY,
    };
    let v = symmetrize(&Matrix4::from_column_slice(x.as_slice()));
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("solve_lyapunov", "non-finite covariance"));
    }
    let relative_residual = relative(lyapunov_residual(a, &v, d).norm(), d.norm());
    Ok(CovarianceMatrix {
        matrix: v,
        condition,
        relative_residual,
        ill_conditioned: condition > CONDITION_WARNING || relative_residual > RESIDUAL_TOLERANCE,
    })
}

/// Step and stopping controls for [`integrate_lyapunov_ode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeControl {
    /// RK4 step as a fraction of 1/‖A‖_F.
    pub step_fraction: f64,
    /// Stop when ‖dV/dt‖_F ≤ tolerance · ‖D‖_F.
    pub tolerance: f64,
}

impl Default for OdeControl {
    fn default() -> Self {
        OdeControl {
            step_fraction: 0.1,
            tolerance: 1e-12,
        }
    }
}

/// Verification oracle: integrates dV/dt = AV + VAᵀ + D with classical RK4
/// from `v0` until the derivative vanishes to the requested tolerance.
pub fn integrate_lyapunov_ode(
    a: &Matrix4<f64>,
    d: &Matrix4<f64>,
    v0: &Matrix4<f64>,
    t_final: f64,
    control: OdeControl,
) -> Result<CovarianceMatrix> {
    dynamics::require_stable(a)?;
    let rhs = |v: &Matrix4<f64>| lyapunov_residual(a, v, d);
    let h = control.step_fraction / a.norm();
    let scale = d.norm().max(f64::MIN_POSITIVE);
    let mut v = *v0;
    let mut t = 0.0;
    loop {
        let k1 = rhs(&v);
        let rate = k1.norm();
        if rate <= control.tolerance * scale {
            let v = symmetrize(&v);
            return Ok(CovarianceMatrix {
                matrix: v,
                condition: f64::NAN,
                relative_residual: relative(rhs(&v).norm(), d.norm()),
                ill_conditioned: false,
            });
        }
        if t >= t_final {
            return Err(Error::numerical(
                "integrate_lyapunov_ode",
                format!("not converged at t = {t:e}; ‖dV/dt‖ = {rate:e}"),
            ));
        }
        let k2 = rhs(&(v + k1 * (0.5 * h)));
        let k3 = rhs(&(v + k2 * (0.5 * h)));
        let k4 = rhs(&(v + k3 * h));
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        t += h;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhononNumber {
    /// (V₁₁ + V₂₂ − 1)/2 as computed.
    pub raw: f64,
    /// `raw` clamped at zero.
    pub clamped: f64,
}

pub fn phonon_number(v: &CovarianceMatrix) -> PhononNumber {
    let raw = 0.5 * (v.matrix[(0, 0)] + v.matrix[(1, 1)] - 1.0);
    PhononNumber {
        raw,
        clamped: raw.max(0.0),
    }
}

/// Closed-form cooling limits valid for η ≈ 1, κ ≪ ω_m and Δ = ω_m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhononAsymptotics {
    /// κ²/4ω_m² + N/4κ with the exactly computed N.
    pub exact_noise_limit: f64,
    /// κ²/4ω_m² + N/4κ with N = 2|α_s|²Γ_Lγ_c(γ_c + κ)/(ω_m² + (γ_c + κ)²).
    pub closed_noise_limit: f64,
    /// κ²/4ω_m² + |α_s|² S(ω_m)/2κ.
    pub spectrum_limit: f64,
    /// The closed-form N used in `closed_noise_limit`.
    pub closed_noise: f64,
}

pub fn phonon_asymptotic(params: &SystemParams, photons: f64, nm: &NoiseModel, exact_noise: f64) -> PhononAsymptotics {
    let w = params.mechanical_freq;
    let k = params.cavity_decay;
    let gc = nm.correlation_rate;
    let sideband = k * k / (4.0 * w * w);
    let closed_noise = 2.0 * photons * nm.linewidth * gc * (gc + k) / (w * w + (gc + k) * (gc + k));
    PhononAsymptotics {
        exact_noise_limit: sideband + exact_noise / (4.0 * k),
        closed_noise_limit: sideband + closed_noise / (4.0 * k),
        spectrum_limit: sideband + photons / (2.0 * k) * phase_noise_spectrum(w, nm),
        closed_noise,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DriftMatrix;
    use approx::assert_relative_eq;
    use nalgebra::Vector4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(a: f64, b: f64, c: f64, d: f64) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::new(a, b, c, d))
    }

    #[test]
    fn scalar_case() {
        let v = solve_lyapunov(&(-Matrix4::identity()), &(Matrix4::identity() * 2.0)).unwrap();
        assert!((v.matrix - Matrix4::identity()).norm() < 1e-14);
        assert!(!v.ill_conditioned);
    }

    #[test]
    fn decoupled_vacuum_and_thermal_blocks() {
        let (w, gm, k, delta, nbar) = (1.0, 1e-5, 0.3, 0.8, 12.0);
        let a = DriftMatrix::from_rates(w, gm, k, delta, 0.0);
        let d = diag(0.0, gm * (2.0 * nbar + 1.0), k, k);
        let v = solve_lyapunov(&a, &d).unwrap();
        assert_relative_eq!(v.matrix[(2, 2)], 0.5, max_relative = 1e-9);
        assert_relative_eq!(v.matrix[(3, 3)], 0.5, max_relative = 1e-9);
        assert!(v.matrix[(2, 3)].abs() < 1e-9);
        assert_relative_eq!(v.matrix[(0, 0)], nbar + 0.5, max_relative = 1e-2);
        assert_relative_eq!(v.matrix[(1, 1)], nbar + 0.5, max_relative = 1e-2);
        let n = phonon_number(&v);
        assert_relative_eq!(n.raw, nbar, max_relative = 1e-2);
    }

    #[test]
    fn residual_and_symmetry_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let kappa = rng.random_range(0.1..2.0);
            let delta = rng.random_range(0.1..3.0);
            let eta: f64 = rng.random_range(0.05..0.99);
            let g = ((1.0 - eta) * (kappa * kappa + delta * delta) / delta).sqrt();
            let gm = rng.random_range(1e-3..0.1);
            let a = DriftMatrix::from_rates(1.0, gm, kappa, delta, g);
            let d = diag(0.0, gm * rng.random_range(1.0..100.0), kappa, kappa + rng.random_range(0.0..3.0));
            let v = solve_lyapunov(&a, &d).unwrap();
            assert!(v.relative_residual <= RESIDUAL_TOLERANCE);
            assert_eq!(v.matrix, v.matrix.transpose());
            let min_eig = v.matrix.symmetric_eigenvalues().min();
            assert!(min_eig >= -1e-12 * v.matrix.norm());
        }
    }

    #[test]
    fn ode_converges_to_known_solution() {
        let a = -Matrix4::identity();
        let d = Matrix4::identity() * 2.0;
        let v = integrate_lyapunov_ode(&a, &d, &Matrix4::zeros(), 100.0, OdeControl::default()).unwrap();
        assert!((v.matrix - Matrix4::identity()).norm() < 1e-11);
    }

    #[test]
    fn ode_fixed_point_stays_put() {
        let a = DriftMatrix::from_rates(1.0, 0.05, 0.5, 1.0, 0.4);
        let d = diag(0.0, 0.05, 0.5, 0.7);
        let exact = solve_lyapunov(&a, &d).unwrap();
        // Zero allowed time: must already satisfy the stopping rule.
        let v = integrate_lyapunov_ode(&a, &d, &exact.matrix, 0.0, OdeControl { tolerance: 1e-9, ..Default::default() })
            .unwrap();
        assert_eq!(v.matrix, exact.matrix);
    }

    #[test]
    fn ode_limit_is_independent_of_start() {
        let a = DriftMatrix::from_rates(1.0, 0.05, 0.6, 1.0, 0.5);
        let d = diag(0.0, 0.05 * 5.0, 0.6, 0.9);
        let exact = solve_lyapunov(&a, &d).unwrap().matrix;
        let ctl = OdeControl::default();
        let from_zero = integrate_lyapunov_ode(&a, &d, &Matrix4::zeros(), 1e5, ctl).unwrap().matrix;
        let from_hot = integrate_lyapunov_ode(&a, &d, &(Matrix4::identity() * 40.0), 1e5, ctl).unwrap().matrix;
        assert!((from_zero - from_hot).norm() <= 1e-8 * exact.norm());
        assert!((from_zero - exact).norm() <= 1e-6 * exact.norm());
    }

    #[test]
    fn ode_reports_non_convergence() {
        let a = -Matrix4::identity() * 0.01;
        let d = Matrix4::identity();
        assert!(integrate_lyapunov_ode(&a, &d, &Matrix4::zeros(), 1.0, OdeControl::default()).is_err());
    }

    #[test]
    fn unstable_drift_is_rejected() {
        let a = DriftMatrix::from_rates(1.0, 0.0, 0.5, 1.0, 0.0);
        assert!(matches!(solve_lyapunov(&a, &Matrix4::identity()), Err(Error::Unstable { .. })));
    }

    #[test]
    fn phonon_number_of_ground_and_thermal_states() {
        let cov = |m: Matrix4<f64>| CovarianceMatrix {
            matrix: m,
            condition: 1.0,
            relative_residual: 0.0,
            ill_conditioned: false,
        };
        assert_eq!(phonon_number(&cov(Matrix4::identity() * 0.5)).raw, 0.0);
        assert_eq!(phonon_number(&cov(diag(3.5, 3.5, 0.5, 0.5))).raw, 3.0);
        let n = phonon_number(&cov(diag(0.49, 0.5, 0.5, 0.5)));
        assert!(n.raw < 0.0);
        assert_eq!(n.clamped, 0.0);
    }

    #[test]
    fn asymptotics_without_noise_are_sideband_limit() {
        let p = SystemParams {
            cavity_decay: 0.05 * 6.0e7,
            mechanical_freq: 6.0e7,
            ..SystemParams::benchmark()
        };
        let nm = NoiseModel::new(0.0, 1.0e5).unwrap();
        let r = phonon_asymptotic(&p, 1.0e6, &nm, 0.0);
        let limit = 0.05f64 * 0.05 / 4.0;
        assert_relative_eq!(r.exact_noise_limit, limit, max_relative = 1e-14);
        assert_relative_eq!(r.closed_noise_limit, limit, max_relative = 1e-14);
        assert_relative_eq!(r.spectrum_limit, limit, max_relative = 1e-14);
    }

    #[test]
    fn closed_noise_reduces_to_spectrum_in_hierarchy() {
        // ω_m/γ_c > 100 and γ_c/κ > 100
        let w = 1.0e8;
        let p = SystemParams {
            mechanical_freq: w,
            cavity_decay: w * 5e-5,
            ..SystemParams::benchmark()
        };
        let nm = NoiseModel::new(50.0, w * 5e-3).unwrap();
        let photons = 3.0e7;
        let r = phonon_asymptotic(&p, photons, &nm, 0.0);
        let target = photons * phase_noise_spectrum(w, &nm);
        assert!((r.closed_noise - target).abs() <= 0.05 * target);
    }

    #[test]
    fn extra_phase_noise_never_cools() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let kappa = rng.random_range(0.1..2.0);
            let delta = rng.random_range(0.1..3.0);
            let eta: f64 = rng.random_range(0.05..0.99);
            let g = ((1.0 - eta) * (kappa * kappa + delta * delta) / delta).sqrt();
            let a = DriftMatrix::from_rates(1.0, 0.01, kappa, delta, g);
            let d = diag(0.0, 0.01 * 21.0, kappa, kappa);
            let bump = rng.random_range(1e-3..10.0);
            let base = solve_lyapunov(&a, &d).unwrap().matrix;
            let noisy = solve_lyapunov(&a, &(d + diag(0.0, 0.0, 0.0, bump))).unwrap().matrix;
            assert!(noisy[(0, 0)] + noisy[(1, 1)] >= base[(0, 0)] + base[(1, 1)]);
        }
    }
}

//! Self-checks run by `optonoise check`: each solver is compared against an
//! independent oracle or an exact analytic case on seeded random inputs.

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariance::{integrate_lyapunov_ode, solve_lyapunov, OdeControl};
use crate::dynamics::{stability, DriftMatrix};
use crate::entanglement::log_negativity_of;
use crate::error::Result;
use crate::noise::{phase_noise_n, NoiseMethod, NoiseModel};
use crate::params::{derive, SystemParams};
use crate::steady_state::{bistability_parameter, solve_branches};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error, or the failure message.
    pub detail: String,
}

/// A random red-detuned drift matrix with ω_m = 1 and 0.05 < η < 0.99,
/// plus a matching diagonal diffusion matrix.
pub fn random_stable_system(rng: &mut impl Rng) -> (DriftMatrix, Matrix4<f64>) {
    let kappa = rng.random_range(0.05..2.0);
    let delta = rng.random_range(0.1..3.0);
    let eta: f64 = rng.random_range(0.05..0.99);
    let coupling = ((1.0 - eta) * (kappa * kappa + delta * delta) / delta).sqrt();
    let gamma_m = rng.random_range(1e-3..0.1);
    let a = DriftMatrix::from_rates(1.0, gamma_m, kappa, delta, coupling);
    let d = Matrix4::from_diagonal(&Vector4::new(
        0.0,
        gamma_m * rng.random_range(1.0..50.0),
        kappa,
        kappa + rng.random_range(0.0..2.0),
    ));
    (a, d)
}

fn outcome(name: &'static str, worst: Result<f64>, tolerance: f64) -> CheckOutcome {
    match worst {
        Ok(w) => CheckOutcome {
            name,
            passed: w <= tolerance,
            detail: format!("worst {w:.3e} (tolerance {tolerance:.0e})"),
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn lyapunov_vs_ode(samples: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (a, d) = random_stable_system(&mut rng);
        let direct = solve_lyapunov(&a, &d)?.matrix;
        let ode = integrate_lyapunov_ode(&a, &d, &Matrix4::zeros(), 1e7, OdeControl::default())?.matrix;
        worst = worst.max((direct - ode).norm() / direct.norm());
    }
    Ok(worst)
}

fn resolvent_vs_quadrature(samples: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (a, _) = random_stable_system(&mut rng);
        let nm = NoiseModel::new(rng.random_range(0.01..1.0), rng.random_range(0.05..5.0))?;
        let photons = rng.random_range(1.0..1e4);
        let r = phase_noise_n(&a, photons, &nm, NoiseMethod::Resolvent)?;
        let q = phase_noise_n(&a, photons, &nm, NoiseMethod::Quadrature)?;
        worst = worst.max((r - q).abs() / r.abs());
    }
    Ok(worst)
}

fn decoupled_closed_form() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(kappa, gc) in &[(0.05, 0.5), (1.4, 0.01), (0.3, 3.0)] {
        let a = DriftMatrix::from_rates(1.0, 1e-5, kappa, 1.0, 0.0);
        let nm = NoiseModel::new(0.7, gc)?;
        let n = phase_noise_n(&a, 100.0, &nm, NoiseMethod::Resolvent)?;
        let s = gc + kappa;
        let closed = 2.0 * 100.0 * 0.7 * gc * s / (1.0 + s * s);
        worst = worst.max((n - closed).abs() / closed);
    }
    Ok(worst)
}

fn stability_matches_eta(samples: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0usize;
    for _ in 0..samples {
        let kappa = rng.random_range(0.05..3.0);
        let delta = rng.random_range(0.01..4.0);
        let coupling = rng.random_range(0.0..3.0);
        let gamma_m = rng.random_range(1e-4..0.2);
        let a = DriftMatrix::from_rates(1.0, gamma_m, kappa, delta, coupling);
        let eta = bistability_parameter(coupling, delta, kappa, 1.0);
        if coupling > 0.0 && (eta > 0.0 && eta < 1.0) != stability(&a)?.stable {
            mismatches += 1;
        }
    }
    Ok(mismatches as f64)
}

fn entanglement_oracles() -> Result<f64> {
    let mut worst = log_negativity_of(&(Matrix4::identity() * 0.5))?.log_negativity;
    for r in [0.1f64, 0.5, 1.0] {
        let c = (2.0 * r).cosh() / 2.0;
        let s = (2.0 * r).sinh() / 2.0;
        let v = Matrix4::new(c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c);
        let en = log_negativity_of(&v)?.log_negativity;
        worst = worst.max((en - 2.0 * r).abs() / (2.0 * r));
    }
    Ok(worst)
}

fn steady_state_residual() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for det in [0.5, 2.0, 3.0, 4.0] {
        for power in [1e-3, 0.05, 0.1] {
            let mut p = SystemParams::benchmark();
            p.detuning = det * p.mechanical_freq;
            p.input_power = power;
            let d = derive(&p)?;
            for ss in solve_branches(&p, &d)? {
                let lhs = ss.alpha_s * num_complex::Complex64::new(p.cavity_decay, ss.effective_detuning);
                worst = worst.max((lhs - d.drive_amplitude).norm() / d.drive_amplitude);
            }
        }
    }
    Ok(worst)
}

pub fn run_checks() -> Vec<CheckOutcome> {
    vec![
        outcome("lyapunov solve vs ODE integration", lyapunov_vs_ode(50), 1e-6),
        outcome("phase noise resolvent vs quadrature", resolvent_vs_quadrature(50), 1e-8),
        outcome("decoupled phase noise closed form", decoupled_closed_form(), 1e-10),
        outcome("stability vs bistability parameter (mismatches)", stability_matches_eta(1000), 0.0),
        outcome("log-negativity analytic states", entanglement_oracles(), 1e-10),
        outcome("steady-state fixed-point residual", steady_state_residual(), 1e-9),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_checks() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}

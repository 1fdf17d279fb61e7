//! Ornstein–Uhlenbeck laser phase noise and the diffusion matrix.
//!
//! The phase velocity φ̇ has spectrum S(ω) = 2Γ_L / (1 + ω²/γ_c²). Its
//! contribution N to the Y–Y diffusion entry is
//! N = 2|α_s|² γ_c Γ_L ∫₀^∞ [exp(As)]₄₄ e^{−γ_c s} ds.

use nalgebra::{Matrix4, Vector4};

use crate::dynamics::{self, matrix_exponential};
use crate::error::{Error, Result};
use crate::params::{DerivedParams, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Γ_L, rad/s.
    pub linewidth: f64,
    /// γ_c, inverse correlation time of the phase noise, rad/s.
    pub correlation_rate: f64,
}

impl NoiseModel {
    pub fn new(linewidth: f64, correlation_rate: f64) -> Result<Self> {
        let nm = NoiseModel {
            linewidth,
            correlation_rate,
        };
        nm.validate()?;
        Ok(nm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth.is_finite() && self.linewidth >= 0.0) {
            return Err(Error::domain("linewidth", format!("must be >= 0, got {}", self.linewidth)));
        }
        if !(self.correlation_rate.is_finite() && self.correlation_rate > 0.0) {
            return Err(Error::domain(
                "correlation_rate",
                format!("must be finite and > 0, got {}", self.correlation_rate),
            ));
        }
        Ok(())
    }
}

pub fn phase_noise_spectrum(omega: f64, nm: &NoiseModel) -> f64 {
    let r = omega / nm.correlation_rate;
    2.0 * nm.linewidth / (1.0 + r * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMethod {
    /// Closed form through the resolvent (γ_c·I − A)⁻¹.
    Resolvent,
    /// Adaptive quadrature of the defining integral.
    Quadrature,
}

/// Phase-noise diffusion N for steady-state photon number |α_s|².
pub fn phase_noise_n(a: &Matrix4<f64>, photons: f64, nm: &NoiseModel, method: NoiseMethod) -> Result<f64> {
    nm.validate()?;
    if !(photons.is_finite() && photons >= 0.0) {
        return Err(Error::domain("photon_number", format!("must be >= 0, got {photons}")));
    }
    dynamics::require_stable(a)?;
    if nm.linewidth == 0.0 || photons == 0.0 {
        return Ok(0.0);
    }
    let gc = nm.correlation_rate;
    let integral = match method {
        NoiseMethod::Resolvent => dynamics::resolvent_entry_44(a, gc)?,
        NoiseMethod::Quadrature => damped_propagator_integral(a, gc)?,
    };
    Ok(2.0 * photons * gc * nm.linewidth * integral)
}

// 15-point Kronrod nodes on [-1, 1] (non-negative half) with the embedded
// 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gauss_kronrod(f: &mut impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c)?;
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * KRONROD_NODES[i];
        let pair = f(c - dx)? + f(c + dx)?;
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    Ok((kronrod * h, (kronrod - gauss).abs() * h))
}

fn adaptive(
    f: &mut impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    depth: u32,
) -> Result<f64> {
    let (value, err) = gauss_kronrod(f, lo, hi)?;
    if err <= abs_tol || depth == 0 {
        if err > abs_tol {
            return Err(Error::numerical(
                "phase_noise_n",
                format!("quadrature error {err:e} exceeds {abs_tol:e} on [{lo:e}, {hi:e}]"),
            ));
        }
        return Ok(value);
    }
    let mid = 0.5 * (lo + hi);
    Ok(adaptive(f, lo, mid, 0.5 * abs_tol, depth - 1)? + adaptive(f, mid, hi, 0.5 * abs_tol, depth - 1)?)
}

const MAX_PANELS: usize = 200_000;

/// ∫₀^∞ [exp(As)]₄₄ e^{−γ_c s} ds by panel-wise adaptive Gauss–Kronrod,
/// truncated once the remaining tail is below 1e-10 of the running value.
fn damped_propagator_integral(a: &Matrix4<f64>, gamma_c: f64) -> Result<f64> {
    let rate_scale = a.norm().max(gamma_c);
    let panel = (2.0 / rate_scale).min(1.0 / gamma_c);
    let abs_tol = 1e-14 / gamma_c;
    let step = matrix_exponential(a, panel)?;

    let mut total = 0.0;
    let mut start = 0.0;
    // exp(A·start), advanced one panel at a time
    let mut propagator = Matrix4::<f64>::identity();
    let mut peak_norm: f64 = 1.0;
    let e4 = Vector4::new(0.0, 0.0, 0.0, 1.0);
    for _ in 0..MAX_PANELS {
        let base = propagator;
        let mut integrand = |s: f64| -> Result<f64> {
            let m = matrix_exponential(a, s - start)? * base;
            Ok((e4.transpose() * m * e4)[0] * (-gamma_c * s).exp())
        };
        total += adaptive(&mut integrand, start, start + panel, abs_tol * panel * gamma_c, 30)?;
        start += panel;
        propagator = step * propagator;
        let norm = propagator.norm();
        peak_norm = peak_norm.max(norm);
        // |∫_s^∞ M₄₄ e^{−γ_c t} dt| ≤ sup‖M‖ · ‖M(s)‖ · e^{−γ_c s} / γ_c
        let tail = peak_norm * norm * (-gamma_c * start).exp() / gamma_c;
        if tail <= 1e-10 * total.abs() {
            return Ok(total);
        }
    }
    Err(Error::numerical(
        "phase_noise_n",
        format!("quadrature tail did not decay within {MAX_PANELS} panels"),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix {
    pub matrix: Matrix4<f64>,
    /// The phase-noise part N of the Y–Y entry.
    pub phase_noise: f64,
}

/// D = diag[0, γ_m(2n̄ + 1), κ, κ + N].
pub fn diffusion_matrix(params: &SystemParams, derived: &DerivedParams, phase_noise: f64) -> Result<DiffusionMatrix> {
    if !(phase_noise.is_finite() && phase_noise >= 0.0) {
        return Err(Error::domain("phase_noise", format!("N must be >= 0, got {phase_noise}")));
    }
    let thermal = params.mechanical_damping * (2.0 * derived.thermal_occupation + 1.0);
    let k = params.cavity_decay;
    Ok(DiffusionMatrix {
        matrix: Matrix4::from_diagonal(&Vector4::new(0.0, thermal, k, k + phase_noise)),
        phase_noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DriftMatrix;
    use crate::params::{derive, SystemParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spectrum_values() {
        let nm = NoiseModel::new(3.0, 2.0).unwrap();
        assert_eq!(phase_noise_spectrum(0.0, &nm), 6.0);
        assert_eq!(phase_noise_spectrum(2.0, &nm), 3.0);
        assert_eq!(phase_noise_spectrum(-1.3, &nm), phase_noise_spectrum(1.3, &nm));
        let white = NoiseModel::new(3.0, 1e8 * 5.0).unwrap();
        assert!((phase_noise_spectrum(5.0, &white) - 6.0).abs() <= 1e-12 * 6.0);
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::new(-1.0, 1.0).is_err());
        assert!(NoiseModel::new(1.0, 0.0).is_err());
        assert!(NoiseModel::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn zero_linewidth_or_amplitude_gives_zero() {
        let a = DriftMatrix::from_rates(1.0, 0.01, 0.4, 1.0, 0.3);
        let nm = NoiseModel::new(0.0, 0.5).unwrap();
        assert_eq!(phase_noise_n(&a, 1e6, &nm, NoiseMethod::Resolvent).unwrap(), 0.0);
        let nm = NoiseModel::new(2.0, 0.5).unwrap();
        assert_eq!(phase_noise_n(&a, 0.0, &nm, NoiseMethod::Quadrature).unwrap(), 0.0);
    }

    #[test]
    fn decoupled_limit_closed_form() {
        let (w, k, gc, gl, n) = (1.0, 0.3, 0.7, 1e-3, 2.5e4);
        let a = DriftMatrix::from_rates(w, 1e-3, k, w, 0.0);
        let nm = NoiseModel::new(gl, gc).unwrap();
        let want = 2.0 * n * gl * gc * (gc + k) / (w * w + (gc + k) * (gc + k));
        for method in [NoiseMethod::Resolvent, NoiseMethod::Quadrature] {
            assert_relative_eq!(phase_noise_n(&a, n, &nm, method).unwrap(), want, max_relative = 1e-9);
        }
    }

    #[test]
    fn methods_agree_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let kappa = rng.random_range(0.1..2.0);
            let delta = rng.random_range(0.1..3.0);
            let eta: f64 = rng.random_range(0.05..0.99);
            let g = ((1.0 - eta) * (kappa * kappa + delta * delta) / delta).sqrt();
            let a = DriftMatrix::from_rates(1.0, rng.random_range(1e-3..0.1), kappa, delta, g);
            let nm = NoiseModel::new(1.0, rng.random_range(0.05..5.0)).unwrap();
            let r = phase_noise_n(&a, 1.0, &nm, NoiseMethod::Resolvent).unwrap();
            let q = phase_noise_n(&a, 1.0, &nm, NoiseMethod::Quadrature).unwrap();
            assert!((r - q).abs() <= 1e-8 * r.abs(), "resolvent {r} quadrature {q}");
        }
    }

    #[test]
    fn unstable_drift_is_rejected() {
        let a = DriftMatrix::from_rates(1.0, 0.0, 0.4, 1.0, 0.0);
        let nm = NoiseModel::new(1.0, 1.0).unwrap();
        assert!(matches!(
            phase_noise_n(&a, 1.0, &nm, NoiseMethod::Resolvent),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn diffusion_entries() {
        let p = SystemParams::benchmark();
        let d = derive(&p).unwrap();
        let dm = diffusion_matrix(&p, &d, 0.0).unwrap();
        let diag = dm.matrix.diagonal();
        assert_eq!(diag, Vector4::new(0.0, p.mechanical_damping, p.cavity_decay, p.cavity_decay));

        let mut d1 = d;
        d1.thermal_occupation = 1.0;
        let dm = diffusion_matrix(&p, &d1, 5.0).unwrap();
        assert_eq!(dm.matrix[(1, 1)], 3.0 * p.mechanical_damping);
        assert_eq!(dm.matrix[(3, 3)], p.cavity_decay + 5.0);
        assert_eq!(dm.phase_noise, 5.0);
        assert!(diffusion_matrix(&p, &d, -1.0).is_err());
    }
}

//! Linearised fluctuation dynamics: the 4×4 drift matrix in quadrature
//! ordering (q, p, X, Y), its exponential, stability and resolvent.

use std::fmt;
use std::ops::Deref;

use nalgebra::{DMatrix, Matrix4};

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::SystemParams;
use crate::steady_state::SteadyState;

/// Drift matrix of the linearised quadrature equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(Matrix4<f64>);

impl DriftMatrix {
    /// Builds the matrix from the mechanical frequency and damping, cavity
    /// decay, effective detuning Δ and enhanced coupling G.
    pub fn from_rates(omega_m: f64, gamma_m: f64, kappa: f64, delta: f64, coupling: f64) -> Self {
        #[rustfmt::skip]
        let m = Matrix4::new(
            0.0,      omega_m,  0.0,     0.0,
            -omega_m, -gamma_m, coupling, 0.0,
            0.0,      0.0,      -kappa,  delta,
            coupling, 0.0,      -delta,  -kappa,
        );
        DriftMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn exp(&self, t: f64) -> Result<Matrix4<f64>> {
        matrix_exponential(&self.0, t)
    }
}

impl Deref for DriftMatrix {
    type Target = Matrix4<f64>;

    fn deref(&self) -> &Matrix4<f64> {
        &self.0
    }
}

/// Row-major text: one row per line, entries separated by single spaces.
impl fmt::Display for DriftMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_row_major(f, &self.0)
    }
}

pub(crate) fn write_row_major(f: &mut fmt::Formatter<'_>, m: &Matrix4<f64>) -> fmt::Result {
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        writeln!(f, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn drift_matrix(ss: &SteadyState, params: &SystemParams) -> DriftMatrix {
    DriftMatrix::from_rates(
        params.mechanical_freq,
        params.mechanical_damping,
        params.cavity_decay,
        ss.effective_detuning,
        ss.enhanced_coupling,
    )
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// 1-norm bound below which the [13/13] Padé approximant is accurate to
/// double precision.
const THETA_13: f64 = 5.371_920_351_148_152;

fn one_norm(m: &Matrix4<f64>) -> f64 {
    m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

/// exp(A t) by scaling and squaring with a fixed [13/13] Padé approximant.
pub fn matrix_exponential(a: &Matrix4<f64>, t: f64) -> Result<Matrix4<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain("t", format!("time must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(Matrix4::identity());
    }
    let at = a * t;
    let norm = one_norm(&at);
    if !norm.is_finite() {
        return Err(Error::numerical("matrix_exponential", "non-finite input"));
    }
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let x = at * 2f64.powi(-squarings);

    let b = &PADE13;
    let id = Matrix4::identity();
    let x2 = x * x;
    let x4 = x2 * x2;
    let x6 = x4 * x2;
    let u_inner = x6 * (x6 * b[13] + x4 * b[11] + x2 * b[9]) + x6 * b[7] + x4 * b[5] + x2 * b[3] + id * b[1];
    let u = x * u_inner;
    let v = x6 * (x6 * b[12] + x4 * b[10] + x2 * b[8]) + x6 * b[6] + x4 * b[4] + x2 * b[2] + id * b[0];

    let lu = (v - u).lu();
    let mut r = lu
        .solve(&(v + u))
        .ok_or_else(|| Error::numerical("matrix_exponential", "singular Padé denominator"))?;
    for _ in 0..squarings {
        r = r * r;
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    /// Largest eigenvalue real part.
    pub max_real_part: f64,
    /// The margin ε: stable requires max_real_part < −ε.
    pub margin: f64,
}

/// Relative stability margin, scaled by the Frobenius norm of A.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Decides asymptotic stability from the eigenvalues of `a`.
pub fn stability(a: &Matrix4<f64>) -> Result<Stability> {
    let dm = DMatrix::from_column_slice(4, 4, a.as_slice());
    let max_real_part = linalg::spectral_abscissa(&dm)?;
    let margin = STABILITY_MARGIN * a.norm();
    Ok(Stability {
        stable: max_real_part < -margin,
        max_real_part,
        margin,
    })
}

pub(crate) fn require_stable(a: &Matrix4<f64>) -> Result<()> {
    let s = stability(a)?;
    if s.stable {
        Ok(())
    } else {
        Err(Error::Unstable {
            max_real_part: s.max_real_part,
        })
    }
}

/// Y–Y entry of (γ_c·I − A)⁻¹, which equals ∫₀^∞ [exp(As)]₄₄ e^{−γ_c s} ds
/// for stable A.
pub fn resolvent_entry_44(a: &Matrix4<f64>, gamma_c: f64) -> Result<f64> {
    if !(gamma_c.is_finite() && gamma_c > 0.0) {
        return Err(Error::domain("correlation_rate", format!("must be > 0, got {gamma_c}")));
    }
    require_stable(a)?;
    let shifted = Matrix4::identity() * gamma_c - a;
    let e4 = nalgebra::Vector4::new(0.0, 0.0, 0.0, 1.0);
    let col = shifted
        .lu()
        .solve(&e4)
        .ok_or_else(|| Error::numerical("resolvent_entry_44", "singular γ_c·I − A"))?;
    Ok(col[3])
}

//! Classical steady states of the driven cavity, the bistability parameter,
//! and power hysteresis.
//!
//! With n = |α_s|² the fixed-point conditions reduce to the real cubic
//! n[κ² + (Δ0 − G0²n/ω_m)²] = E². It is solved in the scaled variable
//! x = G0²n/(ω_m κ), where it reads x³ − 2δx² + (1 + δ²)x − e = 0 with
//! δ = Δ0/κ and e = E²G0²/(ω_m κ³).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::{self, DriftMatrix};
use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{derive, DerivedParams, SystemParams, CODATA_2018};

/// Relative polynomial residual every returned root must meet.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// Relative size of an imaginary part (or separation) below which two
/// companion eigenvalues are treated as a double root.
const TANGENT_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Intracavity amplitude α_s = E/(κ + iΔ).
    pub alpha_s: Complex64,
    /// |α_s|², the intracavity photon number.
    pub photon_number: f64,
    /// Dimensionless mirror displacement q_s = G0|α_s|²/ω_m.
    pub displacement: f64,
    /// Dimensionless mirror momentum, identically zero.
    pub momentum: f64,
    /// Δ = Δ0 − G0 q_s, rad/s.
    pub effective_detuning: f64,
    /// G = √2 G0 |α_s| in the gauge where α_s is real, rad/s.
    pub enhanced_coupling: f64,
    pub eta: f64,
    /// Position in the list of branches sorted by photon number.
    pub branch_index: usize,
    /// Eigenvalue verdict on the drift matrix.
    pub stable: bool,
    pub max_real_part: f64,
    /// Part of a double root (branch tangency).
    pub tangent: bool,
}

/// η = 1 − G²Δ / (ω_m(κ² + Δ²)), unclamped.
pub fn bistability_parameter(coupling: f64, delta: f64, kappa: f64, omega_m: f64) -> f64 {
    1.0 - coupling * coupling * delta / (omega_m * (kappa * kappa + delta * delta))
}

fn pull_strength(params: &SystemParams, derived: &DerivedParams) -> f64 {
    derived.single_photon_coupling.powi(2) / params.mechanical_freq
}

/// Full steady state for a given photon number on a known branch.
pub fn steady_state_at(
    params: &SystemParams,
    derived: &DerivedParams,
    photons: f64,
    branch_index: usize,
    tangent: bool,
) -> Result<SteadyState> {
    let g0 = derived.single_photon_coupling;
    let displacement = g0 * photons / params.mechanical_freq;
    let delta = params.detuning - g0 * displacement;
    let alpha_s = Complex64::new(derived.drive_amplitude, 0.0) / Complex64::new(params.cavity_decay, delta);
    let photon_number = alpha_s.norm_sqr();
    let coupling = std::f64::consts::SQRT_2 * g0 * alpha_s.norm();
    let eta = bistability_parameter(coupling, delta, params.cavity_decay, params.mechanical_freq);
    let a = DriftMatrix::from_rates(
        params.mechanical_freq,
        params.mechanical_damping,
        params.cavity_decay,
        delta,
        coupling,
    );
    let st = dynamics::stability(&a)?;
    Ok(SteadyState {
        alpha_s,
        photon_number,
        displacement,
        momentum: 0.0,
        effective_detuning: delta,
        enhanced_coupling: coupling,
        eta,
        branch_index,
        stable: st.stable,
        max_real_part: st.max_real_part,
        tangent,
    })
}

struct ScaledCubic {
    delta: f64,
    drive: f64,
}

impl ScaledCubic {
    fn value(&self, x: f64) -> f64 {
        let d = self.delta - x;
        x * (1.0 + d * d) - self.drive
    }

    fn slope(&self, x: f64) -> f64 {
        3.0 * x * x - 4.0 * self.delta * x + 1.0 + self.delta * self.delta
    }

    fn relative_residual(&self, x: f64) -> f64 {
        let scale = x.abs().powi(3)
            + 2.0 * self.delta.abs() * x * x
            + (1.0 + self.delta * self.delta) * x.abs()
            + self.drive.abs();
        if scale == 0.0 {
            0.0
        } else {
            self.value(x).abs() / scale
        }
    }

    /// Turning points of the cubic (local max then local min), present only
    /// when δ > √3.
    fn turning_points(&self) -> Option<(f64, f64)> {
        let disc = self.delta * self.delta - 3.0;
        if disc <= 0.0 {
            return None;
        }
        let r = disc.sqrt();
        Some(((2.0 * self.delta - r) / 3.0, (2.0 * self.delta + r) / 3.0))
    }

    fn polish(&self, mut x: f64) -> f64 {
        let mut res = self.relative_residual(x);
        for _ in 0..20 {
            if res <= 1e-16 {
                break;
            }
            let s = self.slope(x);
            if s == 0.0 {
                break;
            }
            let next = x - self.value(x) / s;
            let next_res = self.relative_residual(next);
            if next_res >= res {
                break;
            }
            x = next;
            res = next_res;
        }
        x
    }

    /// Real roots in ascending order with their tangency flags.
    fn real_roots(&self) -> Result<Vec<(f64, bool)>> {
        let companion = DMatrix::from_row_slice(
            3,
            3,
            &[2.0 * self.delta, -(1.0 + self.delta * self.delta), self.drive, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        );
        let mut eig = linalg::eigenvalues(&companion)?;
        eig.sort_by(|a, b| a.re.total_cmp(&b.re));

        let mut roots: Vec<(f64, bool)> = Vec::with_capacity(3);
        for z in &eig {
            let scale = z.norm().max(1.0);
            if z.im.abs() <= TANGENT_TOLERANCE * scale {
                roots.push((z.re, z.im != 0.0));
            }
        }
        // Close real pairs are also tangencies.
        for i in 1..roots.len() {
            let scale = roots[i].0.abs().max(1.0);
            if (roots[i].0 - roots[i - 1].0).abs() <= TANGENT_TOLERANCE.sqrt() * scale {
                roots[i].1 = true;
                roots[i - 1].1 = true;
            }
        }
        let turning = self.turning_points();
        for root in roots.iter_mut() {
            root.0 = if root.1 {
                // A double root of the cubic sits exactly on a turning point.
                match turning {
                    Some((lo, hi)) if (root.0 - lo).abs() <= (root.0 - hi).abs() => lo,
                    Some((_, hi)) => hi,
                    None => root.0,
                }
            } else {
                self.polish(root.0)
            };
            let residual = self.relative_residual(root.0);
            if !(residual <= ROOT_TOLERANCE) {
                return Err(Error::numerical(
                    "solve_branches",
                    format!("cubic root {:e} has relative residual {residual:e}", root.0),
                ));
            }
        }
        roots.retain(|r| r.0 >= 0.0);
        roots.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(roots)
    }
}

fn scaled_cubic(params: &SystemParams, derived: &DerivedParams) -> Option<ScaledCubic> {
    let beta = pull_strength(params, derived);
    if beta == 0.0 {
        return None;
    }
    let kappa = params.cavity_decay;
    Some(ScaledCubic {
        delta: params.detuning / kappa,
        drive: derived.drive_amplitude.powi(2) * beta / kappa.powi(3),
    })
}

/// All non-negative real steady states, ascending in photon number.
pub fn solve_branches(params: &SystemParams, derived: &DerivedParams) -> Result<Vec<SteadyState>> {
    params.validate()?;
    let kappa = params.cavity_decay;
    let e2 = derived.drive_amplitude.powi(2);
    if e2 == 0.0 {
        return Ok(vec![steady_state_at(params, derived, 0.0, 0, false)?]);
    }
    let Some(cubic) = scaled_cubic(params, derived) else {
        let n = e2 / (kappa * kappa + params.detuning * params.detuning);
        return Ok(vec![steady_state_at(params, derived, n, 0, false)?]);
    };
    let beta = pull_strength(params, derived);
    cubic
        .real_roots()?
        .into_iter()
        .enumerate()
        .map(|(i, (x, tangent))| steady_state_at(params, derived, x * kappa / beta, i, tangent))
        .collect()
}

/// A branch end: photon number and input power at which a stable branch
/// merges with the unstable middle branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fold {
    pub photons: f64,
    pub power: f64,
}

/// End of the lower branch (reached going up in power) and end of the
/// upper branch (reached going down), if the detuning admits bistability.
pub fn fold_points(params: &SystemParams, derived: &DerivedParams) -> Option<(Fold, Fold)> {
    let cubic = scaled_cubic(params, derived)?;
    let (x_lo, x_hi) = cubic.turning_points()?;
    let beta = pull_strength(params, derived);
    let kappa = params.cavity_decay;
    let fold = |x: f64| {
        let e = x * (1.0 + (cubic.delta - x).powi(2));
        let e2 = e * kappa.powi(3) / beta;
        Fold {
            photons: x * kappa / beta,
            power: e2 * CODATA_2018.hbar * derived.laser_freq / (2.0 * kappa),
        }
    };
    Some((fold(x_lo), fold(x_hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub direction: SweepDirection,
    pub power: f64,
    pub photons: f64,
    pub branch_index: usize,
    pub eta: f64,
    pub stable: bool,
    /// Inserted at the exact power where the occupied branch terminates.
    pub terminal: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HysteresisTrace {
    pub points: Vec<TracePoint>,
}

impl HysteresisTrace {
    pub fn up(&self) -> impl Iterator<Item = &TracePoint> {
        self.points.iter().filter(|p| p.direction == SweepDirection::Up)
    }

    pub fn down(&self) -> impl Iterator<Item = &TracePoint> {
        self.points.iter().filter(|p| p.direction == SweepDirection::Down)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
}

/// Sweeps the input power up through `powers` and back down, following the
/// occupied branch and jumping only where it ceases to exist.
pub fn hysteresis_sweep(params: &SystemParams, powers: &[f64]) -> Result<HysteresisTrace> {
    if powers.is_empty() {
        return Ok(HysteresisTrace::default());
    }
    if powers.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("input_power", "sweep powers must be strictly ascending"));
    }
    let at = |p: f64| -> Result<(SystemParams, DerivedParams)> {
        let sp = SystemParams { input_power: p, ..*params };
        Ok((sp, derive(&sp)?))
    };
    let annotate = |p: f64, e: Error| Error::numerical("hysteresis_sweep", format!("at P = {p:e} W: {e}"));

    // Fold photon numbers do not depend on the drive; fold powers do not
    // either, so one evaluation covers the sweep.
    let (p0, d0) = at(powers[0]).map_err(|e| annotate(powers[0], e))?;
    let folds = fold_points(&p0, &d0);

    let mut points = Vec::with_capacity(2 * powers.len() + 2);
    let mut side = Side::Lower;
    let push = |direction, p: f64, side: Side, points: &mut Vec<TracePoint>| -> Result<()> {
        let (sp, d) = at(p)?;
        let branches = solve_branches(&sp, &d)?;
        let ss = match side {
            Side::Lower => branches.first(),
            Side::Upper => branches.last(),
        }
        .ok_or_else(|| Error::numerical("hysteresis_sweep", "no steady state"))?;
        points.push(TracePoint {
            direction,
            power: p,
            photons: ss.photon_number,
            branch_index: ss.branch_index,
            eta: ss.eta,
            stable: ss.stable,
            terminal: false,
        });
        Ok(())
    };
    let terminal = |direction, fold: Fold, branch_index, points: &mut Vec<TracePoint>| -> Result<()> {
        let (sp, d) = at(fold.power)?;
        let ss = steady_state_at(&sp, &d, fold.photons, branch_index, true)?;
        points.push(TracePoint {
            direction,
            power: fold.power,
            photons: ss.photon_number,
            branch_index,
            eta: ss.eta,
            stable: ss.stable,
            terminal: true,
        });
        Ok(())
    };

    for (i, &p) in powers.iter().enumerate() {
        if let Some((lower_end, _)) = folds {
            if side == Side::Lower && p > lower_end.power && i > 0 && powers[i - 1] <= lower_end.power {
                terminal(SweepDirection::Up, lower_end, 0, &mut points)
                    .map_err(|e| annotate(lower_end.power, e))?;
                side = Side::Upper;
            }
        }
        if let Some((lower_end, _)) = folds {
            if i == 0 && p > lower_end.power {
                side = Side::Upper;
            }
        }
        push(SweepDirection::Up, p, side, &mut points).map_err(|e| annotate(p, e))?;
    }
    for (i, &p) in powers.iter().enumerate().rev() {
        if let Some((_, upper_end)) = folds {
            let prev = powers.get(i + 1).copied();
            if side == Side::Upper && p < upper_end.power && prev.is_some_and(|q| q >= upper_end.power) {
                terminal(SweepDirection::Down, upper_end, 1, &mut points)
                    .map_err(|e| annotate(upper_end.power, e))?;
                side = Side::Lower;
            }
        }
        push(SweepDirection::Down, p, side, &mut points).map_err(|e| annotate(p, e))?;
    }
    Ok(HysteresisTrace { points })
}

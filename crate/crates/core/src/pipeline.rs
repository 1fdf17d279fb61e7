//! Full analysis of one steady-state branch: drift, phase-noise diffusion,
//! stationary covariance, phonon occupation and entanglement.

use crate::covariance::{self, CovarianceMatrix, PhononAsymptotics, PhononNumber};
use crate::dynamics::{drift_matrix, DriftMatrix};
use crate::entanglement::{self, EntanglementResult};
use crate::error::Result;
use crate::noise::{self, DiffusionMatrix, NoiseMethod, NoiseModel};
use crate::params::{DerivedParams, SystemParams};
use crate::steady_state::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAnalysis {
    pub drift: DriftMatrix,
    pub diffusion: DiffusionMatrix,
    pub covariance: CovarianceMatrix,
    pub phonons: PhononNumber,
    pub asymptotics: PhononAsymptotics,
    pub entanglement: EntanglementResult,
}

/// Runs every stationary-state computation for `ss`. Fails with
/// [`crate::Error::Unstable`] when the branch has no stationary state.
pub fn analyze_branch(
    params: &SystemParams,
    derived: &DerivedParams,
    noise_model: &NoiseModel,
    ss: &SteadyState,
) -> Result<BranchAnalysis> {
    let drift = drift_matrix(ss, params);
    let n = noise::phase_noise_n(&drift, ss.photon_number, noise_model, NoiseMethod::Resolvent)?;
    let diffusion = noise::diffusion_matrix(params, derived, n)?;
    let cov = covariance::solve_lyapunov(&drift, &diffusion.matrix)?;
    Ok(BranchAnalysis {
        drift,
        diffusion,
        covariance: cov,
        phonons: covariance::phonon_number(&cov),
        asymptotics: covariance::phonon_asymptotic(params, ss.photon_number, noise_model, n),
        entanglement: entanglement::log_negativity(&cov)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, hz};
    use crate::steady_state::solve_branches;
    use crate::Error;

    fn setup(detuning_wm: f64, temperature: f64) -> (SystemParams, DerivedParams) {
        let mut p = SystemParams::benchmark();
        p.detuning = detuning_wm * p.mechanical_freq;
        p.bath_temperature = temperature;
        p.input_power = 0.01;
        let d = derive(&p).unwrap();
        (p, d)
    }

    #[test]
    fn vacuum_floor_without_noise_at_zero_temperature() {
        let (p, d) = setup(1.0, 0.0);
        let nm = NoiseModel::new(0.0, hz(1e6)).unwrap();
        for ss in solve_branches(&p, &d).unwrap() {
            let r = analyze_branch(&p, &d, &nm, &ss).unwrap();
            let v = r.covariance.matrix;
            for i in 0..4 {
                assert!(v[(i, i)] >= 0.5 * (1.0 - 1e-9), "V[{i}{i}] = {}", v[(i, i)]);
            }
            assert!(r.entanglement.log_negativity >= 0.0);
        }
    }

    #[test]
    fn phase_noise_reduces_entanglement() {
        let (p, d) = setup(1.0, 0.4);
        let ss = solve_branches(&p, &d).unwrap()[0];
        let clean = analyze_branch(&p, &d, &NoiseModel::new(0.0, hz(100.0)).unwrap(), &ss).unwrap();
        let noisy = analyze_branch(&p, &d, &NoiseModel::new(hz(100.0), hz(100.0)).unwrap(), &ss).unwrap();
        assert!(noisy.diffusion.phase_noise > 0.0);
        assert!(noisy.entanglement.log_negativity <= clean.entanglement.log_negativity);
        assert!(noisy.phonons.raw >= clean.phonons.raw);
    }

    #[test]
    fn unstable_branch_is_rejected() {
        let (p, d) = setup(3.0, 0.0);
        let (lo, hi) = crate::steady_state::fold_points(&p, &d).unwrap();
        let mut q = p;
        q.input_power = hi.power + 0.1 * (lo.power - hi.power);
        let d = derive(&q).unwrap();
        let branches = solve_branches(&q, &d).unwrap();
        let nm = NoiseModel::new(0.0, hz(1e6)).unwrap();
        assert!(matches!(analyze_branch(&q, &d, &nm, &branches[1]), Err(Error::Unstable { .. })));
    }
}

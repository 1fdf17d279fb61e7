//! Physical inputs, constants and derived single-photon quantities.
//!
//! Every frequency stored here is angular (rad/s). Ordinary frequencies in
//! Hz are converted with [`hz`] at the configuration boundary.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// CODATA 2018 exact / recommended values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub boltzmann: f64,
    /// Speed of light in vacuum, m/s.
    pub light_speed: f64,
}

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    boltzmann: 1.380_649e-23,
    light_speed: 299_792_458.0,
};

/// Converts an ordinary frequency in Hz to an angular frequency in rad/s.
pub fn hz(nu: f64) -> f64 {
    2.0 * PI * nu
}

/// Inputs describing one cavity, mirror, drive laser and bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cavity length L, m.
    pub cavity_length: f64,
    /// Effective mirror mass m, kg.
    pub mirror_mass: f64,
    /// Mechanical angular frequency ω_m, rad/s.
    pub mechanical_freq: f64,
    /// Mechanical energy damping γ_m, rad/s.
    pub mechanical_damping: f64,
    /// Cavity amplitude decay κ, rad/s.
    pub cavity_decay: f64,
    /// Drive wavelength λ, m.
    pub laser_wavelength: f64,
    /// Input power P, W.
    pub input_power: f64,
    /// Bare detuning Δ0 = ω_c − ω_L, rad/s.
    pub detuning: f64,
    /// Bath temperature T, K.
    pub bath_temperature: f64,
}

impl SystemParams {
    /// The 1 mm Fabry–Perot cavity used throughout the benchmarks: λ = 810 nm,
    /// P = 50 mW, ω_m/2π = 10 MHz, γ_m/2π = 100 Hz, m = 5 ng, κ = 1.4 ω_m.
    /// Detuning and temperature start at zero.
    pub fn benchmark() -> Self {
        let mechanical_freq = hz(10.0e6);
        SystemParams {
            cavity_length: 1.0e-3,
            mirror_mass: 5.0e-12,
            mechanical_freq,
            mechanical_damping: hz(100.0),
            cavity_decay: 1.4 * mechanical_freq,
            laser_wavelength: 810.0e-9,
            input_power: 0.05,
            detuning: 0.0,
            bath_temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let strictly_positive = [
            ("cavity_length", self.cavity_length),
            ("mirror_mass", self.mirror_mass),
            ("mechanical_freq", self.mechanical_freq),
            ("cavity_decay", self.cavity_decay),
            ("laser_wavelength", self.laser_wavelength),
        ];
        for (field, value) in strictly_positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(field, format!("must be finite and > 0, got {value}")));
            }
        }
        let non_negative = [
            ("mechanical_damping", self.mechanical_damping),
            ("input_power", self.input_power),
            ("bath_temperature", self.bath_temperature),
        ];
        for (field, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::domain(field, format!("must be finite and >= 0, got {value}")));
            }
        }
        if !self.detuning.is_finite() {
            return Err(Error::domain("detuning", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// ω_L = 2πc/λ, rad/s.
    pub laser_freq: f64,
    /// ω_c = ω_L + Δ0, rad/s.
    pub cavity_freq: f64,
    /// Single-photon coupling G0 = (ω_c/L)·√(ħ/(m ω_m)), rad/s.
    pub single_photon_coupling: f64,
    /// Drive amplitude E = √(2Pκ/(ħω_L)), rad/s.
    pub drive_amplitude: f64,
    /// Mean thermal phonon number of the mechanical bath.
    pub thermal_occupation: f64,
}

pub fn derive(params: &SystemParams) -> Result<DerivedParams> {
    params.validate()?;
    let k = CODATA_2018;
    let laser_freq = 2.0 * PI * k.light_speed / params.laser_wavelength;
    let cavity_freq = laser_freq + params.detuning;
    if cavity_freq <= 0.0 {
        return Err(Error::domain("detuning", "cavity frequency ω_L + Δ0 must be positive"));
    }
    let zpf = (k.hbar / (params.mirror_mass * params.mechanical_freq)).sqrt();
    let single_photon_coupling = cavity_freq / params.cavity_length * zpf;
    let drive_amplitude =
        (2.0 * params.input_power * params.cavity_decay / (k.hbar * laser_freq)).sqrt();
    Ok(DerivedParams {
        laser_freq,
        cavity_freq,
        single_photon_coupling,
        drive_amplitude,
        thermal_occupation: thermal_occupation(params.mechanical_freq, params.bath_temperature)?,
    })
}

/// Bose–Einstein occupation [exp(ħω/k_B T) − 1]⁻¹; exactly 0 at T = 0.
pub fn thermal_occupation(mechanical_freq: f64, temperature: f64) -> Result<f64> {
    if !(mechanical_freq.is_finite() && mechanical_freq > 0.0) {
        return Err(Error::domain("mechanical_freq", format!("must be > 0, got {mechanical_freq}")));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::domain("bath_temperature", format!("must be >= 0, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = CODATA_2018.hbar * mechanical_freq / (CODATA_2018.boltzmann * temperature);
    Ok(1.0 / x.exp_m1())
}

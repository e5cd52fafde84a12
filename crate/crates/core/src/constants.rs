//! Exact SI physical constants.

/// Molar gas constant, J/(mol·K).
pub const GAS_CONSTANT: f64 = 8.314462618;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.62607015e-34;

/// Offset between the Celsius and Kelvin scales.
pub const CELSIUS_OFFSET: f64 = 273.15;

pub fn celsius_to_kelvin(t_c: f64) -> f64 {
    t_c + CELSIUS_OFFSET
}

pub fn kelvin_to_celsius(t_k: f64) -> f64 {
    t_k - CELSIUS_OFFSET
}

/// Heating rate conversion K/min → K/s.
pub fn per_minute_to_per_second(beta_k_per_min: f64) -> f64 {
    beta_k_per_min / 60.0
}

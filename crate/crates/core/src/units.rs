//! Unit conventions and physical constants.
//!
//! All rates and detunings are stored internally as angular frequencies in
//! rad/s.  Configuration values given in MHz are converted on input; a flag
//! says whether the 2π factor is already included in the quoted number.

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Speed of light (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Angular frequency (rad/s) from a linear frequency quoted in MHz,
/// i.e. the "2π · f MHz" notation.
pub fn angular_mhz(f: f64) -> f64 {
    TWO_PI * f * 1e6
}

/// Angular frequency (rad/s) from a linear frequency quoted in kHz.
pub fn angular_khz(f: f64) -> f64 {
    TWO_PI * f * 1e3
}

/// Linear frequency in MHz from an angular frequency in rad/s.
pub fn to_linear_mhz(omega: f64) -> f64 {
    omega / (TWO_PI * 1e6)
}

/// Convert a frequency quoted in MHz to rad/s.  `includes_two_pi = true`
/// means the quoted number is a linear frequency to be multiplied by 2π
/// (the "κ = 2π·2.8 MHz" style); `false` means the number is already an
/// angular frequency in units of 1e6 rad/s.
pub fn from_mhz(value: f64, includes_two_pi: bool) -> f64 {
    if includes_two_pi {
        TWO_PI * value * 1e6
    } else {
        value * 1e6
    }
}

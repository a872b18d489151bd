//! Unit conversions at the user boundary.
//!
//! Internally every frequency and rate is an angular frequency in rad/ns, so
//! that `omega / 2π` reads directly in GHz. Users quote `ν = ω/2π` in GHz for
//! frequencies and in MHz for rates.

use std::f64::consts::TAU;

/// `ν` in GHz → ω in rad/ns.
pub fn ghz(nu: f64) -> f64 {
    TAU * nu
}

/// `ν` in MHz → ω in rad/ns.
pub fn mhz(nu: f64) -> f64 {
    TAU * nu * 1e-3
}

/// ω in rad/ns → `ν` in GHz.
pub fn to_ghz(omega: f64) -> f64 {
    omega / TAU
}

/// ω in rad/ns → `ν` in MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU * 1e3
}

/// Boltzmann constant over Planck constant, in GHz per kelvin.
pub const KB_OVER_H_GHZ_PER_K: f64 = 20.836_619_12;

/// Temperature in millikelvin → `k_B T / ħ` in rad/ns.
pub fn kbt_from_millikelvin(t_mk: f64) -> f64 {
    ghz(KB_OVER_H_GHZ_PER_K * t_mk * 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((to_ghz(ghz(6.0)) - 6.0).abs() < 1e-15);
        assert!((to_mhz(mhz(0.1)) - 0.1).abs() < 1e-15);
        assert!((mhz(1000.0) - ghz(1.0)).abs() < 1e-12);
    }
}

//! Unit conversions between user-facing quantities and internal SI values.
//!
//! Internally every frequency-like quantity is angular (rad/s) and every
//! time is in seconds. Interfaces quote ordinary frequencies in MHz and
//! times in ns/µs, so the 2π lives here and nowhere else. Decay and
//! dephasing rates are the exception: "rate in MHz" means 1/µs with no 2π,
//! matching how coherence times are usually quoted.

use core::f64::consts::TAU;

/// Ordinary frequency in MHz → angular frequency in rad/s.
pub fn mhz_to_rad(f_mhz: f64) -> f64 {
    TAU * 1e6 * f_mhz
}

/// Angular frequency in rad/s → ordinary frequency in MHz.
pub fn rad_to_mhz(w: f64) -> f64 {
    w / (TAU * 1e6)
}

pub fn ns_to_s(t_ns: f64) -> f64 {
    t_ns * 1e-9
}

pub fn s_to_ns(t_s: f64) -> f64 {
    t_s * 1e9
}

pub fn us_to_s(t_us: f64) -> f64 {
    t_us * 1e-6
}

pub fn s_to_us(t_s: f64) -> f64 {
    t_s * 1e6
}

/// Rate in 1/s → rate in "MHz" (1/µs), the unit used for Γ₁ and Γ_φ.
pub fn rate_to_mhz(r_per_s: f64) -> f64 {
    r_per_s * 1e-6
}

/// Rate in "MHz" (1/µs) → rate in 1/s.
pub fn mhz_to_rate(r_mhz: f64) -> f64 {
    r_mhz * 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.0, 1.0, -295.1, 17.7, 3.5e3] {
            assert!((rad_to_mhz(mhz_to_rad(x)) - x).abs() <= 1e-12 * x.abs());
        }
        assert!((ns_to_s(112.0) - 112e-9).abs() < 1e-22);
        assert!((s_to_us(45.5e-6) - 45.5).abs() < 1e-12);
        assert!((rate_to_mhz(mhz_to_rate(0.022)) - 0.022).abs() < 1e-18);
    }

    #[test]
    fn angular_convention() {
        // 1 MHz ordinary frequency is 2π·10⁶ rad/s.
        assert!((mhz_to_rad(1.0) - core::f64::consts::TAU * 1e6).abs() < 1e-6);
    }
}

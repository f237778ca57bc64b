//! Plain-text pulse interchange format and CSV exports.
//!
//! A pulse file is twelve `key = value` lines: gate_time_ns, omega0_mhz and
//! the ten Fourier coefficients a1..a5, b1..b5. Values are written with the
//! shortest representation that parses back to the identical f64, so a
//! write/read cycle is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use pulsekit_core::pulses::{FourierPulse, SampledPulse, FOURIER_TERMS};
use pulsekit_core::units::{mhz_to_rad, ns_to_s, rad_to_mhz, s_to_ns};

/// Shortest round-trip decimal form of an f64.
fn fmt_f64(v: f64) -> String {
    let mut s = format!("{v:?}");
    if s.ends_with(".0") {
        s.truncate(s.len() - 2);
    }
    s
}

pub fn pulse_to_string(pulse: &FourierPulse) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "gate_time_ns = {}",
        fmt_f64(s_to_ns(pulse.gate_time_tg))
    );
    let _ = writeln!(out, "omega0_mhz = {}", fmt_f64(rad_to_mhz(pulse.omega0)));
    for (k, a) in pulse.coeffs_a.iter().enumerate() {
        let _ = writeln!(out, "a{} = {}", k + 1, fmt_f64(*a));
    }
    for (k, b) in pulse.coeffs_b.iter().enumerate() {
        let _ = writeln!(out, "b{} = {}", k + 1, fmt_f64(*b));
    }
    out
}

pub fn write_pulse_file(path: &Path, pulse: &FourierPulse) -> Result<()> {
    std::fs::write(path, pulse_to_string(pulse))
        .with_context(|| format!("writing pulse file {}", path.display()))
}

pub fn pulse_from_string(text: &str) -> Result<FourierPulse> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`", lineno + 1);
        };
        let v: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad number", lineno + 1))?;
        map.insert(key.trim().to_string(), v);
    }
    let take = |map: &BTreeMap<String, f64>, key: &str| -> Result<f64> {
        map.get(key)
            .copied()
            .ok_or_else(|| anyhow::anyhow!("pulse file is missing `{key}`"))
    };
    let mut a = [0.0; FOURIER_TERMS];
    let mut b = [0.0; FOURIER_TERMS];
    for k in 0..FOURIER_TERMS {
        a[k] = take(&map, &format!("a{}", k + 1))?;
        b[k] = take(&map, &format!("b{}", k + 1))?;
    }
    FourierPulse::new(
        a,
        b,
        ns_to_s(take(&map, "gate_time_ns")?),
        mhz_to_rad(take(&map, "omega0_mhz")?),
    )
    .map_err(|e| anyhow::anyhow!("invalid pulse file: {e}"))
}

pub fn read_pulse_file(path: &Path) -> Result<FourierPulse> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading pulse file {}", path.display()))?;
    pulse_from_string(&text)
}

/// Two-column CSV of the sampled quadratures, in MHz.
pub fn sampled_to_csv(sampled: &SampledPulse) -> String {
    let mut out = String::from("omega_x_mhz,omega_y_mhz\n");
    for s in &sampled.samples {
        let _ = writeln!(
            out,
            "{},{}",
            fmt_f64(rad_to_mhz(s.omega_x)),
            fmt_f64(rad_to_mhz(s.omega_y))
        );
    }
    out
}

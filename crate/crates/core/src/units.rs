//! Physical constants and dB/linear conversions.
//!
//! Conventions used across the crate:
//! - power: dBm ↔ milliwatt, factor `10^(dBm/10)`
//! - power ratios: dB ↔ linear, factor `10^(dB/10)`
//! - field amplitudes: dB ↔ linear, factor `10^(dB/20)`
//!
//! Channel matrix entries are amplitude gains, so `|H|²` is a power ratio.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Serialization floor for quantities that are −∞ in dB (zero power).
/// Keeps CSV output finite; documented in the export format.
pub const DB_FLOOR: f64 = -400.0;

/// dBm to milliwatts.
#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Milliwatts to dBm. Zero or negative power maps to [`DB_FLOOR`].
#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    if mw > 0.0 {
        10.0 * mw.log10()
    } else {
        DB_FLOOR
    }
}

/// Power ratio in dB to linear.
#[inline]
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB. Zero or negative maps to [`DB_FLOOR`].
#[inline]
pub fn power_to_db(p: f64) -> f64 {
    if p > 0.0 {
        10.0 * p.log10()
    } else {
        DB_FLOOR
    }
}

/// Amplitude ratio in dB to linear.
#[inline]
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Linear amplitude ratio to dB. Zero or negative maps to [`DB_FLOOR`].
#[inline]
pub fn amplitude_to_db(a: f64) -> f64 {
    if a > 0.0 {
        20.0 * a.log10()
    } else {
        DB_FLOOR
    }
}

/// Wavelength in meters for a frequency in Hz.
#[inline]
pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

//! Decibel conversions. Everything inside the crate works in linear SI units;
//! these helpers are meant for configuration parsing and report output only.

/// Power ratio in dB to linear.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB. Returns `-inf` for zero.
#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Absolute power in dBm to watts.
#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[inline]
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// An attenuation quoted in dB turned into a multiplicative path gain `<= 1`.
///
/// `13 dB` of additional loss becomes `10^(-1.3)`.
#[inline]
pub fn attenuation_db_to_gain(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

//! Physical-layer model of the uplink.
//!
//! Two links terminate at the base station: the terrestrial link of the
//! paired ground user (Rayleigh fading, truncated channel-inversion power
//! control) and the air-to-cellular link of the UAV (probabilistic LoS/NLoS
//! path loss with Nakagami-m fading). This module holds the system
//! parameters, the LoS probability models, path loss, power control and the
//! exact distributions of both users' received powers at the base station.
//!
//! All quantities are linear SI (watts, metres); dB values are converted by
//! the caller through [`crate::units`].

use crate::error::{Error, Result};
use crate::special::regularized_upper_gamma_int;
use crate::units::{attenuation_db_to_gain, dbm_to_watts};

/// Scalar physical and link parameters of the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cell radius `R` in metres.
    pub cell_radius: f64,
    /// Base-station antenna height `h_B` in metres.
    pub bs_height: f64,
    /// Receiver noise power `σ²` in watts.
    pub noise_power: f64,
    /// UAV transmit power `P_A` in watts.
    pub aue_tx_power: f64,
    /// BS beam gain towards the UAV.
    pub aue_gain: f64,
    /// BS beam gain towards the ground user.
    pub tue_gain: f64,
    /// Cutoff (average received) power `ρ` of the ground user in watts.
    pub tue_cutoff_power: f64,
    /// Terrestrial path-loss exponent.
    pub alpha_tue: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    /// Additional LoS attenuation as a linear gain in `(0, 1]`.
    pub eta_los: f64,
    /// Additional NLoS attenuation as a linear gain in `(0, 1]`.
    pub eta_nlos: f64,
    /// Nakagami shape of the LoS link.
    pub m_los: u32,
    /// Nakagami shape of the NLoS link.
    pub m_nlos: u32,
    /// Bandwidth in Hz.
    pub bandwidth: f64,
}

impl SystemParams {
    /// Reference parameter set: 500 m cell, 30 m BS, -100 dBm noise, 0.1 W
    /// UAV, -75 dBm cutoff, exponents 3.5 / 2.2 / 3.5, 0 dB / 13 dB extra
    /// attenuation, Nakagami shapes 5 / 1, 10 MHz.
    pub fn reference() -> Self {
        Self {
            cell_radius: 500.0,
            bs_height: 30.0,
            noise_power: dbm_to_watts(-100.0),
            aue_tx_power: 0.1,
            aue_gain: 1.0,
            tue_gain: 1.0,
            tue_cutoff_power: dbm_to_watts(-75.0),
            alpha_tue: 3.5,
            alpha_los: 2.2,
            alpha_nlos: 3.5,
            eta_los: attenuation_db_to_gain(0.0),
            eta_nlos: attenuation_db_to_gain(13.0),
            m_los: 5,
            m_nlos: 1,
            bandwidth: 10e6,
        }
    }

    /// Checks every invariant on the parameter set.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cell_radius", self.cell_radius),
            ("noise_power", self.noise_power),
            ("aue_tx_power", self.aue_tx_power),
            ("aue_gain", self.aue_gain),
            ("tue_gain", self.tue_gain),
            ("alpha_tue", self.alpha_tue),
            ("alpha_los", self.alpha_los),
            ("alpha_nlos", self.alpha_nlos),
            ("bandwidth", self.bandwidth),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.bs_height >= 0.0) {
            return Err(Error::config(format!(
                "bs_height must be >= 0, got {}",
                self.bs_height
            )));
        }
        if !(self.tue_cutoff_power > self.noise_power) {
            return Err(Error::config(
                "tue cutoff power must exceed the noise power",
            ));
        }
        for (name, v) in [("eta_los", self.eta_los), ("eta_nlos", self.eta_nlos)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if self.m_los < 1 || self.m_nlos < 1 {
            return Err(Error::config("Nakagami shapes must be integers >= 1"));
        }
        Ok(())
    }

    /// Mean received power of the ground user, `μ = ρ G_T`.
    pub fn tue_mean_power(&self) -> f64 {
        self.tue_cutoff_power * self.tue_gain
    }

    /// Largest 3D ground-user distance, `sqrt(R² + h_B²)`.
    pub fn max_tue_distance(&self) -> f64 {
        self.cell_radius.hypot(self.bs_height)
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Built-up area description used by the ITU LoS model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosEnvironment {
    /// Ratio of land area covered by buildings.
    pub alpha: f64,
    /// Buildings per square kilometre.
    pub beta: f64,
    /// Rayleigh scale of the building heights in metres.
    pub delta: f64,
}

impl LosEnvironment {
    pub const SUBURBAN: Self = Self {
        alpha: 0.1,
        beta: 750.0,
        delta: 8.0,
    };
    pub const URBAN: Self = Self {
        alpha: 0.3,
        beta: 500.0,
        delta: 15.0,
    };
    pub const DENSE_URBAN: Self = Self {
        alpha: 0.5,
        beta: 300.0,
        delta: 20.0,
    };
    pub const URBAN_HIGH_RISE: Self = Self {
        alpha: 0.5,
        beta: 300.0,
        delta: 50.0,
    };

    pub fn new(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        let env = Self { alpha, beta, delta };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!(
                "ITU alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0) || !(self.delta > 0.0) {
            return Err(Error::config("ITU beta and delta must be positive"));
        }
        Ok(())
    }

    /// Number of buildings crossed minus one, `⌊r √(αβ)/1000 − 1⌋`.
    ///
    /// `beta` is per km² while `r` is in metres; the `/1000` bridges the units.
    pub fn crossed_buildings(&self, r_a: f64) -> i64 {
        (r_a * (self.alpha * self.beta).sqrt() / 1000.0 - 1.0).floor() as i64
    }
}

/// Line-of-sight probability model of the air-to-cellular link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LosModel {
    /// ITU built-up area model.
    Itu(LosEnvironment),
    /// 3GPP urban-macro model for UAVs with BS antennas above rooftops.
    ThreeGppUrban,
    /// A constant probability, independent of geometry.
    Fixed(f64),
}

/// Lowest (exclusive) and highest UAV altitudes covered by the 3GPP model.
pub const THREE_GPP_MIN_HEIGHT: f64 = 22.5;
pub const THREE_GPP_MAX_HEIGHT: f64 = 300.0;

/// LoS probability between the base station and a UAV at horizontal distance
/// `r_a` and altitude `h_a`.
pub fn los_probability(model: &LosModel, r_a: f64, h_a: f64, h_b: f64) -> Result<f64> {
    if !(r_a >= 0.0) {
        return Err(Error::domain(format!("horizontal distance {r_a} < 0")));
    }
    match *model {
        LosModel::Fixed(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(format!(
                    "fixed LoS probability {p} outside [0, 1]"
                )));
            }
            Ok(p)
        }
        LosModel::Itu(env) => Ok(itu_los(&env, r_a, h_a, h_b)),
        LosModel::ThreeGppUrban => three_gpp_los(r_a, h_a),
    }
}

fn itu_los(env: &LosEnvironment, r_a: f64, h_a: f64, h_b: f64) -> f64 {
    let m = env.crossed_buildings(r_a);
    if m < 0 {
        return 1.0;
    }
    let slots = (m + 1) as f64;
    let two_var = 2.0 * env.delta * env.delta;
    (0..=m)
        .map(|n| {
            // ray height above the n-th building
            let ray = h_a - (n as f64 + 0.5) * (h_a - h_b) / slots;
            (1.0 - (-(ray * ray) / two_var).exp()).clamp(0.0, 1.0)
        })
        .product()
}

fn three_gpp_los(r_a: f64, h_a: f64) -> Result<f64> {
    if !(h_a > THREE_GPP_MIN_HEIGHT && h_a <= THREE_GPP_MAX_HEIGHT) {
        return Err(Error::domain(format!(
            "3GPP urban LoS model needs 22.5 < h_A <= 300, got {h_a}"
        )));
    }
    if h_a > 100.0 {
        return Ok(1.0);
    }
    let lh = h_a.log10();
    let d1 = (294.05 * lh - 432.94).max(18.0);
    if r_a <= d1 {
        return Ok(1.0);
    }
    let p1 = 233.98 * lh - 0.95;
    let ratio = d1 / r_a;
    Ok((ratio + (-r_a / p1).exp() * (1.0 - ratio)).clamp(0.0, 1.0))
}

/// Positions of the ground user and the UAV relative to the base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry3D {
    pub r_t: f64,
    pub d_t: f64,
    pub r_a: f64,
    pub h_a: f64,
    pub d_a: f64,
}

impl Geometry3D {
    pub fn new(params: &SystemParams, r_t: f64, r_a: f64, h_a: f64) -> Result<Self> {
        if !(0.0..=params.cell_radius).contains(&r_t) {
            return Err(Error::domain(format!(
                "ground user distance {r_t} outside [0, R]"
            )));
        }
        if !(r_a >= 0.0) || !(h_a >= 0.0) {
            return Err(Error::domain("UAV distance and altitude must be >= 0"));
        }
        Ok(Self {
            r_t,
            d_t: r_t.hypot(params.bs_height),
            r_a,
            h_a,
            d_a: aue_distance(r_a, h_a, params.bs_height),
        })
    }
}

/// 3D UAV-to-BS distance `sqrt(r_a² + (h_a − h_b)²)`.
pub fn aue_distance(r_a: f64, h_a: f64, h_b: f64) -> f64 {
    r_a.hypot(h_a - h_b)
}

/// Air-to-cellular path gain `η d^{-α}` for the LoS or NLoS state.
pub fn a2c_path_loss(params: &SystemParams, d_a: f64, los: bool) -> Result<f64> {
    if !(d_a > 0.0) {
        return Err(Error::domain(format!("UAV distance {d_a} must be > 0")));
    }
    Ok(if los {
        params.eta_los * d_a.powf(-params.alpha_los)
    } else {
        params.eta_nlos * d_a.powf(-params.alpha_nlos)
    })
}

/// Transmit power of the ground user under truncated channel inversion,
/// `ρ d_T^{α_T}`; the average received power at the BS is exactly `ρ`.
pub fn tue_transmit_power(params: &SystemParams, d_t: f64) -> Result<f64> {
    let lo = params.bs_height;
    let hi = params.max_tue_distance();
    // one ulp of slack at the top: d_T is usually computed through hypot
    if !(d_t >= lo && d_t <= hi * (1.0 + f64::EPSILON)) {
        return Err(Error::domain(format!(
            "ground user distance {d_t} outside [{lo}, {hi}]"
        )));
    }
    Ok(params.tue_cutoff_power * d_t.powf(params.alpha_tue))
}

/// Density of the ground user's 3D distance, `2z/R²` on `[h_B, sqrt(R²+h_B²)]`.
pub fn tue_distance_pdf(params: &SystemParams, z: f64) -> f64 {
    if z >= params.bs_height && z <= params.max_tue_distance() {
        2.0 * z / (params.cell_radius * params.cell_radius)
    } else {
        0.0
    }
}

/// CDF of the ground user's received power: exponential with mean `ρ G_T`,
/// independent of the terrestrial path-loss exponent and of the user position.
pub fn tue_power_cdf(params: &SystemParams, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    -(-x / params.tue_mean_power()).exp_m1()
}

pub fn tue_power_pdf(params: &SystemParams, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let mu = params.tue_mean_power();
    (-x / mu).exp() / mu
}

/// Received-power distribution of the UAV at one trajectory point: a
/// LoS-weighted mixture of two Gamma laws with integer shapes and rates
/// `β_ν = m_ν / (P_A η_ν d^{-α_ν} G_A)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuePowerDistribution {
    pub p_los: f64,
    pub beta_los: f64,
    pub beta_nlos: f64,
    pub m_los: u32,
    pub m_nlos: u32,
}

impl AuePowerDistribution {
    pub fn new(params: &SystemParams, p_los: f64, d_a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_los) {
            return Err(Error::domain(format!(
                "LoS probability {p_los} outside [0, 1]"
            )));
        }
        let g_los = params.aue_tx_power * a2c_path_loss(params, d_a, true)? * params.aue_gain;
        let g_nlos = params.aue_tx_power * a2c_path_loss(params, d_a, false)? * params.aue_gain;
        Ok(Self {
            p_los,
            beta_los: params.m_los as f64 / g_los,
            beta_nlos: params.m_nlos as f64 / g_nlos,
            m_los: params.m_los,
            m_nlos: params.m_nlos,
        })
    }

    /// `(weight, rate, shape)` for the LoS and NLoS components.
    pub fn components(&self) -> [(f64, f64, u32); 2] {
        [
            (self.p_los, self.beta_los, self.m_los),
            (1.0 - self.p_los, self.beta_nlos, self.m_nlos),
        ]
    }

    /// `P(x_A > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.components()
            .iter()
            .map(|&(w, b, m)| {
                if w == 0.0 {
                    0.0
                } else {
                    w * regularized_upper_gamma_int(m, b * x)
                }
            })
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (1.0 - self.sf(x)).clamp(0.0, 1.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.components()
            .iter()
            .map(|&(w, b, m)| {
                if w == 0.0 {
                    0.0
                } else {
                    w * gamma_pdf(m, b, x)
                }
            })
            .sum()
    }

    /// Smallest `x` with `P(x_A > x) <= tail`, by bisection.
    pub fn upper_quantile(&self, tail: f64) -> f64 {
        let mut hi = self
            .components()
            .iter()
            .map(|&(_, b, m)| m as f64 / b)
            .fold(0.0, f64::max);
        while self.sf(hi) > tail {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sf(mid) > tail {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Gamma density with integer shape `m` and rate `b`.
fn gamma_pdf(m: u32, b: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 1 { b } else { 0.0 };
    }
    let y = b * x;
    let log = (m - 1) as f64 * y.ln() - y - (1..m).map(|k| (k as f64).ln()).sum::<f64>();
    b * log.exp()
}

/// CDF of the UAV received power (LoS/NLoS Gamma mixture) at distance `d_a`.
pub fn aue_power_cdf(params: &SystemParams, p_los: f64, d_a: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("power {x} < 0")));
    }
    Ok(AuePowerDistribution::new(params, p_los, d_a)?.cdf(x))
}

pub fn aue_power_pdf(params: &SystemParams, p_los: f64, d_a: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("power {x} < 0")));
    }
    Ok(AuePowerDistribution::new(params, p_los, d_a)?.pdf(x))
}

//! Closed-form rate coverage probabilities of the SIC decoding tree.
//!
//! The base station first decodes the UAV treating the ground user as
//! interference. On success the ground user is decoded interference-free
//! (event E1 / E2). On failure it tries the ground user with the full UAV
//! signal as interference and, if that works, decodes the UAV again from the
//! cleaned signal (E3 / E4); otherwise both are lost (E5).
//!
//! `p1`, `p2` and `p4` are exact finite sums of integer-shape incomplete
//! gamma functions. `p3` has a closed form when `θ_A θ_T >= 1`; below that the
//! third inequality of the event stays active and `p3` is integrated
//! numerically over the exact event.

use crate::channel::{aue_distance, los_probability, AuePowerDistribution, LosModel, SystemParams};
use crate::error::{Error, Result};
use crate::quad::{geometric_edges, integrate_pieces, QuadOptions};
use crate::special::regularized_upper_gamma_int;
use crate::trajectory::TrajectoryPoint;
use crate::units::db_to_linear;

/// Linear SINR thresholds of the UAV and the ground user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodingThresholds {
    pub theta_a: f64,
    pub theta_t: f64,
}

impl DecodingThresholds {
    pub fn new(theta_a: f64, theta_t: f64) -> Result<Self> {
        if !(theta_a >= 0.0) || !(theta_t >= 0.0) {
            return Err(Error::domain(format!(
                "thresholds must be >= 0, got ({theta_a}, {theta_t})"
            )));
        }
        Ok(Self { theta_a, theta_t })
    }

    pub fn from_db(theta_a_db: f64, theta_t_db: f64) -> Self {
        Self {
            theta_a: db_to_linear(theta_a_db),
            theta_t: db_to_linear(theta_t_db),
        }
    }

    /// Thresholds matching target rates (bit/s) over bandwidth `bandwidth`.
    pub fn from_rates(rate_a: f64, rate_t: f64, bandwidth: f64) -> Self {
        Self {
            theta_a: threshold_from_rate(rate_a, bandwidth),
            theta_t: threshold_from_rate(rate_t, bandwidth),
        }
    }
}

/// SINR threshold for a target rate: `2^(rate/B) − 1`.
pub fn threshold_from_rate(rate: f64, bandwidth: f64) -> f64 {
    (rate / bandwidth).exp2() - 1.0
}

/// Fading and power parameters that fully determine the joint law of the two
/// received powers at one trajectory point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiLinkParams {
    pub beta_los: f64,
    pub beta_nlos: f64,
    pub p_los: f64,
    pub m_los: u32,
    pub m_nlos: u32,
    /// Mean received power of the ground user, `ρ G_T`.
    pub mu: f64,
}

impl NakagamiLinkParams {
    pub fn new(params: &SystemParams, p_los: f64, d_a: f64) -> Result<Self> {
        let d = AuePowerDistribution::new(params, p_los, d_a)?;
        Ok(Self {
            beta_los: d.beta_los,
            beta_nlos: d.beta_nlos,
            p_los,
            m_los: d.m_los,
            m_nlos: d.m_nlos,
            mu: params.tue_mean_power(),
        })
    }

    /// Evaluates the LoS probability once for the point and builds the link.
    pub fn at_point(
        params: &SystemParams,
        los: &LosModel,
        point: &TrajectoryPoint,
    ) -> Result<Self> {
        let p_los = los_probability(los, point.r_a, point.h_a, params.bs_height)?;
        let d_a = aue_distance(point.r_a, point.h_a, params.bs_height);
        Self::new(params, p_los, d_a)
    }

    pub fn aue_distribution(&self) -> AuePowerDistribution {
        AuePowerDistribution {
            p_los: self.p_los,
            beta_los: self.beta_los,
            beta_nlos: self.beta_nlos,
            m_los: self.m_los,
            m_nlos: self.m_nlos,
        }
    }

    fn components(&self) -> impl Iterator<Item = (f64, f64, u32)> {
        self.aue_distribution()
            .components()
            .into_iter()
            .filter(|&(w, _, _)| w > 0.0)
    }
}

/// Which engine produced a [`CoverageReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Every probability from a closed form.
    Analytic,
    /// `p3` from numerical quadrature (`θ_A θ_T < 1`), the rest closed form.
    SemiAnalytic,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::SemiAnalytic => "semi_analytic",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Event probabilities of the decoding tree plus the derived coverage metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    /// Both users decoded: `p1 + p3`.
    pub p_tot: f64,
    /// UAV decoded: `p1 + p2 + p3`.
    pub p_aue: f64,
    /// Ground user decoded: `p1 + p3 + p4`.
    pub p_tue: f64,
    /// Neither decoded. For analytic reports `1 − (p1+p2+p3+p4)`; for Monte
    /// Carlo the observed E5 frequency.
    pub p5_residual: f64,
    pub method: Method,
    /// Monte Carlo only: Wald 99.7 % half-width of `p_tot`.
    pub ci_halfwidth: Option<f64>,
}

impl CoverageReport {
    /// Assembles aggregates from the four event probabilities.
    pub fn from_events(p: [f64; 4], method: Method) -> Self {
        let [p1, p2, p3, p4] = p.map(clamp_probability);
        let sum = p1 + p2 + p3 + p4;
        Self {
            p1,
            p2,
            p3,
            p4,
            p_tot: clamp_probability(p1 + p3),
            p_aue: clamp_probability(p1 + p2 + p3),
            p_tue: clamp_probability(p1 + p3 + p4),
            p5_residual: clamp_probability(1.0 - sum),
            method,
            ci_halfwidth: None,
        }
    }
}

fn clamp_probability(p: f64) -> f64 {
    debug_assert!(
        (-1e-9..=1.0 + 1e-9).contains(&p),
        "probability {p} leaves [0, 1] by more than 1e-9"
    );
    p.clamp(0.0, 1.0)
}

/// `∫ P(x_T >= θ_T σ²) ...` shared by `p1` and `p2`:
/// `e^{σ²/μ} Σ_ν w_ν / (μ c_ν) Σ_{i<m_ν} r_ν^i Q(i+1, k c_ν σ²)` with
/// `c_ν = β_ν θ_A + 1/μ` and `r_ν = β_ν θ_A / c_ν`.
fn step_one_sum(link: &NakagamiLinkParams, theta_a: f64, noise: f64, k: f64) -> f64 {
    let mu = link.mu;
    let scale = (noise / mu).exp();
    link.components()
        .map(|(w, b, m)| {
            let c = b * theta_a + 1.0 / mu;
            let r = b * theta_a / c;
            let inner: f64 = (0..m)
                .map(|i| r.powi(i as i32) * regularized_upper_gamma_int(i + 1, k * c * noise))
                .sum();
            w * inner / (mu * c)
        })
        .sum::<f64>()
        * scale
}

/// `P(x_T/σ² >= θ_T, x_A/(x_T+σ²) >= θ_A)`: UAV decoded first, then the
/// ground user after cancellation.
pub fn p1(link: &NakagamiLinkParams, th: &DecodingThresholds, noise: f64) -> f64 {
    step_one_sum(link, th.theta_a, noise, 1.0 + th.theta_t)
}

/// `P(x_T/σ² < θ_T, x_A/(x_T+σ²) >= θ_A)`: UAV decoded first, ground user lost.
pub fn p2(link: &NakagamiLinkParams, th: &DecodingThresholds, noise: f64) -> f64 {
    if th.theta_t == 0.0 {
        return 0.0;
    }
    let mu = link.mu;
    let scale = (noise / mu).exp();
    let theta_a = th.theta_a;
    link.components()
        .map(|(w, b, m)| {
            let c = b * theta_a + 1.0 / mu;
            let r = b * theta_a / c;
            let inner: f64 = (0..m)
                .map(|i| {
                    let lo = regularized_upper_gamma_int(i + 1, c * noise);
                    let hi = regularized_upper_gamma_int(i + 1, (1.0 + th.theta_t) * c * noise);
                    r.powi(i as i32) * (lo - hi)
                })
                .sum();
            w * inner / (mu * c)
        })
        .sum::<f64>()
        * scale
}

/// `E[e^{-θ_T(x_A+σ²)/μ} ; x_A ∈ A]` where `A` is `[θ_Aσ², ∞)` when `upper`
/// and `[0, θ_Aσ²)` otherwise.
fn tue_tail_against_aue(
    link: &NakagamiLinkParams,
    th: &DecodingThresholds,
    noise: f64,
    upper: bool,
) -> f64 {
    let mu = link.mu;
    let scale = (-th.theta_t * noise / mu).exp();
    link.components()
        .map(|(w, b, m)| {
            let c = b + th.theta_t / mu;
            let q = regularized_upper_gamma_int(m, th.theta_a * c * noise);
            let part = if upper { q } else { 1.0 - q };
            w * (b / c).powi(m as i32) * part
        })
        .sum::<f64>()
        * scale
}

/// `P(x_A >= θ_Aσ², x_T >= θ_T(x_A+σ²), x_A < θ_A(x_T+σ²))`: UAV fails the
/// first step, the ground user is decoded, then the UAV from the cleaned signal.
///
/// Closed form for `θ_A θ_T >= 1`, where the last inequality is implied by the
/// second; adaptive quadrature over the exact event otherwise.
pub fn p3(link: &NakagamiLinkParams, th: &DecodingThresholds, noise: f64) -> Result<f64> {
    if th.theta_a * th.theta_t >= 1.0 {
        Ok(tue_tail_against_aue(link, th, noise, true))
    } else {
        p3_semi_analytic(link, th, noise)
    }
}

/// Lower bound on the UAV tail mass the quadrature keeps.
const P3_TAIL: f64 = 1e-10;

fn p3_semi_analytic(link: &NakagamiLinkParams, th: &DecodingThresholds, noise: f64) -> Result<f64> {
    let (ta, tt, mu) = (th.theta_a, th.theta_t, link.mu);
    if ta == 0.0 {
        // x_A < 0 is impossible
        return Ok(0.0);
    }
    let dist = link.aue_distribution();
    let lo = ta * noise;
    let a_max = dist.upper_quantile(P3_TAIL);
    // past this point the ground-user tail factor is below e^-40
    let hi = a_max.min(ta * (noise + 40.0 * mu));
    if hi <= lo {
        return Ok(0.0);
    }
    let integrand = |a: f64| {
        let need = (tt * (a + noise)).max(a / ta - noise);
        (-need / mu).exp() * dist.pdf(a)
    };
    let mut edges = geometric_edges(lo, hi, 48);
    // where the two lower bounds on x_T cross
    let kink = ta * noise * (1.0 + tt) / (1.0 - ta * tt);
    if kink > lo && kink < hi {
        edges.push(kink);
        edges.sort_by(f64::total_cmp);
    }
    let opts = QuadOptions {
        abs_tol: 1e-8,
        rel_tol: 1e-10,
        max_intervals: 8000,
    };
    Ok(integrate_pieces(integrand, &edges, opts)?
        .value
        .clamp(0.0, 1.0))
}

/// The commonly quoted closed form for the `0 <= θ_A θ_T < 1` branch, kept verbatim
/// for side-by-side comparison. Not used by reports: its subtracted term
/// carries `σ⁴` and is not a probability.
pub fn p3_quoted_closed_form(
    link: &NakagamiLinkParams,
    th: &DecodingThresholds,
    noise: f64,
) -> f64 {
    let (ta, tt, mu) = (th.theta_a, th.theta_t, link.mu);
    let e = (noise / mu).exp();
    let term = |w: f64, b: f64, m: u32, denom_theta: f64| {
        w * e
            * (b / (b + 1.0 / (denom_theta * mu))).powi(m as i32)
            * regularized_upper_gamma_int(m, (b * ta + 1.0 / mu) * noise)
    };
    let los = term(link.p_los, link.beta_los, link.m_los, ta);
    let nlos = term(1.0 - link.p_los, link.beta_nlos, link.m_nlos, tt);
    let triangle = 0.5 * ta * tt * tt * noise.powi(2) * (1.0 + ta).powi(2) / (1.0 - ta * tt);
    los + nlos - triangle
}

/// `P(x_A < θ_Aσ², x_T >= θ_T(x_A+σ²))`: UAV fails both attempts, ground
/// user decoded.
pub fn p4(link: &NakagamiLinkParams, th: &DecodingThresholds, noise: f64) -> f64 {
    if th.theta_a == 0.0 {
        return 0.0;
    }
    tue_tail_against_aue(link, th, noise, false)
}

/// All event probabilities for a prepared link.
pub fn coverage_from_link(
    link: &NakagamiLinkParams,
    th: &DecodingThresholds,
    noise: f64,
) -> Result<CoverageReport> {
    let method = if th.theta_a * th.theta_t >= 1.0 || th.theta_a == 0.0 {
        Method::Analytic
    } else {
        Method::SemiAnalytic
    };
    let p = [
        p1(link, th, noise),
        p2(link, th, noise),
        p3(link, th, noise)?,
        p4(link, th, noise),
    ];
    Ok(CoverageReport::from_events(p, method))
}

/// Coverage probabilities of the UAV and its paired ground user at one
/// trajectory point.
pub fn coverage_report(
    params: &SystemParams,
    los: &LosModel,
    point: &TrajectoryPoint,
    th: &DecodingThresholds,
) -> Result<CoverageReport> {
    let link = NakagamiLinkParams::at_point(params, los, point)?;
    coverage_from_link(&link, th, params.noise_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LosEnvironment;
    use crate::special::upper_gamma_int;
    use crate::trajectory::{spiral_points, SpiralConfig};

    fn link(h: f64, n: usize) -> (SystemParams, NakagamiLinkParams) {
        let p = SystemParams::reference();
        let pts = spiral_points(&SpiralConfig::reference(h)).unwrap();
        let l =
            NakagamiLinkParams::at_point(&p, &LosModel::Itu(LosEnvironment::URBAN), &pts[n - 1])
                .unwrap();
        (p, l)
    }

    #[test]
    fn rate_thresholds() {
        assert_eq!(threshold_from_rate(0.0, 10e6), 0.0);
        assert_eq!(threshold_from_rate(10e6, 10e6), 1.0);
        let t = threshold_from_rate(34.6e6, 10e6);
        assert!((t - (2f64.powf(3.46) - 1.0)).abs() < 1e-12);
        assert!((t - 10.0).abs() < 0.01);
        // the quoted rate list matches the dB grid to within about half a dB
        let pairs = [(66.6e6, 20.0), (99.7e6, 30.0), (134.6e6, 40.0)];
        for (rate, db) in pairs {
            let t = crate::units::linear_to_db(threshold_from_rate(rate, 10e6));
            assert!((t - db).abs() < 0.6, "{rate} -> {t} dB");
        }
    }

    #[test]
    fn huge_theta_a_kills_uav_events() {
        let (p, l) = link(120.0, 1);
        let th = DecodingThresholds::new(1e12, 1.0).unwrap();
        assert!(p1(&l, &th, p.noise_power) < 1e-6);
        assert!(p2(&l, &th, p.noise_power) < 1e-6);
        assert!(p3(&l, &th, p.noise_power).unwrap() < 1e-6);
        let th = DecodingThresholds::new(1e12, 1e-3).unwrap();
        assert!(p3(&l, &th, p.noise_power).unwrap() < 1e-6);
    }

    #[test]
    fn zero_theta_t_collapses() {
        let (p, l) = link(25.0, 4);
        let th = DecodingThresholds::new(3.0, 0.0).unwrap();
        let s2 = p.noise_power;
        assert_eq!(p2(&l, &th, s2), 0.0);
        let d = l.aue_distribution();
        assert!((p4(&l, &th, s2) - d.cdf(3.0 * s2)).abs() < 1e-14);
        // p1 = P(x_A >= θ_A(x_T + σ²)) = E[sf(θ_A(x_T+σ²))]
        let expected = integrate_pieces(
            |t| (-t / l.mu).exp() / l.mu * d.sf(3.0 * (t + s2)),
            &geometric_edges(0.0, 60.0 * l.mu, 40),
            QuadOptions {
                abs_tol: 1e-13,
                rel_tol: 1e-12,
                max_intervals: 4000,
            },
        )
        .unwrap()
        .value;
        assert!((p1(&l, &th, s2) - expected).abs() < 1e-10);
    }

    #[test]
    fn zero_theta_a() {
        let (p, l) = link(25.0, 4);
        let th = DecodingThresholds::new(0.0, 2.0).unwrap();
        assert_eq!(p4(&l, &th, p.noise_power), 0.0);
        assert_eq!(p3(&l, &th, p.noise_power).unwrap(), 0.0);
    }

    #[test]
    fn zero_thresholds_always_decode() {
        let (p, _) = link(25.0, 1);
        let pts = spiral_points(&SpiralConfig::reference(25.0)).unwrap();
        let r = coverage_report(
            &p,
            &LosModel::Itu(LosEnvironment::URBAN),
            &pts[0],
            &DecodingThresholds::new(0.0, 0.0).unwrap(),
        )
        .unwrap();
        assert_eq!((r.p1, r.p2, r.p3, r.p4), (1.0, 0.0, 0.0, 0.0));
        assert_eq!((r.p_tot, r.p_aue, r.p_tue), (1.0, 1.0, 1.0));
    }

    #[test]
    fn p4_matches_lower_gamma_series() {
        let (p, l) = link(25.0, 10);
        let th = DecodingThresholds::from_db(40.0, 0.0);
        let s2 = p.noise_power;
        let direct = integrate_pieces(
            |a| (-th.theta_t * (a + s2) / l.mu).exp() * l.aue_distribution().pdf(a),
            &geometric_edges(0.0, th.theta_a * s2, 40),
            QuadOptions {
                abs_tol: 1e-14,
                rel_tol: 1e-12,
                max_intervals: 4000,
            },
        )
        .unwrap()
        .value;
        assert!((p4(&l, &th, s2) - direct).abs() < 1e-11);
    }

    #[test]
    fn p3_case_one_is_integral_of_tail() {
        let (p, l) = link(120.0, 10);
        let s2 = p.noise_power;
        let th = DecodingThresholds::new(1.0, 1.0).unwrap();
        let d = l.aue_distribution();
        let direct = integrate_pieces(
            |a| (-(a + s2) / l.mu).exp() * d.pdf(a),
            &geometric_edges(s2, d.upper_quantile(1e-14), 60),
            QuadOptions {
                abs_tol: 1e-14,
                rel_tol: 1e-12,
                max_intervals: 4000,
            },
        )
        .unwrap()
        .value;
        let closed = p3(&l, &th, s2).unwrap();
        assert!((closed - direct).abs() < 1e-10, "{closed} vs {direct}");
        // verbatim upper_gamma_int form of the same closed form
        let mu = l.mu;
        let verbatim = (-s2 / mu).exp()
            * l.components()
                .map(|(w, b, m)| {
                    let c = b + 1.0 / mu;
                    w / upper_gamma_int(m, 0.0).unwrap()
                        * b.powi(m as i32)
                        * c.powi(-(m as i32))
                        * upper_gamma_int(m, c * s2).unwrap()
                })
                .sum::<f64>();
        assert!((closed - verbatim).abs() < 1e-12);
    }

    #[test]
    fn p3_continuous_across_branch() {
        for &(h, n) in &[(25.0, 3), (120.0, 7), (60.0, 10)] {
            let (p, l) = link(h, n);
            for ta in [0.5, 3.0, 10.0, 100.0] {
                let tt = 1.0 / ta;
                let at = p3(&l, &DecodingThresholds::new(ta, tt).unwrap(), p.noise_power).unwrap();
                for f in [1.0 + 1e-6, 1.0 - 1e-6] {
                    let near = p3(
                        &l,
                        &DecodingThresholds::new(ta, tt * f).unwrap(),
                        p.noise_power,
                    )
                    .unwrap();
                    assert!(
                        (at - near).abs() <= 1e-4,
                        "h={h} n={n} ta={ta}: {at} vs {near}"
                    );
                }
            }
        }
    }

    #[test]
    fn quoted_closed_form_is_reported_not_used() {
        let (p, l) = link(25.0, 3);
        let th = DecodingThresholds::new(10.0, 0.01).unwrap();
        let canon = p3(&l, &th, p.noise_power).unwrap();
        let printed = p3_quoted_closed_form(&l, &th, p.noise_power);
        assert!(printed.is_finite());
        let r = coverage_from_link(&l, &th, p.noise_power).unwrap();
        assert_eq!(r.p3, canon);
        assert_eq!(r.method, Method::SemiAnalytic);
    }

    #[test]
    fn aggregates_and_partition() {
        for &(h, n) in &[(25.0, 1), (25.0, 10), (120.0, 5)] {
            let (p, l) = link(h, n);
            for (a, t) in [
                (0.0, 0.0),
                (10.0, 0.0),
                (40.0, 10.0),
                (0.0, -10.0),
                (20.0, -5.0),
            ] {
                let r = coverage_from_link(&l, &DecodingThresholds::from_db(a, t), p.noise_power)
                    .unwrap();
                let s = r.p1 + r.p2 + r.p3 + r.p4;
                assert!(s <= 1.0 + 1e-9);
                assert!((s + r.p5_residual - 1.0).abs() < 1e-9);
                assert_eq!(r.p_tot, r.p1 + r.p3);
                assert!(r.p_tot <= r.p_aue.min(r.p_tue) + 1e-15);
            }
        }
    }

    #[test]
    fn monotone_in_own_threshold() {
        let (p, l) = link(25.0, 6);
        let grid: Vec<f64> = (-10..=40).map(|d| d as f64).collect();
        let mut prev = f64::INFINITY;
        for &a in &grid {
            let r = coverage_from_link(&l, &DecodingThresholds::from_db(a, 0.0), p.noise_power)
                .unwrap();
            assert!(r.p_aue <= prev + 1e-9, "p_aue rose at θ_A = {a} dB");
            prev = r.p_aue;
        }
        let mut prev = f64::INFINITY;
        for &t in &grid {
            let r = coverage_from_link(&l, &DecodingThresholds::from_db(10.0, t), p.noise_power)
                .unwrap();
            assert!(r.p_tue <= prev + 1e-9, "p_tue rose at θ_T = {t} dB");
            prev = r.p_tue;
        }
    }
}

//! Monte Carlo oracle for the decoding tree.
//!
//! Every trial drops the ground user uniformly in the cell, draws both
//! fading gains and the LoS state of the UAV link, and walks the SIC decoding
//! tree. Trials are split across substreams of a counter-based generator
//! keyed by `(seed, stream index)`, so counts depend on `(seed, trials,
//! stream_count)` only, never on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{CoverageReport, DecodingThresholds, Method};
use crate::channel::{a2c_path_loss, aue_distance, los_probability, LosModel, SystemParams};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::trajectory::TrajectoryPoint;

/// Trial budget and stream layout of one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    /// Independent substreams; the remainder of `trials / stream_count` goes
    /// to the last stream.
    pub stream_count: u32,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            trials: 1_000_000,
            seed: 1,
            stream_count: 16,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::config("Monte Carlo needs at least one trial"));
        }
        if self.stream_count < 1 {
            return Err(Error::config("Monte Carlo needs at least one stream"));
        }
        Ok(())
    }

    fn stream_trials(&self, stream: u32) -> u64 {
        let base = self.trials / self.stream_count as u64;
        if stream + 1 == self.stream_count {
            base + self.trials % self.stream_count as u64
        } else {
            base
        }
    }
}

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Leaf of the decoding tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    /// UAV in step 1, ground user in step 2.
    E1,
    /// UAV in step 1, ground user lost.
    E2,
    /// UAV lost in step 1, ground user decoded, UAV in step 3.
    E3,
    /// UAV lost in steps 1 and 3, ground user decoded.
    E4,
    /// Nothing decoded.
    E5,
}

impl Event {
    pub const ALL: [Event; 5] = [Event::E1, Event::E2, Event::E3, Event::E4, Event::E5];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Outcome of one pass through the decoding tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub event: Event,
    /// UAV SINR with the ground user as interference.
    pub sinr_step1_aue: f64,
    /// Ground-user SINR in the second step: interference-free after a
    /// successful first step, with the UAV as interference otherwise.
    pub sinr_step2_tue: f64,
    /// UAV SNR after cancelling the ground user, only when step 3 is reached.
    pub sinr_step3_aue: Option<f64>,
}

/// Classifies one pair of received powers.
pub fn run_trial(x_a: f64, x_t: f64, th: &DecodingThresholds, noise: f64) -> TrialOutcome {
    let s1 = x_a / (x_t + noise);
    if s1 >= th.theta_a {
        let s2 = x_t / noise;
        let event = if s2 >= th.theta_t {
            Event::E1
        } else {
            Event::E2
        };
        return TrialOutcome {
            event,
            sinr_step1_aue: s1,
            sinr_step2_tue: s2,
            sinr_step3_aue: None,
        };
    }
    // error propagation: the UAV stays in the signal
    let s2 = x_t / (x_a + noise);
    if s2 < th.theta_t {
        return TrialOutcome {
            event: Event::E5,
            sinr_step1_aue: s1,
            sinr_step2_tue: s2,
            sinr_step3_aue: None,
        };
    }
    let s3 = x_a / noise;
    let event = if s3 >= th.theta_a {
        Event::E3
    } else {
        Event::E4
    };
    TrialOutcome {
        event,
        sinr_step1_aue: s1,
        sinr_step2_tue: s2,
        sinr_step3_aue: Some(s3),
    }
}

/// Per-event trial counts. Merging is plain addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventCounts(pub [u64; 5]);

impl EventCounts {
    pub fn record(&mut self, e: Event) {
        self.0[e.index()] += 1;
    }

    pub fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn get(&self, e: Event) -> u64 {
        self.0[e.index()]
    }
}

#[inline]
fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln()
}

/// Ground-user received power for a horizontal distance `r_t` and Rayleigh
/// power gain `omega`.
pub fn tue_received_power(params: &SystemParams, r_t: f64, omega: f64) -> f64 {
    let d_t = r_t.hypot(params.bs_height);
    let tx = params.tue_cutoff_power * d_t.powf(params.alpha_tue);
    tx * d_t.powf(-params.alpha_tue) * omega * params.tue_gain
}

/// Draws a uniform position in the cell (`r = R sqrt(U)`), applies channel
/// inversion and unit-mean Rayleigh fading.
pub fn sample_tue_received_power<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> f64 {
    let r_t = params.cell_radius * rng.random::<f64>().sqrt();
    let omega = exp1(rng);
    tue_received_power(params, r_t, omega)
}

/// Precomputed UAV sampler for one trajectory point.
#[derive(Debug, Clone, Copy)]
pub struct AueSampler {
    p_los: f64,
    mean_los: f64,
    mean_nlos: f64,
    m_los: u32,
    m_nlos: u32,
}

impl AueSampler {
    pub fn new(params: &SystemParams, p_los: f64, d_a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_los) {
            return Err(Error::domain(format!(
                "LoS probability {p_los} outside [0, 1]"
            )));
        }
        Ok(Self {
            p_los,
            mean_los: params.aue_tx_power * a2c_path_loss(params, d_a, true)? * params.aue_gain,
            mean_nlos: params.aue_tx_power * a2c_path_loss(params, d_a, false)? * params.aue_gain,
            m_los: params.m_los,
            m_nlos: params.m_nlos,
        })
    }

    /// Received power and LoS flag. The Gamma(m, 1/m) fading gain is the mean
    /// of `m` unit exponentials.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, bool) {
        let los = rng.random::<f64>() < self.p_los;
        let (mean, m) = if los {
            (self.mean_los, self.m_los)
        } else {
            (self.mean_nlos, self.m_nlos)
        };
        let gain = (0..m).map(|_| exp1(rng)).sum::<f64>() / m as f64;
        (mean * gain, los)
    }
}

pub fn sample_aue_received_power<R: Rng + ?Sized>(
    params: &SystemParams,
    p_los: f64,
    d_a: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    Ok(AueSampler::new(params, p_los, d_a)?.sample(rng))
}

/// Runs all trials and returns the raw event counts.
pub fn estimate_counts(
    params: &SystemParams,
    p_los: f64,
    d_a: f64,
    th: &DecodingThresholds,
    mc: &McConfig,
    exec: Execution,
) -> Result<EventCounts> {
    mc.validate()?;
    let sampler = AueSampler::new(params, p_los, d_a)?;
    let noise = params.noise_power;
    let per_stream = exec::map_range(exec, mc.stream_count as usize, |s| {
        let mut rng = substream(mc.seed, s as u64);
        let mut counts = EventCounts::default();
        for _ in 0..mc.stream_trials(s as u32) {
            let x_t = sample_tue_received_power(params, &mut rng);
            let (x_a, _) = sampler.sample(&mut rng);
            counts.record(run_trial(x_a, x_t, th, noise).event);
        }
        counts
    });
    Ok(per_stream
        .into_iter()
        .fold(EventCounts::default(), EventCounts::merge))
}

/// Wald half-width at three standard errors (≈ 99.7 %).
pub fn wald_halfwidth(p: f64, trials: u64) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Turns counts into a report with `method = monte_carlo`.
pub fn report_from_counts(counts: &EventCounts) -> CoverageReport {
    let n = counts.total() as f64;
    let f = |e: Event| counts.get(e) as f64 / n;
    let mut r = CoverageReport::from_events(
        [f(Event::E1), f(Event::E2), f(Event::E3), f(Event::E4)],
        Method::MonteCarlo,
    );
    r.p5_residual = f(Event::E5);
    r.ci_halfwidth = Some(wald_halfwidth(r.p_tot, counts.total()));
    r
}

/// Monte Carlo estimate of the coverage report at one trajectory point.
pub fn estimate(
    params: &SystemParams,
    los: &LosModel,
    point: &TrajectoryPoint,
    th: &DecodingThresholds,
    mc: &McConfig,
) -> Result<CoverageReport> {
    estimate_with(params, los, point, th, mc, Execution::default())
}

pub fn estimate_with(
    params: &SystemParams,
    los: &LosModel,
    point: &TrajectoryPoint,
    th: &DecodingThresholds,
    mc: &McConfig,
    exec: Execution,
) -> Result<CoverageReport> {
    let p_los = los_probability(los, point.r_a, point.h_a, params.bs_height)?;
    let d_a = aue_distance(point.r_a, point.h_a, params.bs_height);
    let counts = estimate_counts(params, p_los, d_a, th, mc, exec)?;
    Ok(report_from_counts(&counts))
}

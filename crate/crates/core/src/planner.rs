//! Per-point altitude search.
//!
//! For each transmission point the analytic `P_Tot` is evaluated on the whole
//! height grid. The grid is never cut short: the ITU LoS probability jumps
//! with the number of crossed buildings and `P_Tot` can fall again at large
//! heights, so the feasible set need not be an interval.

use crate::analysis::{coverage_report, DecodingThresholds};
use crate::channel::{LosModel, SystemParams};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::trajectory::TrajectoryPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightSearchConfig {
    pub h_min: f64,
    pub h_max: f64,
    pub h_step: f64,
    /// Required `P_Tot`.
    pub qos: f64,
}

impl Default for HeightSearchConfig {
    fn default() -> Self {
        Self {
            h_min: 25.0,
            h_max: 300.0,
            h_step: 1.0,
            qos: 0.9,
        }
    }
}

impl HeightSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_min < self.h_max) {
            return Err(Error::config("h_min must be below h_max"));
        }
        if !(self.h_step > 0.0) {
            return Err(Error::config("h_step must be positive"));
        }
        if !(self.qos >= 0.0 && self.qos < 1.0) {
            return Err(Error::config(format!(
                "qos must lie in [0, 1), got {}",
                self.qos
            )));
        }
        Ok(())
    }

    /// Heights `h_min + k h_step` up to `h_max`, computed without accumulation.
    pub fn grid(&self) -> Vec<f64> {
        let steps = ((self.h_max - self.h_min) / self.h_step + 1e-9).floor() as usize;
        (0..=steps)
            .map(|k| self.h_min + k as f64 * self.h_step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightResult {
    pub point_index: usize,
    /// Lowest grid height meeting the QoS target; `None` when infeasible.
    pub min_height: Option<f64>,
    pub best_height: f64,
    pub best_p_tot: f64,
}

/// `P_Tot` at each grid height for one point, in grid order.
pub fn p_tot_profile(
    params: &SystemParams,
    los: &LosModel,
    point: &TrajectoryPoint,
    th: &DecodingThresholds,
    cfg: &HeightSearchConfig,
    exec: Execution,
) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let grid = cfg.grid();
    exec::map(exec, &grid, |&h| {
        coverage_report(params, los, &point.at_height(h), th).map(|r| (h, r.p_tot))
    })
    .into_iter()
    .collect()
}

fn summarize(point_index: usize, profile: &[(f64, f64)], qos: f64) -> HeightResult {
    let min_height = profile.iter().find(|&&(_, p)| p >= qos).map(|&(h, _)| h);
    // strict comparison keeps the lowest height among ties
    let (best_height, best_p_tot) =
        profile
            .iter()
            .fold((f64::NAN, f64::NEG_INFINITY), |best, &(h, p)| {
                if p > best.1 {
                    (h, p)
                } else {
                    best
                }
            });
    HeightResult {
        point_index,
        min_height,
        best_height,
        best_p_tot,
    }
}

/// Minimum height meeting `cfg.qos` together with the best height.
pub fn min_height(
    params: &SystemParams,
    los: &LosModel,
    point: &TrajectoryPoint,
    th: &DecodingThresholds,
    cfg: &HeightSearchConfig,
) -> Result<HeightResult> {
    min_height_with(params, los, point, th, cfg, Execution::default())
}

pub fn min_height_with(
    params: &SystemParams,
    los: &LosModel,
    point: &TrajectoryPoint,
    th: &DecodingThresholds,
    cfg: &HeightSearchConfig,
    exec: Execution,
) -> Result<HeightResult> {
    let profile = p_tot_profile(params, los, point, th, cfg, exec)?;
    Ok(summarize(point.n, &profile, cfg.qos))
}

/// Height maximizing `P_Tot` on the grid; ties go to the lowest height.
pub fn best_height(
    params: &SystemParams,
    los: &LosModel,
    point: &TrajectoryPoint,
    th: &DecodingThresholds,
    cfg: &HeightSearchConfig,
) -> Result<(f64, f64)> {
    let r = min_height(params, los, point, th, cfg)?;
    Ok((r.best_height, r.best_p_tot))
}

/// Runs the search for every point of a trajectory.
pub fn plan_trajectory(
    params: &SystemParams,
    los: &LosModel,
    points: &[TrajectoryPoint],
    th: &DecodingThresholds,
    cfg: &HeightSearchConfig,
    exec: Execution,
) -> Result<Vec<HeightResult>> {
    // parallel over points, sequential inside
    exec::map(exec, points, |p| {
        min_height_with(params, los, p, th, cfg, Execution::Sequential)
    })
    .into_iter()
    .collect()
}

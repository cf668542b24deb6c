//! Monte Carlo sweeps over randomized arrival profiles.
//!
//! For each value of the swept variable (the source's average harvest rate or
//! the relay's peak power) a batch of profiles is drawn from the Poisson
//! generator, each is solved with the optimal policy, the two handicapped
//! baselines and the front-loaded upper bound, and the batch means land in
//! one CSV-ready row. Trials run in parallel; every trial derives its own RNG
//! stream from the base seed and the trial index, so results do not depend on
//! scheduling order.

use rayon::prelude::*;

use crate::baselines::{
    fixed_power_rmax, fixed_power_tmin, fixed_scheduling_rmax, fixed_scheduling_tmin,
    upper_bound_rmax, upper_bound_tmin,
};
use crate::profile::{generate_poisson, ArrivalGenConfig};
use crate::rate::RateFunction;
use crate::rmax::{rmax, RelayConstraints};
use crate::tmin::tmin;
use crate::{debug_log, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepObjective {
    /// Maximize delivered data over a fixed horizon; row values are bits.
    Rmax,
    /// Minimize the completion time of a fixed payload; row values are seconds.
    Tmin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Sweep the average harvest rate (W); the relay peak stays fixed.
    EhRate,
    /// Sweep the relay peak power (W); the harvest rate stays fixed.
    RelayPeak,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub objective: SweepObjective,
    pub variable: SweepVariable,
    /// Swept values in watts.
    pub values: Vec<f64>,
    pub trials: usize,
    /// Poisson arrival rate, 1/s.
    pub lambda_e_per_s: f64,
    /// Horizon of the fixed-horizon objective and of profile generation, s.
    pub horizon_s: f64,
    /// Payload of the fixed-data objective, bits.
    pub data_bits: f64,
    /// Average harvest rate when it is not the swept variable, W.
    pub avg_eh_rate_w: f64,
    /// Relay limits when the peak is not the swept variable.
    pub relay: RelayConstraints,
    pub seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("sweep needs at least one trial"));
        }
        if self.values.is_empty() {
            return Err(Error::invalid("sweep needs at least one value"));
        }
        if self.values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("sweep values must be positive"));
        }
        if !(self.lambda_e_per_s > 0.0) || !(self.horizon_s > 0.0) {
            return Err(Error::invalid("arrival rate and horizon must be positive"));
        }
        if self.objective == SweepObjective::Tmin && !(self.data_bits > 0.0) {
            return Err(Error::invalid("the fixed-data objective needs a positive payload"));
        }
        match self.variable {
            SweepVariable::EhRate => self.relay.validate(),
            SweepVariable::RelayPeak => {
                if !(self.avg_eh_rate_w > 0.0) {
                    return Err(Error::invalid("fixed harvest rate must be positive"));
                }
                Ok(())
            }
        }
    }
}

/// One averaged row of the sweep table.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub optimal: f64,
    pub fixed_scheduling: f64,
    pub fixed_power: f64,
    pub upper_bound: f64,
    pub trials_ok: usize,
}

/// CSV header matching [`SweepRow::to_csv_line`].
pub const CSV_HEADER: &str =
    "sweep_value,optimal,fixed_scheduling,fixed_power,upper_bound,trials_ok";

impl SweepRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.sweep_value,
            self.optimal,
            self.fixed_scheduling,
            self.fixed_power,
            self.upper_bound,
            self.trials_ok
        )
    }
}

struct TrialResult {
    optimal: f64,
    fixed_scheduling: f64,
    fixed_power: f64,
    upper_bound: f64,
}

/// SplitMix step; decorrelates per-trial RNG streams from (seed, indices).
fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn run_trial(
    cfg: &SweepConfig,
    sweep_value: f64,
    value_idx: usize,
    trial: usize,
    model: &dyn RateFunction,
) -> Result<TrialResult> {
    let (eh_rate, relay) = match cfg.variable {
        SweepVariable::EhRate => (sweep_value, cfg.relay),
        SweepVariable::RelayPeak => (
            cfg.avg_eh_rate_w,
            RelayConstraints {
                peak_power_w: Some(sweep_value),
                total_energy_j: cfg.relay.total_energy_j,
            },
        ),
    };
    let gen = ArrivalGenConfig {
        arrival_rate_per_s: cfg.lambda_e_per_s,
        energy_unit_j: eh_rate / cfg.lambda_e_per_s,
        horizon_s: cfg.horizon_s,
        seed: mix_seed(cfg.seed, value_idx as u64, trial as u64),
    };
    let profile = generate_poisson(&gen)?;
    match cfg.objective {
        SweepObjective::Rmax => Ok(TrialResult {
            optimal: rmax(&profile, cfg.horizon_s, &relay, model)?.throughput_bits,
            fixed_scheduling: fixed_scheduling_rmax(&profile, cfg.horizon_s, &relay, model)?.1,
            fixed_power: fixed_power_rmax(&profile, cfg.horizon_s, &relay, model)?.1,
            upper_bound: upper_bound_rmax(&profile, cfg.horizon_s, &relay, model)?,
        }),
        SweepObjective::Tmin => Ok(TrialResult {
            optimal: tmin(&profile, cfg.data_bits, &relay, model)?.completion_time_s,
            fixed_scheduling: fixed_scheduling_tmin(&profile, cfg.data_bits, &relay, model)?.1,
            fixed_power: fixed_power_tmin(&profile, cfg.data_bits, &relay, model)?.1,
            upper_bound: upper_bound_tmin(&profile, cfg.data_bits, &relay, model)?,
        }),
    }
}

/// Runs the sweep and returns one averaged row per swept value.
///
/// Failed trials (e.g. a draw whose harvest cannot carry the payload) are
/// dropped from the means and reflected in `trials_ok`.
pub fn run_sweep(cfg: &SweepConfig, model: &(dyn RateFunction + Sync)) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    cfg.values
        .iter()
        .enumerate()
        .map(|(value_idx, &sweep_value)| {
            let results: Vec<Option<TrialResult>> = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| match run_trial(cfg, sweep_value, value_idx, trial, model) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        debug_log(|| format!(
                            "trial {trial} at value {sweep_value} failed: {e}"
                        ));
                        None
                    }
                })
                .collect();
            let ok: Vec<&TrialResult> = results.iter().flatten().collect();
            if ok.is_empty() {
                return Err(Error::infeasible(format!(
                    "all {} trials failed at sweep value {sweep_value}",
                    cfg.trials
                )));
            }
            let n = ok.len() as f64;
            Ok(SweepRow {
                sweep_value,
                optimal: ok.iter().map(|r| r.optimal).sum::<f64>() / n,
                fixed_scheduling: ok.iter().map(|r| r.fixed_scheduling).sum::<f64>() / n,
                fixed_power: ok.iter().map(|r| r.fixed_power).sum::<f64>() / n,
                upper_bound: ok.iter().map(|r| r.upper_bound).sum::<f64>() / n,
                trials_ok: ok.len(),
            })
        })
        .collect()
}

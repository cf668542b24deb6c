//! Independent verification of schedules.
//!
//! Nothing in here trusts the solvers: feasibility is judged directly against
//! the raw constraints (energy causality, data causality, half duplex, relay
//! limits, horizon), and the brute-force optimizer explores a plain grid.
//! Powers are piecewise constant, so every constraint curve is piecewise
//! linear and checking at stage boundaries and arrival epochs is exact: the
//! cumulative-harvest staircase is flat between epochs, which makes each
//! epoch (approached from the left) the binding instant of its segment.

use serde::{Deserialize, Serialize};

use crate::dwf::compute_dwf;
use crate::policy::{Stage, StageKind, TransmissionPolicy};
use crate::profile::EhProfile;
use crate::rate::RateFunction;
use crate::rmax::RelayConstraints;
use crate::{Error, Result};

/// Relative slack applied to every inequality.
const CHECK_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    EnergyCausality,
    DataCausality,
    HalfDuplex,
    RelayPeak,
    RelayEnergy,
    Horizon,
}

/// One failed constraint: where, and by how much (J, bits, W, or s).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub time_s: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        FeasibilityReport { ok: violations.is_empty(), violations }
    }
}

fn exceeds(value: f64, limit: f64) -> bool {
    value > limit + CHECK_REL_TOL * value.abs().max(limit.abs()) + 1e-21
}

/// Checks a schedule against an arrival profile and the relay limits.
///
/// Constraint fields left as `None` are simply not checked, so hand-built
/// policies can be inspected without inventing limits. Violations are data,
/// not errors.
pub fn check_feasibility(
    policy: &TransmissionPolicy,
    profile: &EhProfile,
    constraints: &RelayConstraints,
    horizon_s: f64,
) -> Result<FeasibilityReport> {
    policy.validate_structure()?;
    profile.validate()?;
    let mut violations = Vec::new();

    // Half duplex: no two stages may overlap in time.
    for w in policy.stages.windows(2) {
        let overlap = w[0].end_s() - w[1].start_s;
        if overlap > 1e-12 * horizon_s.max(w[0].end_s()) {
            violations.push(Violation {
                kind: ViolationKind::HalfDuplex,
                time_s: w[1].start_s,
                magnitude: overlap,
            });
        }
    }

    // Horizon: every stage must fit the block.
    for s in &policy.stages {
        if exceeds(s.end_s(), horizon_s) {
            violations.push(Violation {
                kind: ViolationKind::Horizon,
                time_s: s.end_s(),
                magnitude: s.end_s() - horizon_s,
            });
        }
    }

    // Breakpoints where any piecewise-linear curve can attain its maximum.
    let mut checkpoints: Vec<f64> = policy
        .stages
        .iter()
        .flat_map(|s| [s.start_s, s.end_s()])
        .chain(profile.epochs_s.iter().copied())
        .chain(std::iter::once(horizon_s))
        .collect();
    checkpoints.sort_by(f64::total_cmp);
    checkpoints.dedup();

    for &t in &checkpoints {
        if t <= 0.0 {
            continue;
        }
        // Energy causality: consumption approaching `t` can only have used
        // packets that arrived strictly before `t`.
        let consumed = policy.source_energy_at(t);
        let available = profile.cumulative_energy_before(t);
        if exceeds(consumed, available) {
            violations.push(Violation {
                kind: ViolationKind::EnergyCausality,
                time_s: t,
                magnitude: consumed - available,
            });
        }
    }

    // Relay limits. (Data causality needs the rate curve and lives in
    // `check_feasibility_with_model`.)
    if let Some(peak) = constraints.peak_power_w {
        for s in &policy.stages {
            if s.kind == StageKind::Relay && s.duration_s > 0.0 && exceeds(s.power_w, peak) {
                violations.push(Violation {
                    kind: ViolationKind::RelayPeak,
                    time_s: s.start_s,
                    magnitude: s.power_w - peak,
                });
            }
        }
    }
    if let Some(budget) = constraints.total_energy_j {
        let spent = policy.relay_energy_at(f64::INFINITY);
        if exceeds(spent, budget) {
            violations.push(Violation {
                kind: ViolationKind::RelayEnergy,
                time_s: policy.end_time_s(),
                magnitude: spent - budget,
            });
        }
    }

    Ok(FeasibilityReport::from_violations(violations))
}

/// [`check_feasibility`] plus the data-causality check, which needs the rate
/// curve to turn stage powers into data.
pub fn check_feasibility_with_model(
    policy: &TransmissionPolicy,
    profile: &EhProfile,
    constraints: &RelayConstraints,
    horizon_s: f64,
    model: &dyn RateFunction,
) -> Result<FeasibilityReport> {
    let mut report = check_feasibility(policy, profile, constraints, horizon_s)?;
    let mut boundaries: Vec<f64> = policy.stages.iter().map(Stage::end_s).collect();
    boundaries.push(horizon_s);
    boundaries.sort_by(f64::total_cmp);
    boundaries.dedup();
    for &t in &boundaries {
        let relayed = policy.relay_data_at(t, model);
        let sent = policy.source_data_at(t, model);
        if exceeds(relayed, sent) {
            report.violations.push(Violation {
                kind: ViolationKind::DataCausality,
                time_s: t,
                magnitude: relayed - sent,
            });
        }
    }
    report.ok = report.violations.is_empty();
    Ok(report)
}

/// Data delivered to the destination by the end of the schedule.
pub fn evaluate_throughput(policy: &TransmissionPolicy, model: &dyn RateFunction) -> Result<f64> {
    policy.validate_structure()?;
    Ok(policy.relay_data_at(f64::INFINITY, model))
}

/// First time at which the relay has delivered `data_bits`.
pub fn completion_time(
    policy: &TransmissionPolicy,
    model: &dyn RateFunction,
    data_bits: f64,
) -> Result<f64> {
    policy.validate_structure()?;
    if data_bits < 0.0 {
        return Err(Error::invalid("negative data target"));
    }
    if data_bits == 0.0 {
        return Ok(0.0);
    }
    let mut delivered = 0.0;
    for s in &policy.stages {
        if s.kind != StageKind::Relay {
            continue;
        }
        let rate = model.rate_at(s.power_w);
        let stage_data = s.duration_s * rate;
        if delivered + stage_data >= data_bits {
            return Ok(s.start_s + (data_bits - delivered) / rate);
        }
        delivered += stage_data;
    }
    Err(Error::infeasible(format!(
        "policy delivers {delivered} bits, short of the {data_bits} requested"
    )))
}

/// Best relay data achievable in a window of `window_s` seconds with energy
/// `energy_j` and an optional peak. Spreading the energy evenly is optimal;
/// when the even rate would exceed the peak, the window runs at peak and the
/// surplus energy is simply unusable.
fn relay_window_data(
    window_s: f64,
    energy_j: f64,
    peak_w: Option<f64>,
    model: &dyn RateFunction,
) -> f64 {
    if window_s <= 0.0 || energy_j <= 0.0 {
        return 0.0;
    }
    let even = energy_j / window_s;
    match peak_w {
        Some(peak) if even > peak => window_s * model.rate_at(peak),
        _ => window_s * model.rate_at(even),
    }
}

/// Ground-truth throughput for small instances by plain grid search.
///
/// The schedule space is parameterized per water-filling interval by the
/// fraction of the interval given to the source and by the relay energy spent
/// in it; the value of an interval is the smaller of what the source sends
/// and what the relay can forward. Coupling across intervals is only the
/// relay budget, handled by dynamic programming over budget cells. Each
/// candidate is a feasible schedule of the relaxed front-loaded profile, so
/// the result is a lower bound on the optimum that approaches it as the grid
/// refines.
pub fn brute_force_rmax(
    profile: &EhProfile,
    horizon_s: f64,
    constraints: &RelayConstraints,
    model: &dyn RateFunction,
    resolution: f64,
) -> Result<f64> {
    if profile.len() > 4 {
        return Err(Error::TooLarge(format!("{} arrivals (max 4)", profile.len())));
    }
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::invalid(format!("bad resolution {resolution}")));
    }
    let steps = (1.0 / resolution).round() as usize;
    if steps > 4000 {
        return Err(Error::TooLarge(format!("resolution {resolution} needs {steps} cells")));
    }
    let d = compute_dwf(profile, horizon_s)?;
    let n = d.interval_count();
    if n > 3 {
        return Err(Error::TooLarge(format!("{n} water-filling intervals (max 3)")));
    }
    constraints.validate()?;
    let peak = constraints.peak_power_w;

    let source_data: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let length = d.interval_lengths_s[k];
            let energy = d.interval_energies_j[k];
            (0..=steps)
                .map(|i| {
                    if i == 0 {
                        0.0
                    } else {
                        let ts = length * i as f64 / steps as f64 * (1.0 - 1e-12);
                        ts * model.rate_at(energy / ts)
                    }
                })
                .collect()
        })
        .collect();

    let value = match constraints.total_energy_j {
        None => {
            // No budget coupling: intervals are independent.
            let peak = peak.expect("validated: at least one constraint");
            (0..n)
                .map(|k| {
                    let length = d.interval_lengths_s[k];
                    (0..=steps)
                        .map(|i| {
                            let ts = length * i as f64 / steps as f64;
                            let cap = (length - ts) * model.rate_at(peak);
                            source_data[k][i].min(cap)
                        })
                        .fold(0.0, f64::max)
                })
                .sum()
        }
        Some(budget) => {
            // value_at[k][j]: best value of interval k spending j budget cells.
            let cell = budget / steps as f64;
            let value_at: Vec<Vec<f64>> = (0..n)
                .map(|k| {
                    let length = d.interval_lengths_s[k];
                    (0..=steps)
                        .map(|j| {
                            let e = cell * j as f64;
                            (0..=steps)
                                .map(|i| {
                                    let ts = length * i as f64 / steps as f64;
                                    let cap = relay_window_data(length - ts, e, peak, model);
                                    source_data[k][i].min(cap)
                                })
                                .fold(0.0, f64::max)
                        })
                        .collect()
                })
                .collect();
            // DP over exact budget split; values rise with budget, so an
            // exact split is no worse than any partial one.
            let mut best = value_at[0].clone();
            for vk in value_at.iter().skip(1) {
                let mut next = vec![0.0; steps + 1];
                for (j, cell_best) in next.iter_mut().enumerate() {
                    for jk in 0..=j {
                        let v = best[j - jk] + vk[jk];
                        if v > *cell_best {
                            *cell_best = v;
                        }
                    }
                }
                best = next;
            }
            best[steps]
        }
    };
    Ok(value)
}

/// Convenience: checks a solver schedule against both the original profile
/// and its limits, returning `Err` if anything is flagged. Used in tests.
pub fn assert_feasible(
    policy: &TransmissionPolicy,
    profile: &EhProfile,
    constraints: &RelayConstraints,
    horizon_s: f64,
    model: &dyn RateFunction,
) -> Result<()> {
    let report = check_feasibility_with_model(policy, profile, constraints, horizon_s, model)?;
    if report.ok {
        Ok(())
    } else {
        Err(Error::internal(format!("infeasible schedule: {:?}", report.violations)))
    }
}

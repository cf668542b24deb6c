//! Fixed-horizon throughput maximization.
//!
//! The pipeline: decompose the harvest profile into water-filling intervals,
//! solve each interval for the split between source and relay time (and the
//! relay energy, when the relay is budget constrained), then expand the
//! per-interval plan into a stage schedule that respects the original arrival
//! times.
//!
//! Within one interval of length `L` carrying source energy `A`, a source
//! period `Ts` at power `A/Ts` must hand the relay exactly the data it can
//! forward in the remaining `L - Ts`:
//!
//! ```text
//! Ts * g(A/Ts) = (L - Ts) * g(Pr)
//! ```
//!
//! With a peak-limited relay `Pr` is pinned at the peak (transmitting below
//! peak only wastes relay time), and `Ts` is the unique root of the balance.
//! With a budget-limited relay the interval's relay energy `e` determines
//! both sides; the budget is split across intervals by equalizing the
//! marginal data per joule, which for this balance works out to
//!
//! ```text
//! dD/de = σ(Ps) g'(Pr) / (σ(Ps) + σ(Pr)),   σ(x) = g(x) - x g'(x)
//! ```
//!
//! a strictly decreasing function of `e`, so a single shared marginal value
//! pins every interval and a bisection on that value meets the budget.

use crate::dwf::{compute_dwf, DwfDecomposition};
use crate::numeric::{bisect_root, grow_until, rel_diff};
use crate::policy::{Stage, StageKind, TransmissionPolicy};
use crate::profile::EhProfile;
use crate::rate::RateFunction;
use crate::{debug_log, Error, Result};

/// Relative tolerance on meeting the relay budget when equalizing marginals.
const BUDGET_REL_TOL: f64 = 1e-10;

/// Relay-side limits. At least one must be present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayConstraints {
    /// Peak transmit power, W.
    pub peak_power_w: Option<f64>,
    /// Total energy budget, J.
    pub total_energy_j: Option<f64>,
}

impl RelayConstraints {
    pub fn peak(peak_power_w: f64) -> Self {
        RelayConstraints { peak_power_w: Some(peak_power_w), total_energy_j: None }
    }

    pub fn energy(total_energy_j: f64) -> Self {
        RelayConstraints { peak_power_w: None, total_energy_j: Some(total_energy_j) }
    }

    pub fn both(peak_power_w: f64, total_energy_j: f64) -> Self {
        RelayConstraints {
            peak_power_w: Some(peak_power_w),
            total_energy_j: Some(total_energy_j),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.peak_power_w.is_none() && self.total_energy_j.is_none() {
            return Err(Error::invalid("relay needs a peak power or an energy budget"));
        }
        if let Some(p) = self.peak_power_w {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::invalid(format!("relay peak power must be positive, got {p} W")));
            }
        }
        if let Some(e) = self.total_energy_j {
            if !e.is_finite() || e < 0.0 {
                return Err(Error::invalid(format!(
                    "relay energy budget must be nonnegative, got {e} J"
                )));
            }
        }
        Ok(())
    }
}

/// Optimum of one water-filling interval: how long the source talks, how much
/// energy the relay spends, and the two constant powers.
#[derive(Debug, Clone, Copy)]
pub struct IntervalSolution {
    pub interval_index: usize,
    /// Total source time in the interval, s.
    pub source_time_s: f64,
    /// Relay energy spent in the interval, J.
    pub relay_energy_j: f64,
    /// Source power while transmitting, W.
    pub source_power_w: f64,
    /// Relay power while transmitting, W.
    pub relay_power_w: f64,
}

impl IntervalSolution {
    /// Data moved through the interval (either hop, they balance).
    pub fn data_bits(&self, model: &dyn RateFunction) -> f64 {
        self.source_time_s * model.rate_at(self.source_power_w)
    }

    fn zero(k: usize) -> Self {
        IntervalSolution {
            interval_index: k,
            source_time_s: 0.0,
            relay_energy_j: 0.0,
            source_power_w: 0.0,
            relay_power_w: 0.0,
        }
    }
}

/// Root `Ts` of `Ts g(A/Ts) = (L - Ts) g(Pr)` for a fixed relay power.
fn balance_source_time_fixed_relay(
    length_s: f64,
    source_energy_j: f64,
    relay_power_w: f64,
    model: &dyn RateFunction,
) -> Result<f64> {
    let relay_rate = model.rate_at(relay_power_w);
    let eps = 1e-12 * length_s;
    // Zero tolerance: run the bisection down to f64 resolution. The balance
    // must hold to 1e-9 *relative to the interval's data*, which can be tiny.
    bisect_root(eps, length_s - eps, 0.0, |ts| {
        ts * model.rate_at(source_energy_j / ts) - (length_s - ts) * relay_rate
    })
}

/// Root `Ts` of the balance when the relay spends energy `e` over the whole
/// remainder of the interval: `Ts g(A/Ts) = (L - Ts) g(e / (L - Ts))`.
fn balance_source_time_fixed_relay_energy(
    length_s: f64,
    source_energy_j: f64,
    relay_energy_j: f64,
    model: &dyn RateFunction,
) -> Result<f64> {
    if relay_energy_j == 0.0 {
        return Ok(0.0);
    }
    let eps = 1e-12 * length_s;
    bisect_root(eps, length_s - eps, 0.0, |ts| {
        let relay_time = length_s - ts;
        ts * model.rate_at(source_energy_j / ts)
            - relay_time * model.rate_at(relay_energy_j / relay_time)
    })
}

/// Marginal data per joule of relay energy in one interval, at relay energy
/// `e`: `σ(Ps) g'(Pr) / (σ(Ps) + σ(Pr))`. Decreases strictly in `e` and tends
/// to `g'(0)` as `e -> 0`.
fn relay_energy_marginal(
    length_s: f64,
    source_energy_j: f64,
    relay_energy_j: f64,
    model: &dyn RateFunction,
) -> Result<f64> {
    if relay_energy_j == 0.0 {
        return Ok(model.derivative_at(0.0));
    }
    let ts = balance_source_time_fixed_relay_energy(length_s, source_energy_j, relay_energy_j, model)?;
    let relay_time = length_s - ts;
    let ps = source_energy_j / ts;
    let pr = relay_energy_j / relay_time;
    let sigma_s = model.tangent_intercept(ps);
    let sigma_r = model.tangent_intercept(pr);
    Ok(sigma_s * model.derivative_at(pr) / (sigma_s + sigma_r))
}

/// Relay energy at which the interval's marginal equals `mu`; 0 when even an
/// infinitesimal joule is worth less than `mu`.
fn relay_energy_for_marginal(
    length_s: f64,
    source_energy_j: f64,
    mu: f64,
    scale_j: f64,
    model: &dyn RateFunction,
) -> Result<f64> {
    if relay_energy_marginal(length_s, source_energy_j, 0.0, model)? <= mu {
        return Ok(0.0);
    }
    let hi = grow_until(scale_j, 80, |e| {
        relay_energy_marginal(length_s, source_energy_j, e, model).map_or(true, |m| m < mu)
    })?;
    bisect_root(0.0, hi, 1e-13 * scale_j.max(hi), |e| {
        relay_energy_marginal(length_s, source_energy_j, e, model)
            .map_or(f64::NAN, |m| m - mu)
    })
}

/// Per-interval optimum with a peak-limited relay: the relay transmits at
/// peak for the whole relay period and the source period solves the balance.
pub fn solve_power_constrained(
    d: &DwfDecomposition,
    peak_power_w: f64,
    model: &dyn RateFunction,
) -> Result<Vec<IntervalSolution>> {
    if peak_power_w == 0.0 {
        return Err(Error::infeasible("relay cannot forward: zero peak power"));
    }
    if !(peak_power_w > 0.0) || !peak_power_w.is_finite() {
        return Err(Error::invalid(format!("bad relay peak power {peak_power_w} W")));
    }
    (0..d.interval_count())
        .map(|k| {
            let length = d.interval_lengths_s[k];
            let energy = d.interval_energies_j[k];
            let ts = balance_source_time_fixed_relay(length, energy, peak_power_w, model)?;
            Ok(IntervalSolution {
                interval_index: k,
                source_time_s: ts,
                relay_energy_j: peak_power_w * (length - ts),
                source_power_w: energy / ts,
                relay_power_w: peak_power_w,
            })
        })
        .collect()
}

/// Per-interval optimum with a budget-limited relay: the budget is split so
/// each interval sees the same marginal data per joule, then each interval's
/// source period follows from the balance.
pub fn solve_energy_constrained(
    d: &DwfDecomposition,
    total_energy_j: f64,
    model: &dyn RateFunction,
) -> Result<Vec<IntervalSolution>> {
    if total_energy_j < 0.0 || !total_energy_j.is_finite() {
        return Err(Error::invalid(format!("bad relay energy budget {total_energy_j} J")));
    }
    let n = d.interval_count();
    if total_energy_j == 0.0 {
        return Ok((0..n).map(IntervalSolution::zero).collect());
    }

    let allocations = if n == 1 {
        vec![total_energy_j]
    } else {
        let scale = total_energy_j / n as f64;
        let alloc_for = |mu: f64| -> Result<Vec<f64>> {
            (0..n)
                .map(|k| {
                    relay_energy_for_marginal(
                        d.interval_lengths_s[k],
                        d.interval_energies_j[k],
                        mu,
                        scale,
                        model,
                    )
                })
                .collect()
        };
        let mut mu_hi = model.derivative_at(0.0);
        let mut mu_lo = mu_hi * 1e-6;
        while alloc_for(mu_lo)?.iter().sum::<f64>() < total_energy_j {
            mu_lo *= 0.25;
            if mu_lo < mu_hi * 1e-300 {
                return Err(Error::internal("marginal bracket collapsed"));
            }
        }
        let mut alloc = alloc_for(mu_lo)?;
        for _ in 0..200 {
            let mu = 0.5 * (mu_lo + mu_hi);
            let candidate = alloc_for(mu)?;
            let sum: f64 = candidate.iter().sum();
            if sum >= total_energy_j {
                mu_lo = mu;
                alloc = candidate;
            } else {
                mu_hi = mu;
                alloc = candidate;
            }
            if rel_diff(sum, total_energy_j) <= BUDGET_REL_TOL {
                break;
            }
        }
        // Close the residual exactly; the correction is within the bisection
        // tolerance so the equal-marginal property is preserved.
        let sum: f64 = alloc.iter().sum();
        if sum > 0.0 {
            let scale = total_energy_j / sum;
            for e in &mut alloc {
                *e *= scale;
            }
        }
        alloc
    };

    let sols = allocations
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            let length = d.interval_lengths_s[k];
            let energy = d.interval_energies_j[k];
            let ts = balance_source_time_fixed_relay_energy(length, energy, e, model)?;
            Ok(if ts == 0.0 {
                IntervalSolution::zero(k)
            } else {
                IntervalSolution {
                    interval_index: k,
                    source_time_s: ts,
                    relay_energy_j: e,
                    source_power_w: energy / ts,
                    relay_power_w: e / (length - ts),
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    for w in sols.windows(2) {
        if w[1].relay_power_w < w[0].relay_power_w * (1.0 - 1e-9) {
            return Err(Error::internal(format!(
                "relay powers not nondecreasing: {} then {}",
                w[0].relay_power_w, w[1].relay_power_w
            )));
        }
    }
    Ok(sols)
}

/// Per-interval optimum when the relay has both a peak power and an energy
/// budget.
///
/// Three phases: (1) solve budget-only — done if no interval exceeds the
/// peak; (2) solve peak-only — done if the relay energy fits the budget;
/// (3) pin a growing suffix of intervals to peak power, subtract their energy
/// from the budget and re-solve the prefix budget-only, stopping as soon as
/// the prefix respects the peak. Relay powers rise across intervals, so
/// pinning from the tail is where the peak binds first.
pub fn solve_both(
    d: &DwfDecomposition,
    constraints: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<Vec<IntervalSolution>> {
    constraints.validate()?;
    let (peak, budget) = match (constraints.peak_power_w, constraints.total_energy_j) {
        (Some(p), Some(e)) => (p, e),
        (Some(p), None) => return solve_power_constrained(d, p, model),
        (None, Some(e)) => return solve_energy_constrained(d, e, model),
        (None, None) => unreachable!("validated above"),
    };

    let energy_only = solve_energy_constrained(d, budget, model)?;
    if energy_only.iter().all(|s| s.relay_power_w <= peak * (1.0 + 1e-12)) {
        return Ok(energy_only);
    }

    let power_only = solve_power_constrained(d, peak, model)?;
    let power_only_energy: f64 = power_only.iter().map(|s| s.relay_energy_j).sum();
    if power_only_energy <= budget * (1.0 + 1e-12) {
        return Ok(power_only);
    }

    let n = d.interval_count();
    let mut last = energy_only;
    for pinned in 1..n {
        let split = n - pinned;
        let suffix = &power_only[split..];
        let suffix_energy: f64 = suffix.iter().map(|s| s.relay_energy_j).sum();
        let remaining = budget - suffix_energy;
        if remaining < 0.0 {
            debug_log(|| format!(
                "suffix of {pinned} peak-pinned intervals already exceeds the budget; \
                 returning the previous iterate"
            ));
            return Ok(last);
        }
        let prefix_decomp = DwfDecomposition {
            point_times_s: d.point_times_s[..split].to_vec(),
            interval_lengths_s: d.interval_lengths_s[..split].to_vec(),
            interval_energies_j: d.interval_energies_j[..split].to_vec(),
            single_hop_powers_w: d.single_hop_powers_w[..split].to_vec(),
            source_indices: d.source_indices[..split].to_vec(),
        };
        let prefix = solve_energy_constrained(&prefix_decomp, remaining, model)?;
        let mut sols = prefix;
        sols.extend(suffix.iter().copied());
        if sols[..split].iter().all(|s| s.relay_power_w <= peak * (1.0 + 1e-12)) {
            return Ok(sols);
        }
        last = sols;
    }
    debug_log(|| "suffix pinning exhausted without satisfying the peak; \
                  returning the last iterate"
        .to_string());
    Ok(last)
}

/// Dispatches on which relay constraints are present.
pub fn solve_intervals(
    d: &DwfDecomposition,
    constraints: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<Vec<IntervalSolution>> {
    solve_both(d, constraints, model)
}

fn check_solutions(d: &DwfDecomposition, sols: &[IntervalSolution], model: &dyn RateFunction) -> Result<()> {
    if sols.len() != d.interval_count() {
        return Err(Error::invalid(format!(
            "{} interval solutions for {} intervals",
            sols.len(),
            d.interval_count()
        )));
    }
    for (k, s) in sols.iter().enumerate() {
        if s.interval_index != k {
            return Err(Error::invalid("interval solutions out of order"));
        }
        let length = d.interval_lengths_s[k];
        let energy = d.interval_energies_j[k];
        if s.source_time_s == 0.0 {
            continue; // zero-throughput interval (empty relay budget)
        }
        if !(s.source_time_s > 0.0 && s.source_time_s < length) {
            return Err(Error::invalid(format!(
                "source time {} s outside (0, {length}) in interval {k}",
                s.source_time_s
            )));
        }
        if rel_diff(s.source_power_w * s.source_time_s, energy) > 1e-9 {
            return Err(Error::invalid(format!(
                "interval {k} does not exhaust its source energy"
            )));
        }
        let source_data = s.source_time_s * model.rate_at(s.source_power_w);
        let relay_data = (length - s.source_time_s) * model.rate_at(s.relay_power_w);
        if rel_diff(source_data, relay_data) > 1e-9 {
            return Err(Error::invalid(format!("interval {k} violates the data balance")));
        }
    }
    Ok(())
}

/// Expands per-interval optima into a stage schedule feasible for the
/// original arrival profile.
///
/// The one-pair-per-interval schedule is valid for the relaxed profile that
/// delivers interval energy up front; under the original profile a source
/// period may overdraw packets that arrive mid-interval. Whenever that
/// happens the source stops exactly when its buffer empties, the relay
/// forwards what was sent (its period scaled by `(L - Ts) / Ts`), and the
/// source resumes. The drain rate of the interval guarantees the resume point
/// is never before the arrival that caused the stop, so splitting terminates
/// with the same total source time, the same powers and the same throughput.
pub fn realize_policy(
    original: &EhProfile,
    d: &DwfDecomposition,
    sols: &[IntervalSolution],
    model: &dyn RateFunction,
) -> Result<TransmissionPolicy> {
    original.validate()?;
    check_solutions(d, sols, model)?;

    let mut stages = Vec::new();
    for (k, s) in sols.iter().enumerate() {
        if s.source_time_s == 0.0 {
            continue;
        }
        let start = d.interval_start_s(k);
        let length = d.interval_lengths_s[k];
        let ratio = (length - s.source_time_s) / s.source_time_s;
        let consumed_before = original.cumulative_energy_before(start).min(
            // Guard against float drift between prefix sums and stage math.
            original.total_energy_j(),
        );

        let mut remaining_source = s.source_time_s;
        let mut cursor = start;
        let mut spent = 0.0; // source energy spent inside this interval
        while remaining_source > 1e-15 * s.source_time_s {
            // Longest burst the buffer allows: every arrival after the cursor
            // caps the spending that may precede it, whether the burst would
            // end before the arrival or not. Caps only grow, so the first
            // binding epoch decides.
            let mut burst = remaining_source;
            for &t in &original.epochs_s {
                if t <= cursor {
                    continue;
                }
                let available = original.cumulative_energy_before(t) - consumed_before;
                let reach = burst.min(t - cursor);
                let would_spend = spent + s.source_power_w * reach;
                if would_spend > available * (1.0 + 1e-12) + 1e-21 {
                    burst = (available - spent) / s.source_power_w;
                    break;
                }
            }
            if !(burst > 0.0) {
                return Err(Error::internal(format!(
                    "empty source burst in interval {k}: no energy at t = {cursor}"
                )));
            }
            let burst = burst.min(remaining_source);
            stages.push(Stage {
                kind: StageKind::Source,
                start_s: cursor,
                duration_s: burst,
                power_w: s.source_power_w,
            });
            spent += s.source_power_w * burst;
            remaining_source -= burst;
            let relay_time = if remaining_source <= 1e-15 * s.source_time_s {
                // Last pair: close the interval exactly at its breakpoint.
                d.point_times_s[k] - (cursor + burst)
            } else {
                burst * ratio
            };
            stages.push(Stage {
                kind: StageKind::Relay,
                start_s: cursor + burst,
                duration_s: relay_time,
                power_w: s.relay_power_w,
            });
            cursor += burst + relay_time;
        }
    }
    TransmissionPolicy::new(stages)
}

/// Full throughput-maximization result.
#[derive(Debug, Clone)]
pub struct RmaxSolution {
    pub decomposition: DwfDecomposition,
    pub intervals: Vec<IntervalSolution>,
    pub policy: TransmissionPolicy,
    pub throughput_bits: f64,
}

/// Maximizes the data delivered by `horizon_s` and returns the schedule that
/// achieves it.
pub fn rmax(
    original: &EhProfile,
    horizon_s: f64,
    constraints: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<RmaxSolution> {
    constraints.validate()?;
    let d = compute_dwf(original, horizon_s)?;
    let intervals = solve_intervals(&d, constraints, model)?;
    let policy = realize_policy(original, &d, &intervals, model)?;
    let throughput_bits = intervals.iter().map(|s| s.data_bits(model)).sum();
    Ok(RmaxSolution { decomposition: d, intervals, policy, throughput_bits })
}

//! Completion-time minimization.
//!
//! Dual of the fixed-horizon problem: deliver a given amount of data as early
//! as possible. The horizon — and with it the water-filling decomposition —
//! is unknown up front, so the interval structure is discovered causally:
//!
//! * Peak-limited relay: the total relay airtime is pinned at
//!   `D / g(peak)`. Each round computes, from the energy seen so far, the
//!   earliest epoch by which a constant-power finish becomes affordable; if a
//!   constant-power plan to the implied finish time fits under the arrival
//!   staircase the search is done, otherwise the lowest-slope corner before
//!   that epoch is the next breakpoint, the finished portion of data and
//!   relay time is subtracted, and the profile is re-based there.
//!
//! * Budget-limited relay: a constant relay power spending the whole budget
//!   on exactly the target data yields a feasible finish time, hence an upper
//!   bracket; the exact answer is found by bisecting the horizon of the
//!   fixed-horizon solver until it delivers the target.

use crate::dwf::{compute_dwf, lowest_slope_corner, DwfDecomposition};
use crate::numeric::{bisect_root, grow_until, rel_diff};
use crate::policy::TransmissionPolicy;
use crate::profile::EhProfile;
use crate::rate::RateFunction;
use crate::rmax::{realize_policy, solve_intervals, IntervalSolution, RelayConstraints};
use crate::{debug_log, Error, Result};

/// Relative tolerance on completion-time bisections.
const TIME_REL_TOL: f64 = 1e-12;

/// Minimum-time solution: the finish time, the interval structure discovered
/// on the way, and the schedule that achieves it.
#[derive(Debug, Clone)]
pub struct TminResult {
    pub completion_time_s: f64,
    pub decomposition: DwfDecomposition,
    pub intervals: Vec<IntervalSolution>,
    pub policy: TransmissionPolicy,
}

impl TminResult {
    fn trivial() -> Self {
        TminResult {
            completion_time_s: 0.0,
            decomposition: DwfDecomposition {
                point_times_s: Vec::new(),
                interval_lengths_s: Vec::new(),
                interval_energies_j: Vec::new(),
                single_hop_powers_w: Vec::new(),
                source_indices: Vec::new(),
            },
            intervals: Vec::new(),
            policy: TransmissionPolicy::default(),
        }
    }
}

/// Energy a constant-power source needs to deliver `data_bits` when it may
/// transmit for `time_s` seconds in total.
fn constant_power_energy_need(data_bits: f64, time_s: f64, model: &dyn RateFunction) -> f64 {
    time_s * model.inverse_at(data_bits / time_s)
}

/// Finish time of a constant-power plan: source time `t - relay_time` spends
/// all of `energy_j` and moves exactly `data_bits`.
fn constant_power_finish(
    data_bits: f64,
    relay_time_s: f64,
    energy_j: f64,
    t_hi: f64,
    model: &dyn RateFunction,
) -> Result<f64> {
    let data_at = |t: f64| {
        let ts = t - relay_time_s;
        ts * model.rate_at(energy_j / ts)
    };
    debug_assert!(data_at(t_hi) >= data_bits * (1.0 - 1e-12));
    let lo = relay_time_s * (1.0 + 1e-15) + t_hi * 1e-15;
    bisect_root(lo, t_hi, 0.0, |t| data_at(t) - data_bits)
}

/// Would a single constant-power interval ending at `finish_s` fit under the
/// staircase of `work`? True when the lowest-slope corner of the truncated
/// profile is the terminal itself, i.e. the decomposition has one interval.
fn single_interval_fits(work: &EhProfile, finish_s: f64) -> bool {
    let n = work.epochs_s.iter().take_while(|&&t| t < finish_s).count();
    debug_assert!(n > 0);
    let mut prefix = vec![0.0; n];
    for i in 1..n {
        prefix[i] = prefix[i - 1] + work.amounts_j[i - 1];
    }
    let total: f64 = work.amounts_j[..n].iter().sum();
    let (_, _, idx) =
        lowest_slope_corner(&work.epochs_s[..n], &prefix, 0.0, 0.0, finish_s, total);
    idx == n
}

/// Minimizes the completion time against a peak-limited relay.
pub fn tmin_power_constrained(
    profile: &EhProfile,
    data_bits: f64,
    peak_power_w: f64,
    model: &dyn RateFunction,
) -> Result<TminResult> {
    profile.validate()?;
    if data_bits < 0.0 || !data_bits.is_finite() {
        return Err(Error::invalid(format!("bad data target {data_bits} bits")));
    }
    if data_bits == 0.0 {
        return Ok(TminResult::trivial());
    }
    if !(peak_power_w > 0.0) || !peak_power_w.is_finite() {
        return Err(Error::infeasible("relay cannot forward: zero peak power"));
    }
    let relay_rate = model.rate_at(peak_power_w);
    let marginal0 = model.derivative_at(0.0);

    // The working profile is re-derived from the original every round (with
    // breakpoints snapped to exact original epochs) so rebasing cannot
    // accumulate rounding drift against the arrival times.
    let mut origin = 0.0;
    let mut dropped = 0usize; // original epochs strictly before `origin`
    let mut remaining_data = data_bits;
    // Per discovered interval: (absolute end, length, energy, relay time).
    let mut pieces: Vec<(f64, f64, f64, f64)> = Vec::new();

    for _round in 0..profile.len() + 1 {
        let work = profile.shifted_from(origin);
        if work.is_empty() {
            return Err(Error::internal("re-based profile lost its arrivals"));
        }
        // Airtime still owed to the relay; derived from the data each round
        // so the pair cannot drift apart when the remainder gets tiny.
        let remaining_relay = remaining_data / relay_rate;
        // Earliest affordable constant-power finish: scan epochs past the
        // relay airtime, falling back to "all remaining energy, unbounded
        // time" when no listed epoch qualifies.
        let mut prefix = vec![0.0; work.len() + 1];
        for i in 0..work.len() {
            prefix[i + 1] = prefix[i] + work.amounts_j[i];
        }
        let total = prefix[work.len()];
        if remaining_data >= total * marginal0 {
            return Err(Error::infeasible(format!(
                "insufficient harvested energy: {remaining_data} bits need more than \
                 {total} J can ever carry"
            )));
        }
        let mut usable = total;
        let mut deadline: Option<f64> = None; // epoch bounding the finish
        for (i, &t) in work.epochs_s.iter().enumerate() {
            if t <= remaining_relay {
                continue;
            }
            if constant_power_energy_need(remaining_data, t - remaining_relay, model) <= prefix[i] {
                usable = prefix[i];
                deadline = Some(t);
                break;
            }
        }
        let finish_hi = match deadline {
            Some(t) => t,
            None => grow_until(remaining_relay * 2.0 + work.last_epoch_s() + 1.0, 200, |t| {
                let ts = t - remaining_relay;
                ts * model.rate_at(usable / ts) >= remaining_data
            })?,
        };
        let finish = constant_power_finish(remaining_data, remaining_relay, usable, finish_hi, model)?;

        // The plan stands only if its energy has actually arrived by the
        // finish and the constant-power line fits under the staircase.
        let arrived = work.cumulative_energy_before(finish);
        if usable <= arrived * (1.0 + 1e-12) && single_interval_fits(&work, finish) {
            debug_log(|| format!(
                "final: finish +{finish}s usable {usable}J relay {remaining_relay}s \
                 deadline {deadline:?}"
            ));
            let end = origin + finish;
            pieces.push((end, end - origin, usable, remaining_relay));
            break;
        }

        // The finish plan overdraws a mid-stream arrival: the next breakpoint
        // is the lowest-slope corner strictly before the deadline.
        let limit = deadline.unwrap_or(f64::INFINITY);
        let interior: Vec<usize> = (0..work.len())
            .filter(|&i| work.epochs_s[i] > 0.0 && work.epochs_s[i] < limit)
            .collect();
        if interior.is_empty() {
            return Err(Error::internal(
                "constant-power plan infeasible but no interior arrivals to split at",
            ));
        }
        // Corner search among interior epochs only: pass the last interior
        // epoch as terminal, which is itself an eligible candidate here.
        let last = *interior.last().unwrap();
        let (point_t, point_value, ret_idx) = lowest_slope_corner(
            &work.epochs_s[..=last],
            &prefix[..=last],
            0.0,
            0.0,
            work.epochs_s[last],
            prefix[last],
        );
        let chosen = ret_idx.min(last); // terminal sentinel means `last` itself
        let length = point_t;
        let energy = point_value;
        // Balance inside the finished interval: relay at peak for x seconds
        // forwards exactly what the source sends in `length - x`.
        let eps = 1e-12 * length;
        let x = bisect_root(eps, length - eps, 0.0, |x| {
            let ts = length - x;
            ts * model.rate_at(energy / ts) - x * relay_rate
        })?;
        if x >= remaining_relay {
            return Err(Error::internal(
                "interval relay time exceeds the remaining airtime",
            ));
        }
        debug_log(|| format!(
            "round: point at +{point_t}s energy {energy}J relay {x}s of {remaining_relay}s, \
             data left {remaining_data}"
        ));
        // Snap the breakpoint to the exact original epoch.
        let end = profile.epochs_s[dropped + chosen];
        pieces.push((end, end - origin, energy, x));
        remaining_data -= x * relay_rate;
        dropped += chosen;
        origin = end;
    }

    let completion = pieces.last().expect("at least the final interval").0;
    assemble(profile, data_bits, completion, pieces, peak_power_w, model)
}

fn assemble(
    profile: &EhProfile,
    data_bits: f64,
    completion_s: f64,
    pieces: Vec<(f64, f64, f64, f64)>,
    peak_power_w: f64,
    model: &dyn RateFunction,
) -> Result<TminResult> {
    let truncated = profile.truncated_before(completion_s)?;
    let decomposition = DwfDecomposition {
        point_times_s: pieces.iter().map(|p| p.0).collect(),
        interval_lengths_s: pieces.iter().map(|p| p.1).collect(),
        interval_energies_j: pieces.iter().map(|p| p.2).collect(),
        single_hop_powers_w: pieces.iter().map(|p| p.2 / p.1).collect(),
        source_indices: pieces
            .iter()
            .map(|p| truncated.epochs_s.iter().filter(|&&t| t < p.0).count())
            .collect(),
    };
    let intervals: Vec<IntervalSolution> = pieces
        .iter()
        .enumerate()
        .map(|(k, &(_, length, energy, relay_time))| {
            let ts = length - relay_time;
            IntervalSolution {
                interval_index: k,
                source_time_s: ts,
                relay_energy_j: peak_power_w * relay_time,
                source_power_w: energy / ts,
                relay_power_w: peak_power_w,
            }
        })
        .collect();
    let policy = realize_policy(&truncated, &decomposition, &intervals, model)?;
    let delivered: f64 = intervals.iter().map(|s| s.data_bits(model)).sum();
    if rel_diff(delivered, data_bits) > 1e-9 {
        return Err(Error::internal(format!(
            "schedule delivers {delivered} bits instead of {data_bits}"
        )));
    }
    Ok(TminResult {
        completion_time_s: completion_s,
        decomposition,
        intervals,
        policy,
    })
}

/// Constant relay power that spends exactly `budget_j` delivering
/// `data_bits`: the root of `(budget / P) g(P) = D`.
fn budget_constant_relay_power(
    budget_j: f64,
    data_bits: f64,
    model: &dyn RateFunction,
) -> Result<f64> {
    if data_bits >= budget_j * model.derivative_at(0.0) {
        return Err(Error::infeasible(format!(
            "relay energy insufficient: {budget_j} J cannot carry {data_bits} bits at any power"
        )));
    }
    let hi = grow_until(1e-9, 200, |p| (budget_j / p) * model.rate_at(p) < data_bits)?;
    bisect_root(0.0, hi, 1e-15 * hi.max(1.0), |p| {
        if p == 0.0 {
            budget_j * model.derivative_at(0.0) - data_bits
        } else {
            (budget_j / p) * model.rate_at(p) - data_bits
        }
    })
}

/// Minimizes the completion time against a budget-limited relay.
pub fn tmin_energy_constrained(
    profile: &EhProfile,
    data_bits: f64,
    budget_j: f64,
    model: &dyn RateFunction,
) -> Result<TminResult> {
    tmin_by_horizon_bisection(
        profile,
        data_bits,
        &RelayConstraints::energy(budget_j),
        model,
    )
}

/// Minimizes the completion time by bisecting the horizon of the
/// fixed-horizon solver until it delivers exactly the payload. Used whenever
/// the relay has an energy budget (alone or together with a peak).
fn tmin_by_horizon_bisection(
    profile: &EhProfile,
    data_bits: f64,
    constraints: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<TminResult> {
    profile.validate()?;
    if data_bits < 0.0 || !data_bits.is_finite() {
        return Err(Error::invalid(format!("bad data target {data_bits} bits")));
    }
    if data_bits == 0.0 {
        return Ok(TminResult::trivial());
    }
    let budget_j = constraints
        .total_energy_j
        .expect("horizon bisection is only used with an energy budget");
    if !(budget_j > 0.0) || !budget_j.is_finite() {
        return Err(Error::infeasible("relay cannot forward: zero energy budget"));
    }

    let mut relay_power = budget_constant_relay_power(budget_j, data_bits, model)?;
    if let Some(peak) = constraints.peak_power_w {
        // The peak may only be used here when it leaves budget to spare.
        debug_assert!(relay_power <= peak * (1.0 + 1e-12));
        relay_power = relay_power.min(peak);
    }
    // Forcing that constant relay power yields a feasible finish, so its
    // breakpoint grid brackets the true answer.
    let temp = tmin_power_constrained(profile, data_bits, relay_power, model)?;
    let grid = &temp.decomposition.point_times_s;

    let delivered_at = |t: f64| -> Result<f64> {
        let truncated = profile.truncated_before(t)?;
        let d = compute_dwf(&truncated, t)?;
        let sols = solve_intervals(&d, constraints, model)?;
        Ok(sols.iter().map(|s| s.data_bits(model)).sum())
    };

    // Integer bisection over the breakpoint grid for the finishing interval.
    let top = delivered_at(*grid.last().expect("nonempty grid"))?;
    if top < data_bits * (1.0 - 1e-9) {
        return Err(Error::internal(format!(
            "bracket horizon delivers {top} bits, below the {data_bits} target"
        )));
    }
    let mut lo_idx: isize = -1; // virtual point at t = 0 delivering nothing
    let mut hi_idx: isize = grid.len() as isize - 1;
    let mut hi_val = top;
    while hi_idx - lo_idx > 1 {
        let mid = (lo_idx + hi_idx) / 2;
        let val = delivered_at(grid[mid as usize])?;
        if val >= data_bits {
            hi_idx = mid;
            hi_val = val;
        } else {
            lo_idx = mid;
        }
    }

    // `hi_val` can sit a whisker below the target when the bracket horizon
    // itself is the answer and solver precision eats the difference.
    let completion = if hi_val < data_bits || rel_diff(hi_val, data_bits) <= 1e-12 {
        grid[hi_idx as usize]
    } else {
        let t_hi = grid[hi_idx as usize];
        let t_lo = if lo_idx < 0 { t_hi * 1e-9 } else { grid[lo_idx as usize] };
        bisect_root(t_lo, t_hi, TIME_REL_TOL * t_hi, |t| {
            delivered_at(t).map_or(f64::NAN, |v| v - data_bits)
        })?
    };

    let truncated = profile.truncated_before(completion)?;
    let decomposition = compute_dwf(&truncated, completion)?;
    let intervals = solve_intervals(&decomposition, constraints, model)?;
    let policy = realize_policy(&truncated, &decomposition, &intervals, model)?;
    let delivered: f64 = intervals.iter().map(|s| s.data_bits(model)).sum();
    if rel_diff(delivered, data_bits) > 1e-9 {
        return Err(Error::internal(format!(
            "schedule delivers {delivered} bits instead of {data_bits}"
        )));
    }
    Ok(TminResult {
        completion_time_s: completion,
        decomposition,
        intervals,
        policy,
    })
}

/// Minimizes the completion time, dispatching on the relay limits.
///
/// With both limits present, the constant relay power that would spend the
/// whole budget on the payload decides the regime: above the peak, the
/// peak-limited schedule applies (and provably spends less than the budget);
/// otherwise the horizon bisection runs with both limits enforced.
pub fn tmin(
    profile: &EhProfile,
    data_bits: f64,
    constraints: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<TminResult> {
    constraints.validate()?;
    match (constraints.peak_power_w, constraints.total_energy_j) {
        (Some(peak), None) => tmin_power_constrained(profile, data_bits, peak, model),
        (None, Some(_)) => tmin_by_horizon_bisection(profile, data_bits, constraints, model),
        (Some(peak), Some(budget)) => {
            if data_bits == 0.0 {
                return Ok(TminResult::trivial());
            }
            let constant = budget_constant_relay_power(budget, data_bits, model)?;
            if constant > peak {
                let result = tmin_power_constrained(profile, data_bits, peak, model)?;
                let spent: f64 = result.intervals.iter().map(|s| s.relay_energy_j).sum();
                if spent > budget * (1.0 + 1e-9) {
                    return Err(Error::internal(format!(
                        "peak-limited schedule spends {spent} J of a {budget} J budget"
                    )));
                }
                Ok(result)
            } else {
                tmin_by_horizon_bisection(profile, data_bits, constraints, model)
            }
        }
        (None, None) => unreachable!("validated above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rel_diff;
    use crate::oracle::assert_feasible;
    use crate::rate::RateModel;
    use crate::rmax::rmax;
    use proptest::prelude::*;

    fn model() -> RateModel {
        RateModel::default_awgn()
    }

    #[test]
    fn symmetric_closed_form_peak() {
        let p = EhProfile::new(vec![0.0], vec![1e-3]).unwrap();
        let r = tmin_power_constrained(&p, 1e6, 1e-3, &model()).unwrap();
        assert!(rel_diff(r.completion_time_s, 2.0) < 1e-9, "T = {}", r.completion_time_s);
        assert_eq!(r.intervals.len(), 1);
        assert!((r.intervals[0].source_time_s - 1.0).abs() < 1e-9);
        assert!(rel_diff(r.decomposition.horizon_s(), r.completion_time_s) < 1e-12);
    }

    #[test]
    fn symmetric_closed_form_budget() {
        let p = EhProfile::new(vec![0.0], vec![1e-3]).unwrap();
        let r = tmin_energy_constrained(&p, 1e6, 1e-3, &model()).unwrap();
        assert!(rel_diff(r.completion_time_s, 2.0) < 1e-6, "T = {}", r.completion_time_s);
    }

    #[test]
    fn zero_data_is_trivial() {
        let p = EhProfile::new(vec![0.0], vec![1e-3]).unwrap();
        let r = tmin_power_constrained(&p, 0.0, 1e-3, &model()).unwrap();
        assert_eq!(r.completion_time_s, 0.0);
        assert!(r.policy.is_empty());
        let r = tmin_energy_constrained(&p, 0.0, 1e-3, &model()).unwrap();
        assert_eq!(r.completion_time_s, 0.0);
    }

    #[test]
    fn insufficient_energy_is_detected() {
        let p = EhProfile::new(vec![0.0], vec![1e-9]).unwrap();
        let err = tmin_power_constrained(&p, 1e9, 1e-3, &model()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
        let err = tmin_energy_constrained(&p, 1e9, 1e-6, &model()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }

    #[test]
    fn mid_stream_arrival_is_used_when_it_helps() {
        // 1 mJ at 0 plus 1 mJ at 1.5 s; 1 Mbit against a 1 mW relay.
        // Finishing on the first packet alone takes 2 s; tapping the second
        // packet finishes around 1.66 s with two intervals.
        let p = EhProfile::new(vec![0.0, 1.5], vec![1e-3, 1e-3]).unwrap();
        let r = tmin_power_constrained(&p, 1e6, 1e-3, &model()).unwrap();
        assert_eq!(r.intervals.len(), 2);
        assert!(rel_diff(r.decomposition.point_times_s[0], 1.5) < 1e-12);
        assert!(
            r.completion_time_s < 1.67 && r.completion_time_s > 1.64,
            "T = {}",
            r.completion_time_s
        );
        // The discovered structure matches the hindsight decomposition.
        let truncated = p.truncated_before(r.completion_time_s).unwrap();
        let d = compute_dwf(&truncated, r.completion_time_s).unwrap();
        assert_eq!(d.interval_count(), r.decomposition.interval_count());
        for k in 0..d.interval_count() {
            assert!(rel_diff(d.point_times_s[k], r.decomposition.point_times_s[k]) < 1e-9);
            assert!(rel_diff(d.interval_energies_j[k], r.decomposition.interval_energies_j[k]) < 1e-9);
        }
    }

    #[test]
    fn late_energy_is_ignored_when_it_cannot_help() {
        // Second packet lands after the unassisted finish: stays one interval.
        let p = EhProfile::new(vec![0.0, 3.0], vec![1e-3, 1e-3]).unwrap();
        let r = tmin_power_constrained(&p, 1e6, 1e-3, &model()).unwrap();
        assert_eq!(r.intervals.len(), 1);
        assert!(rel_diff(r.completion_time_s, 2.0) < 1e-9);
    }

    #[test]
    fn dispatch_matches_single_constraint_paths() {
        let p = EhProfile::new(vec![0.0, 0.3], vec![1e-3, 2e-3]).unwrap();
        let m = model();
        let peak_only = tmin(&p, 0.8e6, &RelayConstraints::peak(2e-3), &m).unwrap();
        let direct = tmin_power_constrained(&p, 0.8e6, 2e-3, &m).unwrap();
        assert_eq!(peak_only.completion_time_s, direct.completion_time_s);

        let budget_only = tmin(&p, 0.8e6, &RelayConstraints::energy(1e-3), &m).unwrap();
        let direct = tmin_energy_constrained(&p, 0.8e6, 1e-3, &m).unwrap();
        assert_eq!(budget_only.completion_time_s, direct.completion_time_s);

        // Loose peak above the constant relay power: budget path wins.
        let both = tmin(&p, 0.8e6, &RelayConstraints::both(1.0, 1e-3), &m).unwrap();
        assert_eq!(both.completion_time_s, budget_only.completion_time_s);
        // Tight peak below it: peak path wins and fits the budget.
        let both = tmin(&p, 0.8e6, &RelayConstraints::both(0.5e-3, 10.0), &m).unwrap();
        let direct = tmin_power_constrained(&p, 0.8e6, 0.5e-3, &m).unwrap();
        assert_eq!(both.completion_time_s, direct.completion_time_s);
    }

    fn arb_instance() -> impl Strategy<Value = (EhProfile, f64)> {
        (1usize..5).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.05f64..0.6, n - 1),
                proptest::collection::vec(0.3e-3f64..3e-3, n),
                0.1f64..1.2,
            )
                .prop_map(|(gaps, amounts, data_scale)| {
                    let mut epochs = vec![0.0];
                    for g in gaps {
                        epochs.push(epochs.last().unwrap() + g);
                    }
                    let data = 1e6 * data_scale;
                    (EhProfile::new(epochs, amounts).unwrap(), data)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip_with_rmax_peak((p, data) in arb_instance(), peak in 0.5e-3f64..4e-3) {
            let m = model();
            // Stay well inside the source's asymptotic capacity E * g'(0).
            let data = data.min(0.4 * p.total_energy_j() * m.derivative_at(0.0));
            let r = tmin_power_constrained(&p, data, peak, &m).unwrap();
            let back = rmax(
                &p.truncated_before(r.completion_time_s).unwrap(),
                r.completion_time_s,
                &RelayConstraints::peak(peak),
                &m,
            ).unwrap();
            prop_assert!(rel_diff(back.throughput_bits, data) < 1e-6,
                "round trip {} vs {}", back.throughput_bits, data);
            // Minimality: a slightly shorter horizon cannot deliver the data.
            let shorter = r.completion_time_s * (1.0 - 1e-4);
            if let Ok(trunc) = p.truncated_before(shorter) {
                let less = rmax(&trunc, shorter, &RelayConstraints::peak(peak), &m).unwrap();
                prop_assert!(less.throughput_bits < data);
            }
            // The schedule itself is feasible.
            assert_feasible(
                &r.policy,
                &p,
                &RelayConstraints::peak(peak),
                r.completion_time_s,
                &m,
            ).unwrap();
        }

        #[test]
        fn round_trip_with_rmax_budget((p, data) in arb_instance(), budget in 0.3e-3f64..3e-3) {
            let m = model();
            let cap = p.total_energy_j().min(budget) * m.derivative_at(0.0);
            let data = data.min(0.4 * cap);
            let r = tmin_energy_constrained(&p, data, budget, &m).unwrap();
            let back = rmax(
                &p.truncated_before(r.completion_time_s).unwrap(),
                r.completion_time_s,
                &RelayConstraints::energy(budget),
                &m,
            ).unwrap();
            prop_assert!(rel_diff(back.throughput_bits, data) < 1e-6);
            assert_feasible(
                &r.policy,
                &p,
                &RelayConstraints::energy(budget),
                r.completion_time_s,
                &m,
            ).unwrap();
        }

        #[test]
        fn discovered_structure_matches_hindsight((p, data) in arb_instance(), peak in 0.5e-3f64..4e-3) {
            let m = model();
            let data = data.min(0.4 * p.total_energy_j() * m.derivative_at(0.0));
            let r = tmin_power_constrained(&p, data, peak, &m).unwrap();
            let truncated = p.truncated_before(r.completion_time_s).unwrap();
            let d = compute_dwf(&truncated, r.completion_time_s).unwrap();
            prop_assert_eq!(d.interval_count(), r.decomposition.interval_count());
            for k in 0..d.interval_count() {
                prop_assert!(rel_diff(d.point_times_s[k], r.decomposition.point_times_s[k]) < 1e-9);
                prop_assert!(
                    rel_diff(d.interval_energies_j[k], r.decomposition.interval_energies_j[k]) < 1e-9
                );
            }
            // Delivered data decomposes per interval as airtime * peak rate.
            let total: f64 = r.intervals.iter().map(|s| s.data_bits(&m)).sum();
            prop_assert!(rel_diff(total, data) < 1e-9);
        }
    }
}

//! Comparison policies and the non-harvesting upper bound.
//!
//! Two deliberately handicapped schedules quantify how much the joint
//! optimization buys:
//!
//! * *Fixed scheduling* keeps the two-phase layout — source talks first,
//!   relay forwards afterwards — but allocates power optimally inside each
//!   phase. For the fixed-horizon objective the phases are the two halves of
//!   the block; for the fixed-data objective the split point is moved until
//!   both phases carry the full payload.
//! * *Fixed power* keeps the optimal local alternation (source and relay
//!   exchange equal data inside every arrival interval) but pins the source
//!   to one transmit power, chosen so that the plan would spend the whole
//!   harvest; when the buffer runs dry the source stalls until the next
//!   arrival.
//!
//! The upper bound collapses the whole harvest into a single packet at the
//! origin, which dominates every profile pointwise, and solves that relaxed
//! instance exactly.

use crate::dwf::{compute_dwf, DwfDecomposition};
use crate::numeric::{bisect_root, grow_until};
use crate::policy::{Stage, StageKind, TransmissionPolicy};
use crate::profile::EhProfile;
use crate::rate::RateFunction;
use crate::rmax::{rmax, RelayConstraints};
use crate::tmin::tmin;
use crate::{Error, Result};

/// Which comparison policy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    FixedScheduling,
    FixedPower,
    NonEhUpperBound,
}

/// Relay power and airtime cap for a relay phase of `window_s` seconds.
///
/// Peak-limited: transmit at peak the whole window. Budget-limited: spread
/// the budget over the window. Both: spread unless that exceeds the peak, in
/// which case transmit at peak until the budget runs out.
fn relay_phase(window_s: f64, c: &RelayConstraints) -> (f64, f64) {
    match (c.peak_power_w, c.total_energy_j) {
        (Some(peak), None) => (peak, window_s),
        (None, Some(budget)) => (budget / window_s, window_s),
        (Some(peak), Some(budget)) => {
            let spread = budget / window_s;
            if spread <= peak {
                (spread, window_s)
            } else {
                (peak, budget / peak)
            }
        }
        (None, None) => unreachable!("constraints validated by callers"),
    }
}

/// Source stages of the single-hop optimal allocation over `[0, horizon)`.
fn single_hop_stages(profile: &EhProfile, horizon_s: f64) -> Result<(Vec<Stage>, DwfDecomposition)> {
    let truncated = profile.truncated_before(horizon_s)?;
    let d = compute_dwf(&truncated, horizon_s)?;
    let stages = (0..d.interval_count())
        .map(|k| Stage {
            kind: StageKind::Source,
            start_s: d.interval_start_s(k),
            duration_s: d.interval_lengths_s[k],
            power_w: d.single_hop_powers_w[k],
        })
        .collect();
    Ok((stages, d))
}

/// Two-phase schedule with an optimal power allocation inside each phase:
/// source drains the harvest over `[0, T/2)`, relay forwards over `[T/2, T)`.
pub fn fixed_scheduling_rmax(
    profile: &EhProfile,
    horizon_s: f64,
    c: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<(TransmissionPolicy, f64)> {
    profile.validate()?;
    c.validate()?;
    if !(horizon_s > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    let half = horizon_s / 2.0;
    let (mut stages, d) = single_hop_stages(profile, half)?;
    let source_data: f64 = (0..d.interval_count())
        .map(|k| d.interval_lengths_s[k] * model.rate_at(d.single_hop_powers_w[k]))
        .sum();

    let (relay_power, window_cap) = relay_phase(horizon_s - half, c);
    let relay_rate = model.rate_at(relay_power);
    let duration = if relay_rate > 0.0 {
        window_cap.min(source_data / relay_rate)
    } else {
        0.0
    };
    let throughput = duration * relay_rate;
    if duration > 0.0 {
        stages.push(Stage {
            kind: StageKind::Relay,
            start_s: half,
            duration_s: duration,
            power_w: relay_power,
        });
    }
    Ok((TransmissionPolicy::new(stages)?, throughput))
}

/// Source power at which forwarding-balanced alternation would spend the
/// whole harvest by the deadline: the root of `P * γ(P) * T = E` with
/// `γ(P) = g(Pr) / (g(P) + g(Pr))` the source's share of each interval.
fn balanced_fixed_power(
    total_energy_j: f64,
    horizon_s: f64,
    relay_rate: f64,
    model: &dyn RateFunction,
) -> Result<f64> {
    let spend = |p: f64| {
        let share = relay_rate / (model.rate_at(p) + relay_rate);
        p * share * horizon_s
    };
    let hi = grow_until(total_energy_j / horizon_s, 200, |p| spend(p) >= total_energy_j)?;
    bisect_root(hi * 1e-12, hi, 0.0, |p| spend(p) - total_energy_j)
}

struct AlternationOutcome {
    policy: TransmissionPolicy,
    delivered_bits: f64,
    completion_s: Option<f64>,
}

/// Simulates source/relay alternation at a pinned source power: inside each
/// arrival interval the two sides exchange equal data, the source stalls when
/// its buffer is empty, and the relay stops once `target_bits` are through
/// (when a target is given) or at the horizon.
fn alternate_at_fixed_power(
    profile: &EhProfile,
    horizon_s: f64, // f64::INFINITY when chasing a data target
    source_power_w: f64,
    relay_power_w: f64,
    relay_airtime_cap_s: f64,
    target_bits: Option<f64>,
    model: &dyn RateFunction,
) -> Result<AlternationOutcome> {
    let g_src = model.rate_at(source_power_w);
    let g_rel = model.rate_at(relay_power_w);
    let share = g_rel / (g_src + g_rel);
    let mut stages = Vec::new();
    let mut buffer = 0.0;
    let mut delivered = 0.0;
    let mut relay_left = relay_airtime_cap_s;
    let mut completion = None;

    let n = profile.len();
    'outer: for i in 0..n {
        let start = profile.epochs_s[i];
        if start >= horizon_s {
            break;
        }
        buffer += profile.amounts_j[i];
        let end = if i + 1 < n {
            profile.epochs_s[i + 1].min(horizon_s)
        } else if horizon_s.is_finite() {
            horizon_s
        } else {
            f64::INFINITY
        };
        // Balanced split of the interval, cut back by whatever runs out
        // first: the buffer, the relay's airtime, or the data target.
        let len = end - start;
        let mut src_time = if len.is_finite() { share * len } else { f64::INFINITY };
        src_time = src_time.min(buffer / source_power_w);
        if let Some(target) = target_bits {
            src_time = src_time.min((target - delivered) / g_src);
        }
        let mut rel_time = src_time * g_src / g_rel;
        if rel_time > relay_left {
            rel_time = relay_left;
            src_time = rel_time * g_rel / g_src;
        }
        if src_time <= 0.0 {
            continue; // stalled until the next arrival
        }
        stages.push(Stage {
            kind: StageKind::Source,
            start_s: start,
            duration_s: src_time,
            power_w: source_power_w,
        });
        stages.push(Stage {
            kind: StageKind::Relay,
            start_s: start + src_time,
            duration_s: rel_time,
            power_w: relay_power_w,
        });
        buffer -= src_time * source_power_w;
        relay_left -= rel_time;
        delivered += rel_time * g_rel;
        if let Some(target) = target_bits {
            if delivered >= target * (1.0 - 1e-12) {
                completion = Some(start + src_time + rel_time);
                break 'outer;
            }
        }
    }
    Ok(AlternationOutcome {
        policy: TransmissionPolicy::new(stages)?,
        delivered_bits: delivered,
        completion_s: completion,
    })
}

/// Alternating schedule with the source pinned to one power (chosen to spend
/// the whole harvest over the block) and equal data exchanged inside each
/// arrival interval.
pub fn fixed_power_rmax(
    profile: &EhProfile,
    horizon_s: f64,
    c: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<(TransmissionPolicy, f64)> {
    profile.validate()?;
    c.validate()?;
    if !(horizon_s > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    let usable = profile.cumulative_energy_before(horizon_s);
    let (relay_power, airtime_cap) = relay_phase(horizon_s / 2.0, c);
    let relay_rate = model.rate_at(relay_power);
    if relay_rate == 0.0 || usable == 0.0 {
        return Ok((TransmissionPolicy::default(), 0.0));
    }
    let source_power = balanced_fixed_power(usable, horizon_s, relay_rate, model)?;
    let truncated = profile.truncated_before(horizon_s)?;
    let outcome = alternate_at_fixed_power(
        &truncated,
        horizon_s,
        source_power,
        relay_power,
        airtime_cap,
        None,
        model,
    )?;
    Ok((outcome.policy, outcome.delivered_bits))
}

/// Throughput with the whole harvest available up front.
pub fn upper_bound_rmax(
    profile: &EhProfile,
    horizon_s: f64,
    c: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<f64> {
    profile.validate()?;
    Ok(rmax(&profile.collapsed(), horizon_s, c, model)?.throughput_bits)
}

/// Peak relay power and total airtime for delivering `data_bits`: the peak
/// when one is binding, else the constant power that spends the budget on
/// exactly the payload.
fn relay_for_target(
    data_bits: f64,
    c: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<(f64, f64)> {
    let constant = match c.total_energy_j {
        Some(budget) => {
            if data_bits >= budget * model.derivative_at(0.0) {
                return Err(Error::infeasible(format!(
                    "relay energy insufficient for {data_bits} bits"
                )));
            }
            let hi = grow_until(1e-9, 200, |p| (budget / p) * model.rate_at(p) < data_bits)?;
            Some(bisect_root(hi * 1e-15, hi, 0.0, |p| {
                (budget / p) * model.rate_at(p) - data_bits
            })?)
        }
        None => None,
    };
    let power = match (c.peak_power_w, constant) {
        (Some(peak), Some(constant)) => constant.min(peak),
        (Some(peak), None) => peak,
        (None, Some(constant)) => constant,
        (None, None) => unreachable!("constraints validated by callers"),
    };
    Ok((power, data_bits / model.rate_at(power)))
}

/// Smallest source phase that can send `data_bits`, found by bisecting the
/// single-hop optimum over the phase length.
fn min_source_phase(profile: &EhProfile, data_bits: f64, model: &dyn RateFunction) -> Result<f64> {
    if data_bits >= profile.total_energy_j() * model.derivative_at(0.0) {
        return Err(Error::infeasible(format!(
            "insufficient harvested energy for {data_bits} bits"
        )));
    }
    let sent_by = |s: f64| -> f64 {
        match profile
            .truncated_before(s)
            .and_then(|p| compute_dwf(&p, s))
        {
            Ok(d) => (0..d.interval_count())
                .map(|k| d.interval_lengths_s[k] * model.rate_at(d.single_hop_powers_w[k]))
                .sum(),
            Err(_) => 0.0,
        }
    };
    let hi = grow_until(profile.last_epoch_s() + 1.0, 200, |s| sent_by(s) >= data_bits)?;
    bisect_root(hi * 1e-15, hi, 0.0, |s| sent_by(s) - data_bits)
}

/// Two-phase completion: the source phase is just long enough to send the
/// payload, then the relay forwards all of it.
pub fn fixed_scheduling_tmin(
    profile: &EhProfile,
    data_bits: f64,
    c: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<(TransmissionPolicy, f64)> {
    profile.validate()?;
    c.validate()?;
    if data_bits == 0.0 {
        return Ok((TransmissionPolicy::default(), 0.0));
    }
    let split = min_source_phase(profile, data_bits, model)?;
    let (mut stages, _) = single_hop_stages(profile, split)?;
    let (relay_power, airtime) = relay_for_target(data_bits, c, model)?;
    stages.push(Stage {
        kind: StageKind::Relay,
        start_s: split,
        duration_s: airtime,
        power_w: relay_power,
    });
    Ok((TransmissionPolicy::new(stages)?, split + airtime))
}

/// Completion time of the pinned-source-power alternation; the pinned power
/// is chosen so the payload spends the whole harvest.
pub fn fixed_power_tmin(
    profile: &EhProfile,
    data_bits: f64,
    c: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<(TransmissionPolicy, f64)> {
    profile.validate()?;
    c.validate()?;
    if data_bits == 0.0 {
        return Ok((TransmissionPolicy::default(), 0.0));
    }
    let total = profile.total_energy_j();
    if data_bits >= total * model.derivative_at(0.0) {
        return Err(Error::infeasible(format!(
            "insufficient harvested energy for {data_bits} bits"
        )));
    }
    let (relay_power, airtime) = relay_for_target(data_bits, c, model)?;
    // Spend the whole harvest on the payload: P * D / g(P) = E.
    let hi = grow_until(1e-9, 200, |p| p * data_bits / model.rate_at(p) >= total)?;
    let source_power = bisect_root(hi * 1e-15, hi, 0.0, |p| {
        p * data_bits / model.rate_at(p) - total
    })?;
    let outcome = alternate_at_fixed_power(
        profile,
        f64::INFINITY,
        source_power,
        relay_power,
        airtime * (1.0 + 1e-12),
        Some(data_bits),
        model,
    )?;
    let completion = outcome.completion_s.ok_or_else(|| {
        Error::internal(format!(
            "fixed-power alternation stalled at {} of {data_bits} bits",
            outcome.delivered_bits
        ))
    })?;
    Ok((outcome.policy, completion))
}

/// Completion time with the whole harvest available up front.
pub fn upper_bound_tmin(
    profile: &EhProfile,
    data_bits: f64,
    c: &RelayConstraints,
    model: &dyn RateFunction,
) -> Result<f64> {
    profile.validate()?;
    Ok(tmin(&profile.collapsed(), data_bits, c, model)?.completion_time_s)
}

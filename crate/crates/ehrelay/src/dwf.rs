//! Single-hop directional water-filling decomposition.
//!
//! For a transmitter that must respect energy causality, the throughput-
//! optimal single-hop power allocation is piecewise constant with levels that
//! only ever increase, changing at epochs where every joule harvested so far
//! has been spent. Geometrically it is the tightest convex curve from the
//! origin to `(T, total energy)` that stays under the cumulative-harvest
//! staircase. The breakpoints of that curve split the horizon into intervals
//! with one power level each; the two-hop solvers work interval by interval
//! on exactly this decomposition.

use serde::{Deserialize, Serialize};

use crate::profile::EhProfile;
use crate::{Error, Result};

/// Relative tolerance under which two candidate slopes count as equal.
/// Ties are broken toward the later breakpoint so degenerate intervals merge.
pub(crate) const SLOPE_TIE_REL_TOL: f64 = 1e-12;

/// Breakpoint structure of the single-hop optimal allocation.
///
/// Interval `k` spans `[point_times[k-1], point_times[k])` (with the origin
/// before the first point), carries the energy that arrives inside that
/// half-open window and is drained at the constant rate
/// `single_hop_powers[k]`. The final point always sits at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwfDecomposition {
    /// Times of the power-change points; the last entry equals the horizon.
    pub point_times_s: Vec<f64>,
    /// Length of each interval.
    pub interval_lengths_s: Vec<f64>,
    /// Energy harvested within each interval.
    pub interval_energies_j: Vec<f64>,
    /// Drain rate of each interval, `energy / length`; strictly increasing.
    pub single_hop_powers_w: Vec<f64>,
    /// For every point, the number of profile epochs strictly before it.
    /// Equivalently: the cumulative harvest consumed at the point is the sum
    /// of the first `source_indices[k]` packets.
    pub source_indices: Vec<usize>,
}

impl DwfDecomposition {
    pub fn interval_count(&self) -> usize {
        self.point_times_s.len()
    }

    /// Horizon covered by the decomposition.
    pub fn horizon_s(&self) -> f64 {
        *self.point_times_s.last().expect("decomposition is nonempty")
    }

    /// Start time of interval `k`.
    pub fn interval_start_s(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.point_times_s[k - 1]
        }
    }

    /// Total energy moved by the decomposition.
    pub fn total_energy_j(&self) -> f64 {
        self.interval_energies_j.iter().sum()
    }
}

/// Picks the lowest-slope corner reachable from `(origin_t, consumed)`.
///
/// Candidates are, for each epoch after the origin and before the terminal,
/// the pre-arrival value of the staircase (a segment touching an epoch can
/// only have used packets that landed strictly earlier), plus the terminal
/// point itself. `prefix[i]` must hold the energy of the packets before
/// epoch `i`. Returns `(time, cumulative energy, epoch count before the
/// chosen point)`; the epoch count equals `epochs.len()` when the terminal
/// wins. Slope ties go to the latest candidate.
pub fn lowest_slope_corner(
    epochs: &[f64],
    prefix: &[f64], // prefix[i] = sum of amounts[..i]
    origin_t: f64,
    consumed: f64,
    terminal_t: f64,
    terminal_energy: f64,
) -> (f64, f64, usize) {
    let mut best_slope = (terminal_energy - consumed) / (terminal_t - origin_t);
    let mut best = (terminal_t, terminal_energy, epochs.len());
    // Scan later epochs first so that on a tie the earliest scanned (latest
    // in time) candidate is kept.
    for i in (0..epochs.len()).rev() {
        let t = epochs[i];
        if t <= origin_t || t >= terminal_t {
            continue;
        }
        let value = prefix[i]; // packets strictly before epoch i
        let slope = (value - consumed) / (t - origin_t);
        let scale = slope.abs().max(best_slope.abs()).max(f64::MIN_POSITIVE);
        if slope < best_slope && (best_slope - slope) / scale > SLOPE_TIE_REL_TOL {
            best_slope = slope;
            best = (t, value, i);
        }
    }
    best
}

/// Computes the water-filling decomposition of `profile` over `[0, horizon]`.
pub fn compute_dwf(profile: &EhProfile, horizon_s: f64) -> Result<DwfDecomposition> {
    profile.validate()?;
    if !(horizon_s > 0.0) || !horizon_s.is_finite() {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon_s} s")));
    }
    if horizon_s <= profile.last_epoch_s() {
        return Err(Error::invalid(format!(
            "horizon {horizon_s} s leaves no room after the last arrival at {} s",
            profile.last_epoch_s()
        )));
    }

    let n = profile.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + profile.amounts_j[i];
    }
    let total = prefix[n];

    let mut point_times = Vec::new();
    let mut lengths = Vec::new();
    let mut energies = Vec::new();
    let mut powers = Vec::new();
    let mut indices = Vec::new();

    let mut origin_t = 0.0;
    let mut consumed = 0.0;
    loop {
        let (t, value, idx) = lowest_slope_corner(
            &profile.epochs_s,
            &prefix[..n],
            origin_t,
            consumed,
            horizon_s,
            total,
        );
        let length = t - origin_t;
        let energy = value - consumed;
        debug_assert!(length > 0.0 && energy > 0.0);
        point_times.push(t);
        lengths.push(length);
        energies.push(energy);
        powers.push(energy / length);
        indices.push(idx);
        origin_t = t;
        consumed = value;
        if idx == n {
            break; // reached the terminal point
        }
    }

    let d = DwfDecomposition {
        point_times_s: point_times,
        interval_lengths_s: lengths,
        interval_energies_j: energies,
        single_hop_powers_w: powers,
        source_indices: indices,
    };
    debug_assert!(d.single_hop_powers_w.windows(2).all(|w| w[1] > w[0]));
    Ok(d)
}

/// The relaxed arrival profile induced by a decomposition: each interval's
/// energy is delivered in full at the interval's start. Its cumulative curve
/// dominates the original profile pointwise, and its own decomposition is the
/// input decomposition again.
pub fn dwf_eh_profile(d: &DwfDecomposition) -> EhProfile {
    let mut epochs = Vec::with_capacity(d.interval_count());
    epochs.push(0.0);
    epochs.extend_from_slice(&d.point_times_s[..d.interval_count() - 1]);
    EhProfile {
        epochs_s: epochs,
        amounts_j: d.interval_energies_j.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rel_diff;
    use proptest::prelude::*;

    fn mj(v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| x * 1e-3).collect()
    }

    #[test]
    fn single_arrival_gives_constant_power() {
        let p = EhProfile::new(vec![0.0], mj(&[4.0])).unwrap();
        let d = compute_dwf(&p, 2.0).unwrap();
        assert_eq!(d.interval_count(), 1);
        assert_eq!(d.point_times_s, vec![2.0]);
        assert!(rel_diff(d.interval_energies_j[0], 4e-3) < 1e-12);
        assert!(rel_diff(d.single_hop_powers_w[0], 2e-3) < 1e-12);
        assert_eq!(d.source_indices, vec![1]);
    }

    #[test]
    fn rising_arrivals_split_into_two_intervals() {
        let p = EhProfile::new(vec![0.0, 1.0], mj(&[1.0, 3.0])).unwrap();
        let d = compute_dwf(&p, 2.0).unwrap();
        assert_eq!(d.point_times_s, vec![1.0, 2.0]);
        assert!(rel_diff(d.interval_energies_j[0], 1e-3) < 1e-12);
        assert!(rel_diff(d.interval_energies_j[1], 3e-3) < 1e-12);
        assert!(rel_diff(d.single_hop_powers_w[0], 1e-3) < 1e-12);
        assert!(rel_diff(d.single_hop_powers_w[1], 3e-3) < 1e-12);
        assert_eq!(d.source_indices, vec![1, 2]);
    }

    #[test]
    fn front_loaded_arrivals_merge_into_one_interval() {
        let p = EhProfile::new(vec![0.0, 1.0], mj(&[3.0, 1.0])).unwrap();
        let d = compute_dwf(&p, 2.0).unwrap();
        assert_eq!(d.point_times_s, vec![2.0]);
        assert!(rel_diff(d.interval_energies_j[0], 4e-3) < 1e-12);
        assert!(rel_diff(d.single_hop_powers_w[0], 2e-3) < 1e-12);
    }

    #[test]
    fn horizon_errors() {
        let p = EhProfile::new(vec![0.0, 1.0], mj(&[1.0, 1.0])).unwrap();
        assert!(compute_dwf(&p, 0.0).is_err());
        assert!(compute_dwf(&p, 1.0).is_err());
        assert!(compute_dwf(&p, -3.0).is_err());
    }

    #[test]
    fn relaxed_profile_of_rising_case_is_the_original() {
        let p = EhProfile::new(vec![0.0, 1.0], mj(&[1.0, 3.0])).unwrap();
        let d = compute_dwf(&p, 2.0).unwrap();
        let relaxed = dwf_eh_profile(&d);
        assert_eq!(relaxed.epochs_s, vec![0.0, 1.0]);
        assert!(rel_diff(relaxed.amounts_j[0], 1e-3) < 1e-12);
        assert!(rel_diff(relaxed.amounts_j[1], 3e-3) < 1e-12);
    }

    #[test]
    fn relaxed_profile_of_merged_case_moves_energy_to_origin() {
        let p = EhProfile::new(vec![0.0, 1.0], mj(&[3.0, 1.0])).unwrap();
        let d = compute_dwf(&p, 2.0).unwrap();
        let relaxed = dwf_eh_profile(&d);
        assert_eq!(relaxed.epochs_s, vec![0.0]);
        assert!(rel_diff(relaxed.amounts_j[0], 4e-3) < 1e-12);
    }

    /// Discretized convex-programming oracle: maximize a sampled strictly
    /// concave utility of per-slot consumption under the staircase cap via a
    /// tiny projected water-level search, then recover slot powers. Used to
    /// cross-check the corner construction on small cases.
    fn greedy_taut_string(p: &EhProfile, horizon: f64, dt: f64) -> Vec<f64> {
        // Taut string by repeated corner search on a dense grid: equivalent
        // formulation, built independently from first principles.
        let mut powers = Vec::new();
        let mut t0 = 0.0;
        let mut c0 = 0.0;
        let total = p.total_energy_j();
        while t0 < horizon - 1e-12 {
            let mut best_slope = (total - c0) / (horizon - t0);
            let mut best_t = horizon;
            let mut best_v = total;
            let steps = ((horizon - t0) / dt).round() as usize;
            for s in 1..steps {
                let t = t0 + s as f64 * dt;
                let v = p.cumulative_energy_before(t);
                let slope = (v - c0) / (t - t0);
                if slope < best_slope - 1e-15 {
                    best_slope = slope;
                    best_t = t;
                    best_v = v;
                }
            }
            powers.push(best_slope);
            t0 = best_t;
            c0 = best_v;
        }
        powers
    }

    #[test]
    fn corner_construction_matches_dense_grid_oracle() {
        let cases = [
            (vec![0.0, 1.0], mj(&[1.0, 3.0]), 2.0),
            (vec![0.0, 1.0], mj(&[3.0, 1.0]), 2.0),
            (vec![0.0, 0.5, 0.9, 1.4], mj(&[2.0, 0.5, 4.0, 1.0]), 2.0),
        ];
        for (epochs, amounts, horizon) in cases {
            let p = EhProfile::new(epochs, amounts).unwrap();
            let d = compute_dwf(&p, horizon).unwrap();
            let oracle = greedy_taut_string(&p, horizon, 1e-3);
            assert_eq!(d.interval_count(), oracle.len(), "interval count");
            for (a, b) in d.single_hop_powers_w.iter().zip(&oracle) {
                assert!(rel_diff(*a, *b) < 1e-2, "power {a} vs oracle {b}");
            }
        }
    }

    fn arb_profile() -> impl Strategy<Value = (EhProfile, f64)> {
        (1usize..7).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.01f64..0.8, n - 1),
                proptest::collection::vec(0.1e-3f64..5e-3, n),
                0.05f64..1.0,
            )
                .prop_map(|(gaps, amounts, tail)| {
                    let mut epochs = vec![0.0];
                    for g in gaps {
                        epochs.push(epochs.last().unwrap() + g);
                    }
                    let horizon = epochs.last().unwrap() + tail;
                    (EhProfile::new(epochs, amounts).unwrap(), horizon)
                })
        })
    }

    proptest! {
        #[test]
        fn decomposition_invariants((p, horizon) in arb_profile()) {
            let d = compute_dwf(&p, horizon).unwrap();
            // Terminal point at the horizon, lengths and energies add up.
            prop_assert!(rel_diff(d.horizon_s(), horizon) < 1e-12);
            let len_sum: f64 = d.interval_lengths_s.iter().sum();
            prop_assert!(rel_diff(len_sum, horizon) < 1e-9);
            prop_assert!(rel_diff(d.total_energy_j(), p.total_energy_j()) < 1e-9);
            // Strictly increasing drain rates.
            for w in d.single_hop_powers_w.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
            // Every joule harvested before a point is spent at that point.
            let mut consumed = 0.0;
            for k in 0..d.interval_count() {
                consumed += d.interval_energies_j[k];
                let harvested = if k + 1 == d.interval_count() {
                    p.total_energy_j()
                } else {
                    p.cumulative_energy_before(d.point_times_s[k])
                };
                prop_assert!(rel_diff(consumed, harvested) < 1e-9,
                    "point {k}: consumed {consumed} vs harvested {harvested}");
            }
            // The drained curve never overdraws the staircase at any epoch.
            for (i, &t) in p.epochs_s.iter().enumerate().skip(1) {
                let mut used = 0.0;
                for k in 0..d.interval_count() {
                    let start = d.interval_start_s(k);
                    let end = d.point_times_s[k];
                    let overlap = (t.min(end) - start).max(0.0);
                    used += overlap * d.single_hop_powers_w[k];
                }
                let available: f64 = p.amounts_j[..i].iter().sum();
                prop_assert!(used <= available * (1.0 + 1e-9) + 1e-18);
            }
            // Re-minimizing over all epochs reproduces each chosen point.
            let n = p.len();
            let mut prefix = vec![0.0; n];
            for i in 1..n {
                prefix[i] = prefix[i - 1] + p.amounts_j[i - 1];
            }
            let mut origin = 0.0;
            let mut cons = 0.0;
            for k in 0..d.interval_count() {
                let (t, v, _) = lowest_slope_corner(
                    &p.epochs_s, &prefix, origin, cons, horizon, p.total_energy_j());
                prop_assert!(rel_diff(t, d.point_times_s[k]) < 1e-12);
                origin = t;
                cons = v;
            }
        }

        #[test]
        fn relaxed_profile_dominates_and_is_idempotent((p, horizon) in arb_profile()) {
            let d = compute_dwf(&p, horizon).unwrap();
            let relaxed = dwf_eh_profile(&d);
            relaxed.validate().unwrap();
            // Pointwise dominance of the cumulative curves.
            let mut probes = p.epochs_s.clone();
            probes.extend(relaxed.epochs_s.iter().copied());
            probes.push(horizon * 0.5);
            probes.push(horizon);
            for t in probes {
                let orig = p.cumulative_energy(t).unwrap();
                let relax = relaxed.cumulative_energy(t).unwrap();
                prop_assert!(relax >= orig - 1e-15 * orig.abs().max(1.0));
            }
            // Decomposing the relaxed profile gives the same breakpoints.
            let d2 = compute_dwf(&relaxed, horizon).unwrap();
            prop_assert_eq!(d2.interval_count(), d.interval_count());
            for k in 0..d.interval_count() {
                prop_assert!(rel_diff(d2.point_times_s[k], d.point_times_s[k]) < 1e-12);
                prop_assert!(rel_diff(d2.interval_energies_j[k], d.interval_energies_j[k]) < 1e-9);
            }
        }
    }
}

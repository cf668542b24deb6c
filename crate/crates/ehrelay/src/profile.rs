//! Discrete energy-harvesting profiles.
//!
//! A profile is a list of arrival epochs and the energy packet delivered at
//! each epoch; the cumulative curve is a right-continuous staircase. The
//! first epoch is pinned to `t = 0` so the source always has energy to start
//! with. Profiles are immutable value objects; solvers that need to "consume"
//! arrivals work on shifted copies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Energy arrival epochs (s) and packet sizes (J).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhProfile {
    pub epochs_s: Vec<f64>,
    pub amounts_j: Vec<f64>,
}

impl EhProfile {
    /// Builds and validates a profile.
    pub fn new(epochs_s: Vec<f64>, amounts_j: Vec<f64>) -> Result<Self> {
        let p = EhProfile { epochs_s, amounts_j };
        p.validate()?;
        Ok(p)
    }

    /// Checks all profile invariants, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.epochs_s.is_empty() {
            return Err(Error::invalid("profile has no arrivals"));
        }
        if self.epochs_s.len() != self.amounts_j.len() {
            return Err(Error::invalid(format!(
                "epoch/amount length mismatch: {} vs {}",
                self.epochs_s.len(),
                self.amounts_j.len()
            )));
        }
        if self.epochs_s[0] != 0.0 {
            return Err(Error::invalid(format!(
                "first epoch must be 0, got {}",
                self.epochs_s[0]
            )));
        }
        for w in self.epochs_s.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid(format!(
                    "epochs not strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (&t, &e) in self.epochs_s.iter().zip(&self.amounts_j) {
            if !t.is_finite() || !e.is_finite() {
                return Err(Error::invalid("non-finite epoch or amount"));
            }
            if e <= 0.0 {
                return Err(Error::invalid(format!("nonpositive amount {e} J at t = {t} s")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.epochs_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs_s.is_empty()
    }

    /// Total harvested energy.
    pub fn total_energy_j(&self) -> f64 {
        self.amounts_j.iter().sum()
    }

    /// Last arrival epoch.
    pub fn last_epoch_s(&self) -> f64 {
        *self.epochs_s.last().expect("validated profile is nonempty")
    }

    /// Cumulative harvested energy at time `t` (right-continuous: the packet
    /// arriving exactly at `t` is counted).
    pub fn cumulative_energy(&self, t_s: f64) -> Result<f64> {
        if t_s < 0.0 {
            return Err(Error::invalid(format!("negative time {t_s} s")));
        }
        Ok(self
            .epochs_s
            .iter()
            .zip(&self.amounts_j)
            .take_while(|(&e, _)| e <= t_s)
            .map(|(_, &a)| a)
            .sum())
    }

    /// Cumulative harvested energy strictly before `t`. This is the binding
    /// value for energy causality: consumption approaching `t` from the left
    /// can only have used packets that arrived earlier.
    pub fn cumulative_energy_before(&self, t_s: f64) -> f64 {
        self.epochs_s
            .iter()
            .zip(&self.amounts_j)
            .take_while(|(&e, _)| e < t_s)
            .map(|(_, &a)| a)
            .sum()
    }

    /// Profile containing only arrivals strictly before `t`, i.e. the packets
    /// usable within a block that ends at `t`.
    pub fn truncated_before(&self, t_s: f64) -> Result<EhProfile> {
        let n = self.epochs_s.iter().take_while(|&&e| e < t_s).count();
        if n == 0 {
            return Err(Error::invalid(format!(
                "truncation at {t_s} s leaves no arrivals"
            )));
        }
        Ok(EhProfile {
            epochs_s: self.epochs_s[..n].to_vec(),
            amounts_j: self.amounts_j[..n].to_vec(),
        })
    }

    /// Profile as seen from `origin_s`: keeps arrivals at or after the origin
    /// and re-bases their epochs. The arrival exactly at the origin is kept,
    /// since its energy is still unspent there.
    pub fn shifted_from(&self, origin_s: f64) -> EhProfile {
        let mut epochs = Vec::new();
        let mut amounts = Vec::new();
        for (&t, &e) in self.epochs_s.iter().zip(&self.amounts_j) {
            if t >= origin_s {
                epochs.push(t - origin_s);
                amounts.push(e);
            }
        }
        EhProfile { epochs_s: epochs, amounts_j: amounts }
    }

    /// All of the energy collapsed into a single arrival at the origin.
    pub fn collapsed(&self) -> EhProfile {
        EhProfile {
            epochs_s: vec![0.0],
            amounts_j: vec![self.total_energy_j()],
        }
    }
}

/// Parameters of the random profile generator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ArrivalGenConfig {
    /// Mean arrival rate of the Poisson process, 1/s.
    pub arrival_rate_per_s: f64,
    /// Energy of each packet, J.
    pub energy_unit_j: f64,
    /// Length of the window on which arrivals are drawn, s.
    pub horizon_s: f64,
    /// RNG seed; equal seeds give identical profiles.
    pub seed: u64,
}

impl ArrivalGenConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.arrival_rate_per_s) || !ok(self.energy_unit_j) || !ok(self.horizon_s) {
            return Err(Error::invalid(
                "arrival rate, energy unit and horizon must be finite and positive",
            ));
        }
        Ok(())
    }
}

/// Draws a profile whose arrivals form a homogeneous Poisson process on
/// `(0, horizon)`, each delivering one energy unit. An extra unit arrival is
/// forced at `t = 0` so the instance is always well posed.
pub fn generate_poisson(cfg: &ArrivalGenConfig) -> Result<EhProfile> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut epochs = vec![0.0];
    let mut t = 0.0;
    loop {
        // Exponential inter-arrival time; 1 - u keeps the argument in (0, 1].
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / cfg.arrival_rate_per_s;
        if t >= cfg.horizon_s {
            break;
        }
        if t > *epochs.last().unwrap() {
            epochs.push(t);
        }
    }
    let amounts = vec![cfg.energy_unit_j; epochs.len()];
    EhProfile::new(epochs, amounts)
}

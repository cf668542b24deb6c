//! Transmission schedules.
//!
//! A policy is an ordered list of stages; during each stage exactly one side
//! (source or relay) transmits at a constant power. Stages may not overlap —
//! the relay is half duplex — but gaps (idle time) are allowed, which the
//! fixed-power baseline uses when the source buffer runs dry.

use serde::{Deserialize, Serialize};

use crate::rate::RateFunction;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Source,
    Relay,
}

/// One constant-power transmission burst.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Stage {
    pub kind: StageKind,
    pub start_s: f64,
    pub duration_s: f64,
    pub power_w: f64,
}

impl Stage {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }
}

/// An ordered, non-overlapping stage schedule.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TransmissionPolicy {
    pub stages: Vec<Stage>,
}

impl TransmissionPolicy {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        let p = TransmissionPolicy { stages };
        p.validate_structure()?;
        Ok(p)
    }

    /// Structural sanity: finite nonnegative fields, stages sorted by start
    /// time. Overlap is deliberately not rejected here — the feasibility
    /// oracle reports it as a half-duplex violation, so hand-built policies
    /// can still be inspected.
    pub fn validate_structure(&self) -> Result<()> {
        for s in &self.stages {
            if !s.start_s.is_finite() || !s.duration_s.is_finite() || !s.power_w.is_finite() {
                return Err(Error::invalid("non-finite stage field"));
            }
            if s.start_s < 0.0 || s.duration_s < 0.0 || s.power_w < 0.0 {
                return Err(Error::invalid("negative stage field"));
            }
        }
        for w in self.stages.windows(2) {
            if w[1].start_s < w[0].start_s {
                return Err(Error::invalid("stages not sorted by start time"));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// End of the last stage, 0 for an empty policy.
    pub fn end_time_s(&self) -> f64 {
        self.stages.last().map_or(0.0, Stage::end_s)
    }

    /// Number of source stages. For the alternating schedules the solvers
    /// emit this equals the number of source/relay stage pairs.
    pub fn pair_count(&self) -> usize {
        self.stages.iter().filter(|s| s.kind == StageKind::Source).count()
    }

    fn cumulative_data(&self, kind: StageKind, t_s: f64, model: &dyn RateFunction) -> f64 {
        let mut data = 0.0;
        for s in &self.stages {
            if s.kind != kind || s.start_s >= t_s {
                continue;
            }
            let span = (t_s.min(s.end_s()) - s.start_s).max(0.0);
            data += span * model.rate_at(s.power_w);
        }
        data
    }

    /// Data sent by the source up to time `t`.
    pub fn source_data_at(&self, t_s: f64, model: &dyn RateFunction) -> f64 {
        self.cumulative_data(StageKind::Source, t_s, model)
    }

    /// Data forwarded by the relay up to time `t`.
    pub fn relay_data_at(&self, t_s: f64, model: &dyn RateFunction) -> f64 {
        self.cumulative_data(StageKind::Relay, t_s, model)
    }

    /// Energy drawn by the source up to time `t`.
    pub fn source_energy_at(&self, t_s: f64) -> f64 {
        self.stages
            .iter()
            .filter(|s| s.kind == StageKind::Source && s.start_s < t_s)
            .map(|s| (t_s.min(s.end_s()) - s.start_s).max(0.0) * s.power_w)
            .sum()
    }

    /// Energy drawn by the relay up to time `t`.
    pub fn relay_energy_at(&self, t_s: f64) -> f64 {
        self.stages
            .iter()
            .filter(|s| s.kind == StageKind::Relay && s.start_s < t_s)
            .map(|s| (t_s.min(s.end_s()) - s.start_s).max(0.0) * s.power_w)
            .sum()
    }
}

//! Rate–power curves.
//!
//! Every solver in this crate only assumes the transmit rate `g(P)` is
//! non-negative, strictly increasing, strictly concave and `g(0) = 0`. The
//! [`RateFunction`] trait captures that contract together with the inverse and
//! the derivative; [`RateModel`] is the built-in band-limited AWGN instance
//! `g(P) = W log2(1 + P H / (N0 W))`.

use serde::{Deserialize, Serialize};

use crate::numeric::bisect_root;
use crate::{Error, Result};

/// Absolute tolerance (watts) of the fallback bisection inverse.
const INVERSE_TOL_W: f64 = 1e-15;

/// A strictly increasing, strictly concave rate curve with `g(0) = 0`.
///
/// `rate_at`, `derivative_at` and `inverse_at` are the raw curve and assume
/// in-domain arguments; the checked `rate` / `inv_rate` / `rate_derivative`
/// wrappers reject negative inputs. Implementations must be pure so a model
/// can be shared freely across concurrent solves.
pub trait RateFunction: Sync {
    /// Rate in bit/s at transmit power `power_w` ≥ 0.
    fn rate_at(&self, power_w: f64) -> f64;

    /// Derivative of the rate in (bit/s)/W at `power_w` ≥ 0.
    fn derivative_at(&self, power_w: f64) -> f64;

    /// Power that produces `rate_bps`. The default implementation bisects the
    /// monotone curve to an absolute tolerance of 1e-15 W; override when a
    /// closed form exists.
    fn inverse_at(&self, rate_bps: f64) -> f64 {
        if rate_bps == 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.rate_at(hi) < rate_bps && hi < 1e30 {
            hi *= 2.0;
        }
        bisect_root(0.0, hi, INVERSE_TOL_W, |p| self.rate_at(p) - rate_bps)
            .unwrap_or(hi)
    }

    /// Checked rate: errors on negative power.
    fn rate(&self, power_w: f64) -> Result<f64> {
        if power_w < 0.0 {
            return Err(Error::invalid(format!("negative transmit power {power_w} W")));
        }
        Ok(self.rate_at(power_w))
    }

    /// Checked inverse: errors on negative rate.
    fn inv_rate(&self, rate_bps: f64) -> Result<f64> {
        if rate_bps < 0.0 {
            return Err(Error::invalid(format!("negative rate {rate_bps} bit/s")));
        }
        Ok(self.inverse_at(rate_bps))
    }

    /// Checked derivative: errors on negative power.
    fn rate_derivative(&self, power_w: f64) -> Result<f64> {
        if power_w < 0.0 {
            return Err(Error::invalid(format!("negative transmit power {power_w} W")));
        }
        Ok(self.derivative_at(power_w))
    }

    /// `g(P) - P g'(P)`, the intercept of the tangent at `P`. Strictly
    /// positive for `P > 0` on a strictly concave curve through the origin;
    /// it shows up in every marginal-value computation.
    fn tangent_intercept(&self, power_w: f64) -> f64 {
        self.rate_at(power_w) - power_w * self.derivative_at(power_w)
    }
}

/// Band-limited AWGN rate curve `g(P) = W log2(1 + P H / (N0 W))`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateModel {
    /// Channel bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_density_w_per_hz: f64,
    /// Linear path attenuation (e.g. 1e-10 for 100 dB).
    pub path_loss: f64,
}

impl RateModel {
    /// Builds a model, rejecting non-positive parameters.
    pub fn new(bandwidth_hz: f64, noise_density_w_per_hz: f64, path_loss: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(bandwidth_hz) || !ok(noise_density_w_per_hz) || !ok(path_loss) {
            return Err(Error::invalid(
                "rate model parameters must be finite and strictly positive",
            ));
        }
        Ok(RateModel { bandwidth_hz, noise_density_w_per_hz, path_loss })
    }

    /// Builds a model from a path loss given in dB.
    pub fn with_path_loss_db(bandwidth_hz: f64, noise_density_w_per_hz: f64, db: f64) -> Result<Self> {
        Self::new(bandwidth_hz, noise_density_w_per_hz, 10f64.powf(-db / 10.0))
    }

    /// 1 MHz bandwidth, 1e-19 W/Hz noise density, 100 dB path loss. With these
    /// numbers the curve is `log2(1 + P / 1 mW)` Mbit/s.
    pub fn default_awgn() -> Self {
        RateModel {
            bandwidth_hz: 1e6,
            noise_density_w_per_hz: 1e-19,
            path_loss: 1e-10,
        }
    }

    /// Received SNR per watt of transmit power, `H / (N0 W)`.
    fn gain(&self) -> f64 {
        self.path_loss / (self.noise_density_w_per_hz * self.bandwidth_hz)
    }
}

impl RateFunction for RateModel {
    fn rate_at(&self, power_w: f64) -> f64 {
        self.bandwidth_hz * (1.0 + power_w * self.gain()).log2()
    }

    fn derivative_at(&self, power_w: f64) -> f64 {
        let c = self.gain();
        self.bandwidth_hz * c / ((1.0 + power_w * c) * std::f64::consts::LN_2)
    }

    fn inverse_at(&self, rate_bps: f64) -> f64 {
        ((rate_bps / self.bandwidth_hz).exp2() - 1.0) / self.gain()
    }
}

/// Samples `model` on a geometric grid up to `max_power_w` and verifies that
/// the curve starts at zero, increases strictly and has negative second
/// differences. Useful as a construction-time check for injected models.
pub fn check_curve_shape(model: &dyn RateFunction, max_power_w: f64) -> Result<()> {
    if model.rate_at(0.0) != 0.0 {
        return Err(Error::invalid("rate(0) must be 0"));
    }
    let n = 64;
    let mut prev_p = 0.0;
    let mut prev_r = 0.0;
    let mut prev_slope = f64::INFINITY;
    for i in 1..=n {
        let p = max_power_w * i as f64 / n as f64;
        let r = model.rate_at(p);
        if r <= prev_r {
            return Err(Error::invalid(format!("rate not strictly increasing at {p} W")));
        }
        let slope = (r - prev_r) / (p - prev_p);
        if slope >= prev_slope {
            return Err(Error::invalid(format!("rate not strictly concave at {p} W")));
        }
        prev_p = p;
        prev_r = r;
        prev_slope = slope;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rel_diff;

    fn model() -> RateModel {
        RateModel::default_awgn()
    }

    #[test]
    fn default_model_matches_hand_values() {
        let m = model();
        assert_eq!(m.rate(0.0).unwrap(), 0.0);
        // 1 mW doubles the SNR term: exactly 1 Mbit/s.
        assert!(rel_diff(m.rate(1e-3).unwrap(), 1e6) < 1e-12);
        // 3 mW: log2(4) = 2 Mbit/s.
        assert!(rel_diff(m.rate(3e-3).unwrap(), 2e6) < 1e-12);
    }

    #[test]
    fn negative_arguments_are_domain_errors() {
        let m = model();
        assert!(m.rate(-1.0).is_err());
        assert!(m.inv_rate(-1.0).is_err());
        assert!(m.rate_derivative(-1e-9).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let m = model();
        assert_eq!(m.inv_rate(0.0).unwrap(), 0.0);
        assert!(rel_diff(m.inv_rate(1e6).unwrap(), 1e-3) < 1e-12);
        let mut p = 7.3e-6;
        for _ in 0..100 {
            let r = m.rate_at(p);
            assert!(rel_diff(m.inverse_at(r), p) < 1e-12, "round trip failed at {p}");
            p = (p * 1.11).min(1.0);
        }
    }

    #[test]
    fn bisection_inverse_agrees_with_closed_form() {
        // Hide the closed form behind a wrapper so the default bisection runs.
        struct Opaque(RateModel);
        impl RateFunction for Opaque {
            fn rate_at(&self, p: f64) -> f64 {
                self.0.rate_at(p)
            }
            fn derivative_at(&self, p: f64) -> f64 {
                self.0.derivative_at(p)
            }
        }
        let m = Opaque(model());
        for r in [1e3, 1e5, 1e6, 5e6] {
            let p_closed = m.0.inverse_at(r);
            let p_bisect = m.inverse_at(r);
            assert!((p_closed - p_bisect).abs() < 1e-12, "rate {r}");
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let m = model();
        let h = 1e-9;
        for p in [1e-4, 1e-3, 1e-2, 0.3] {
            let fd = (m.rate_at(p + h) - m.rate_at(p - h)) / (2.0 * h);
            assert!(
                rel_diff(m.derivative_at(p), fd) < 1e-6,
                "derivative mismatch at {p}: {} vs {}",
                m.derivative_at(p),
                fd
            );
        }
    }

    #[test]
    fn derivative_at_zero_is_gain_over_ln2() {
        let m = model();
        let expected = m.path_loss / (m.noise_density_w_per_hz * std::f64::consts::LN_2);
        assert!(rel_diff(m.derivative_at(0.0), expected) < 1e-12);
        // Symbolic limit cross-checked against a one-sided difference.
        let h = 1e-12;
        let fd = m.rate_at(h) / h;
        assert!(rel_diff(m.derivative_at(0.0), fd) < 1e-3);
    }

    #[test]
    fn derivative_strictly_decreasing() {
        let m = model();
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let p = 1e-5 * (i + 1) as f64;
            let d = m.derivative_at(p);
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn shape_check_accepts_awgn_and_rejects_linear() {
        check_curve_shape(&model(), 1.0).unwrap();

        struct Linear;
        impl RateFunction for Linear {
            fn rate_at(&self, p: f64) -> f64 {
                2.0 * p
            }
            fn derivative_at(&self, _: f64) -> f64 {
                2.0
            }
        }
        assert!(check_curve_shape(&Linear, 1.0).is_err());
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(RateModel::new(0.0, 1e-19, 1e-10).is_err());
        assert!(RateModel::new(1e6, -1.0, 1e-10).is_err());
        assert!(RateModel::new(1e6, 1e-19, f64::NAN).is_err());
    }
}

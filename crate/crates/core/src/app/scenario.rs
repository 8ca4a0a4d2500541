//! Applied-current scenarios.

use crate::assembly::Forcing;
use crate::error::{Error, Result};

/// A box-shaped current pulse `amplitude 1_[x0,x1](x) 1_[y0,y1](y) 1_[t0,t1](t)`
/// with homogeneous Neumann data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StimulusSpec {
    pub amplitude: f64,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub window: [f64; 2],
}

impl Default for StimulusSpec {
    fn default() -> Self {
        Self {
            amplitude: 2e6,
            x: [0.4, 0.6],
            y: [0.4, 0.6],
            window: [0.0, 1e-3],
        }
    }
}

impl StimulusSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::param("stimulus.amplitude", "must be finite"));
        }
        for (name, [lo, hi]) in [("stimulus.x", self.x), ("stimulus.y", self.y)] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
                return Err(Error::param(
                    name,
                    format!("[{lo}, {hi}] must be a non-empty interval inside [0, 1]"),
                ));
            }
        }
        let [t0, t1] = self.window;
        if !(t0 >= 0.0 && t1 > t0) {
            return Err(Error::param(
                "stimulus.window",
                format!("need 0 <= t0 < t1, got [{t0}, {t1}]"),
            ));
        }
        Ok(())
    }

    /// Indicator-weighted current; every interval is closed.
    pub fn current(&self, x: [f64; 2], t: f64) -> f64 {
        let inside = |v: f64, [lo, hi]: [f64; 2]| v >= lo && v <= hi;
        if inside(x[0], self.x) && inside(x[1], self.y) && inside(t, self.window) {
            self.amplitude
        } else {
            0.0
        }
    }
}

impl Forcing for StimulusSpec {
    fn source(&self, x: [f64; 2], t: f64) -> f64 {
        self.current(x, t)
    }

    fn flux(&self, _: [f64; 2], _: [f64; 2], _: f64) -> f64 {
        0.0
    }
}

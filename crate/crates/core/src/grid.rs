use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform grid `t_m = m * dt`, `0 <= m <= T/dt`, standing in for `sup` over
/// all times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(rename = "T")]
    pub t_max: f64,
    pub dt: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { t_max: 100.0, dt: 0.1 }
    }
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        let g = TimeGrid { t_max, dt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= self.t_max && self.t_max.is_finite()) {
            return invalid(format!("time grid needs 0 < dt <= T, got T = {}, dt = {}", self.t_max, self.dt));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let steps = (self.t_max / self.dt + 1e-9).floor() as usize;
        (0..=steps).map(|m| m as f64 * self.dt).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_include_both_ends() {
        let p = TimeGrid::new(1.0, 0.1).unwrap().points();
        assert_eq!(p.len(), 11);
        assert!((p[10] - 1.0).abs() < 1e-12);
        assert!(TimeGrid::new(1.0, 0.0).is_err());
        assert!(TimeGrid::new(0.1, 1.0).is_err());
    }
}

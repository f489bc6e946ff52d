//! Agent speed profiles v(t).

use serde::{Deserialize, Serialize};

/// Speed of the agents as a function of time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpeedProfile {
    /// v(t) ≡ v.
    Constant(f64),
    /// v(t) = 1/2 + (1/2) e^{-t/τ}, decreasing from 1 towards 1/2.
    Relaxing { tau: f64 },
}

impl Default for SpeedProfile {
    fn default() -> Self {
        SpeedProfile::Constant(1.0)
    }
}

impl SpeedProfile {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            SpeedProfile::Constant(v) => v,
            SpeedProfile::Relaxing { tau } => 0.5 + 0.5 * (-t / tau).exp(),
        }
    }

    /// Whether every value lies in (1/2, 1], the range the kinetic
    /// estimates assume.
    pub fn in_admissible_range(&self) -> bool {
        match *self {
            SpeedProfile::Constant(v) => v > 0.5 && v <= 1.0,
            SpeedProfile::Relaxing { tau } => tau > 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relaxing_profile_stays_in_range() {
        let v = SpeedProfile::Relaxing { tau: 3.0 };
        assert_eq!(v.at(0.0), 1.0);
        for i in 0..100 {
            let s = v.at(i as f64);
            assert!(s > 0.5 && s <= 1.0);
        }
        assert!(v.in_admissible_range());
        assert!(!SpeedProfile::Constant(0.0).in_admissible_range());
    }
}

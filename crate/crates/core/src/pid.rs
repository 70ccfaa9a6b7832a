//! Textbook PID law with a saturated output and no anti-windup.
//!
//! The integral keeps accumulating while the output sits at the rail, which
//! is exactly what makes the coach break down on long interventions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric saturation of the controller output, in newtons.
pub const OUTPUT_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(
                    format!("coach.gains.{name}"),
                    format!("must be finite and non-negative, got {v}"),
                ));
            }
        }
        if self.kp == 0.0 && self.ki == 0.0 && self.kd == 0.0 {
            return Err(Error::config(
                "coach.gains",
                "at least one gain must be non-zero",
            ));
        }
        Ok(())
    }
}

impl Default for PidGains {
    fn default() -> Self {
        Self::new(3.0, 0.5, 0.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidMemory {
    pub integral: f64,
    pub prev_error: f64,
    /// Whether `prev_error` holds a real sample.
    pub primed: bool,
}

/// One controller tick. Returns the saturated control and the next memory.
pub fn pid_update(m: &PidMemory, error: f64, dt: f64, g: &PidGains) -> Result<(f64, PidMemory)> {
    if !error.is_finite() {
        return Err(Error::Domain(format!(
            "PID error signal is not finite: {error}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("PID dt must be positive, got {dt}")));
    }
    let integral = m.integral + error * dt;
    let derivative = if m.primed {
        (error - m.prev_error) / dt
    } else {
        0.0
    };
    let control = g.kp * error + g.ki * integral + g.kd * derivative;
    let next = PidMemory {
        integral,
        prev_error: error,
        primed: true,
    };
    Ok((control.clamp(-OUTPUT_LIMIT, OUTPUT_LIMIT), next))
}

pub fn pid_reset(_m: &PidMemory) -> PidMemory {
    PidMemory::default()
}

/// Stateful convenience wrapper around [`pid_update`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pid {
    pub gains: PidGains,
    pub memory: PidMemory,
}

impl Pid {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            memory: PidMemory::default(),
        }
    }

    pub fn update(&mut self, error: f64, dt: f64) -> Result<f64> {
        let (u, next) = pid_update(&self.memory, error, dt, &self.gains)?;
        self.memory = next;
        Ok(u)
    }

    pub fn reset(&mut self) {
        self.memory = pid_reset(&self.memory);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_from_fresh_memory_gives_zero() {
        let g = PidGains::new(5.0, 2.0, 1.0);
        let (u, _) = pid_update(&PidMemory::default(), 0.0, 0.01, &g).unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn pure_proportional() {
        let g = PidGains::new(2.0, 0.0, 0.0);
        let (u, _) = pid_update(&PidMemory::default(), 0.5, 0.01, &g).unwrap();
        assert_eq!(u, 1.0);
    }

    #[test]
    fn first_tick_has_no_derivative_kick() {
        let g = PidGains::new(0.0, 0.0, 1.0);
        let (u, m) = pid_update(&PidMemory::default(), 3.0, 0.01, &g).unwrap();
        assert_eq!(u, 0.0);
        let (u, _) = pid_update(&m, 3.05, 0.01, &g).unwrap();
        assert!((u - 5.0).abs() < 1e-9);
    }

    #[test]
    fn output_is_saturated_but_integral_keeps_growing() {
        let mut pid = Pid::new(PidGains::new(100.0, 1.0, 0.0));
        let u = pid.update(1.0, 0.01).unwrap();
        assert_eq!(u, OUTPUT_LIMIT);
        for _ in 0..99 {
            assert_eq!(pid.update(1.0, 0.01).unwrap(), OUTPUT_LIMIT);
        }
        assert!((pid.memory.integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reset_clears_history_and_is_idempotent() {
        let mut pid = Pid::new(PidGains::new(1.0, 1.0, 1.0));
        for _ in 0..1000 {
            pid.update(7.0, 0.01).unwrap();
        }
        pid.reset();
        assert_eq!(pid.memory.integral, 0.0);
        assert!(!pid.memory.primed);
        let once = pid.memory;
        pid.reset();
        assert_eq!(pid.memory, once);
        let u = pid.update(0.25, 0.01).unwrap();
        assert!((u - (0.25 + 0.25 * 0.01)).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_error_and_bad_dt() {
        let g = PidGains::default();
        assert!(pid_update(&PidMemory::default(), f64::NAN, 0.01, &g).is_err());
        assert!(pid_update(&PidMemory::default(), 1.0, 0.0, &g).is_err());
    }

    #[test]
    fn gain_validation() {
        assert!(PidGains::default().validate().is_ok());
        assert!(PidGains::new(0.0, 0.0, 0.0).validate().is_err());
        assert!(PidGains::new(-1.0, 0.0, 0.0).validate().is_err());
    }
}

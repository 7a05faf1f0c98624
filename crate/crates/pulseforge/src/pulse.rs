//! Piecewise-constant control pulses.
//!
//! A pulse is n steps of fixed duration dt, each step carrying one Cartesian
//! amplitude pair (x, y) in rad/s per control channel. The polar view is
//! alpha = sqrt(x^2 + y^2), phi = atan2(y, x), with phi defined as 0 when
//! alpha = 0 so the phase diagonals degenerate to the identity.

use crate::error::{Error, Result};
use crate::spin::ControlChannel;

/// One Cartesian amplitude pair in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Amplitude {
    pub x: f64,
    pub y: f64,
}

impl Amplitude {
    pub fn new(x: f64, y: f64) -> Self {
        Amplitude { x, y }
    }

    pub fn from_polar(alpha: f64, phi: f64) -> Self {
        Amplitude {
            x: alpha * phi.cos(),
            y: alpha * phi.sin(),
        }
    }

    /// Field magnitude.
    pub fn alpha(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Field phase; 0 for a zero-amplitude step.
    pub fn phi(&self) -> f64 {
        if self.alpha() == 0.0 {
            0.0
        } else {
            self.y.atan2(self.x)
        }
    }

    pub fn scaled(&self, factor: f64) -> Amplitude {
        Amplitude {
            x: self.x * factor,
            y: self.y * factor,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// n steps x p channels of Cartesian amplitudes with a fixed time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPulse {
    dt: f64,
    channels: Vec<ControlChannel>,
    /// Step-major: amps[j * p + k] is step j, channel k.
    amps: Vec<Amplitude>,
}

impl ControlPulse {
    pub fn new(dt: f64, channels: Vec<ControlChannel>, amps: Vec<Amplitude>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidArgument("pulse needs at least one channel".into()));
        }
        if amps.is_empty() || amps.len() % channels.len() != 0 {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {} is not a positive multiple of channel count {}",
                amps.len(),
                channels.len()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument("time step must be positive".into()));
        }
        if amps.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numeric("non-finite pulse amplitude".into()));
        }
        Ok(ControlPulse { dt, channels, amps })
    }

    /// All-zero pulse of n steps.
    pub fn zeros(n: usize, dt: f64, channels: Vec<ControlChannel>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("pulse needs n >= 1 steps".into()));
        }
        let p = channels.len();
        Self::new(dt, channels, vec![Amplitude::default(); n * p])
    }

    pub fn step_count(&self) -> usize {
        self.amps.len() / self.channels.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[ControlChannel] {
        &self.channels
    }

    pub fn amp(&self, step: usize, channel: usize) -> Amplitude {
        self.amps[step * self.channels.len() + channel]
    }

    pub fn set_amp(&mut self, step: usize, channel: usize, a: Amplitude) {
        self.amps[step * self.channels.len() + channel] = a;
    }

    /// Amplitudes of one step, all channels.
    pub fn step(&self, step: usize) -> &[Amplitude] {
        let p = self.channels.len();
        &self.amps[step * p..(step + 1) * p]
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn check_step(&self, step: usize) -> Result<()> {
        if step >= self.step_count() {
            return Err(Error::IndexOutOfRange(format!(
                "step {step} of {}",
                self.step_count()
            )));
        }
        Ok(())
    }

    /// Mean field magnitude per channel over all steps.
    pub fn mean_alpha(&self) -> Vec<f64> {
        let p = self.channels.len();
        let n = self.step_count();
        let mut means = vec![0.0; p];
        for j in 0..n {
            for (k, m) in means.iter_mut().enumerate() {
                *m += self.amp(j, k).alpha();
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        means
    }

    /// Largest field magnitude per channel.
    pub fn max_alpha(&self) -> Vec<f64> {
        let p = self.channels.len();
        let n = self.step_count();
        let mut maxes = vec![0.0f64; p];
        for j in 0..n {
            for (k, m) in maxes.iter_mut().enumerate() {
                *m = m.max(self.amp(j, k).alpha());
            }
        }
        maxes
    }

    /// Radially clip every amplitude to alpha <= bound, preserving phi.
    pub fn clip_to_disc(&mut self, bound: f64) {
        for a in &mut self.amps {
            let alpha = a.alpha();
            if alpha > bound {
                let f = bound / alpha;
                a.x *= f;
                a.y *= f;
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Ball {
    pub fn new(center: [f64; 3], radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain(format!("ball radius must be positive, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("ball center must be finite"));
        }
        Ok(Ball { center, radius })
    }

    pub fn centered(radius: f64) -> Result<Self> {
        Ball::new([0.0; 3], radius)
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3)
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        let d2: f64 = (0..3).map(|a| (x[a] - self.center[a]).powi(2)).sum();
        d2 < self.radius * self.radius
    }
}

/// `Q(z0, r) = B(x0, r) x ]t0 - r^2, t0[`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCylinder {
    pub ball: Ball,
    pub t_top: f64,
}

impl ParabolicCylinder {
    pub fn new(center: [f64; 3], t_top: f64, radius: f64) -> Result<Self> {
        if !t_top.is_finite() {
            return Err(Error::domain("cylinder top time must be finite"));
        }
        Ok(ParabolicCylinder {
            ball: Ball::new(center, radius)?,
            t_top,
        })
    }

    pub fn radius(&self) -> f64 {
        self.ball.radius
    }

    pub fn time_window(&self) -> (f64, f64) {
        let r = self.ball.radius;
        (self.t_top - r * r, self.t_top)
    }

    pub fn volume(&self) -> f64 {
        self.ball.volume() * self.ball.radius * self.ball.radius
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform spatial nodes on `[lower, upper]` and a uniform partition of one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub nx: usize,
    pub nt: usize,
    pub lower: f64,
    pub upper: f64,
    pub period: f64,
}

impl SpaceTimeGrid {
    pub fn new(nx: usize, nt: usize, period: f64) -> Result<Self> {
        Self::on_interval(nx, nt, 0.0, 1.0, period)
    }

    pub fn on_interval(nx: usize, nt: usize, lower: f64, upper: f64, period: f64) -> Result<Self> {
        if nx < 3 {
            return Err(Error::validation(format!("grid needs nx >= 3, got {nx}")));
        }
        if nt < 1 {
            return Err(Error::validation("grid needs nt >= 1"));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::validation(format!("period must be positive, got {period}")));
        }
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::validation(format!(
                "spatial interval [{lower}, {upper}] is empty"
            )));
        }
        Ok(SpaceTimeGrid {
            nx,
            nt,
            lower,
            upper,
            period,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.upper - self.lower) / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.period / self.nt as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        if j + 1 == self.nx {
            self.upper
        } else {
            self.lower + j as f64 * self.dx()
        }
    }

    /// Time level `k`; the last level is exactly one period.
    pub fn t(&self, k: usize) -> f64 {
        if k == self.nt {
            self.period
        } else {
            k as f64 * self.period / self.nt as f64
        }
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        (0..=self.nt).map(|k| self.t(k)).collect()
    }

    /// Index of the node closest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let j = ((x - self.lower) / self.dx()).round();
        j.clamp(0.0, (self.nx - 1) as f64) as usize
    }

    /// Trapezoid weights (unscaled): 1/2 at the ends, 1 inside.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.nx)
    }
}

pub(crate) fn trapezoid_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n];
    if n > 1 {
        w[0] = 0.5;
        w[n - 1] = 0.5;
    }
    w
}

/// `n + 1` uniformly spaced times from `start` to `end`, with both ends exact.
pub(crate) fn uniform_times(start: f64, end: f64, n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..=n)
        .map(|k| start + (end - start) * k as f64 / n as f64)
        .collect();
    out[0] = start;
    out[n] = end;
    out
}

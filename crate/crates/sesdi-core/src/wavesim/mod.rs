//! 2D acoustic wave-equation forward modelling.
//!
//! The scalar second-order form `m u_tt - laplacian(u) + eta u_t = q` is
//! stepped with a 2nd-order leapfrog in time and a selectable-order central
//! Laplacian in space. Absorbing edges come from a damping sponge: eta is
//! zero in the interior and rises along a cosine taper across the boundary
//! pad, integrated semi-implicitly.

mod solver;

pub use solver::{simulate_shot, simulate_survey, WaveField};

use crate::error::{Error, Result};

use std::f64::consts::PI;

/// Ricker wavelet: `(1 - 2 pi^2 f0^2 (t-t0)^2) exp(-pi^2 f0^2 (t-t0)^2)`.
pub fn ricker(t: f64, f0: f64, t0: f64) -> f64 {
    debug_assert!(f0 > 0.0);
    let arg = PI * f0 * (t - t0);
    let a2 = arg * arg;
    (1.0 - 2.0 * a2) * (-a2).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceOrder {
    Two,
    Four,
    Eight,
}

impl SpaceOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            2 => Ok(SpaceOrder::Two),
            4 => Ok(SpaceOrder::Four),
            8 => Ok(SpaceOrder::Eight),
            other => Err(Error::param(format!("space order {other} not in {{2,4,8}}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            SpaceOrder::Two => 2,
            SpaceOrder::Four => 4,
            SpaceOrder::Eight => 8,
        }
    }

    /// Central second-derivative coefficients, index 0 is the center tap.
    pub(crate) fn coefficients(self) -> &'static [f64] {
        match self {
            SpaceOrder::Two => &[-2.0, 1.0],
            SpaceOrder::Four => &[-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
            SpaceOrder::Eight => &[
                -205.0 / 72.0,
                8.0 / 5.0,
                -1.0 / 5.0,
                8.0 / 315.0,
                -1.0 / 560.0,
            ],
        }
    }

    /// Stability factor for the 2D CFL bound dt <= C * dx / (v_max * sqrt(2)).
    pub fn cfl_factor(self) -> f64 {
        match self {
            SpaceOrder::Two => 1.0,
            SpaceOrder::Four => 0.857,
            SpaceOrder::Eight => 0.777,
        }
    }
}

/// Largest stable time step for the given peak velocity and spacing.
pub fn cfl_limit(v_max: f64, dx: f64, order: SpaceOrder) -> f64 {
    order.cfl_factor() * dx / (v_max * std::f64::consts::SQRT_2)
}

/// Boundary-inclusive stability check: `dt == limit` passes.
pub fn cfl_check(v_max: f64, dx: f64, dt: f64, order: SpaceOrder) -> Result<()> {
    if v_max <= 0.0 || dx <= 0.0 || dt <= 0.0 {
        return Err(Error::param("cfl_check needs positive v_max, dx, dt"));
    }
    let limit = cfl_limit(v_max, dx, order);
    if dt <= limit {
        Ok(())
    } else {
        Err(Error::Cfl { dt, limit })
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Grid spacing in metres.
    pub dx: f64,
    /// Solver time step in seconds.
    pub dt_sim: f64,
    /// Recording interval in seconds; must be an integer multiple of dt_sim.
    pub record_dt: f64,
    /// Total simulated time in seconds.
    pub total_time: f64,
    /// Ricker peak frequency in Hz. The source delay is 1 / f0.
    pub source_freq: f64,
    /// Absorbing pad width in cells on every edge.
    pub boundary_width: usize,
    /// Peak damping rate (1/s) at the outer edge of the pad.
    pub damping_coeff: f64,
    pub space_order: SpaceOrder,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dx: 10.0,
            dt_sim: 5e-4,
            record_dt: 1e-3,
            total_time: 2.0,
            source_freq: 25.0,
            boundary_width: 20,
            damping_coeff: 400.0,
            space_order: SpaceOrder::Eight,
        }
    }
}

impl SimConfig {
    /// Steps per recorded sample.
    pub fn record_stride(&self) -> Result<usize> {
        let ratio = self.record_dt / self.dt_sim;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * ratio.abs() {
            return Err(Error::param(format!(
                "record_dt {} is not an integer multiple of dt_sim {}",
                self.record_dt, self.dt_sim
            )));
        }
        Ok(k as usize)
    }

    /// Samples per trace: total_time / record_dt.
    pub fn samples_per_trace(&self) -> usize {
        (self.total_time / self.record_dt).round() as usize
    }

    pub fn validate(&self, v_max: f64) -> Result<()> {
        if self.dx <= 0.0 || self.dt_sim <= 0.0 || self.record_dt <= 0.0 || self.total_time <= 0.0
        {
            return Err(Error::param("dx, dt_sim, record_dt, total_time must be positive"));
        }
        if self.source_freq <= 0.0 {
            return Err(Error::param("source frequency must be positive"));
        }
        if self.boundary_width < 10 {
            return Err(Error::param("boundary width must be at least 10 cells"));
        }
        if self.damping_coeff < 0.0 {
            return Err(Error::param("damping coefficient must be non-negative"));
        }
        self.record_stride()?;
        cfl_check(v_max, self.dx, self.dt_sim, self.space_order)
    }
}

/// One source excitation plus its receiver spread. Positions are metres in
/// model coordinates: x along the surface, y across (zero in 2D), z depth.
#[derive(Debug, Clone)]
pub struct ShotSpec {
    pub source: [f64; 3],
    pub receivers: Vec<[f64; 3]>,
}

/// Recorded traces for one shot, one amplitude series per receiver.
#[derive(Debug, Clone)]
pub struct ShotRecord {
    pub source: [f64; 3],
    pub receivers: Vec<[f64; 3]>,
    pub record_dt: f64,
    pub traces: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ricker_peak_is_one() {
        assert_eq!(ricker(0.04, 25.0, 0.04), 1.0);
    }

    #[test]
    fn ricker_zero_crossings() {
        let f0 = 25.0;
        let t0 = 1.0 / f0;
        let tau = 1.0 / (std::f64::consts::SQRT_2 * PI * f0);
        assert!(ricker(t0 + tau, f0, t0).abs() < 1e-12);
        assert!(ricker(t0 - tau, f0, t0).abs() < 1e-12);
    }

    #[test]
    fn ricker_tail_is_negligible() {
        let f0 = 25.0;
        let t0 = 0.2;
        assert!(ricker(t0 + 10.0 / f0, f0, t0).abs() < 1e-10);
    }

    #[test]
    fn cfl_limit_closed_form() {
        let limit = cfl_limit(4500.0, 10.0, SpaceOrder::Two);
        assert!((limit - 10.0 / (4500.0 * std::f64::consts::SQRT_2)).abs() < 1e-18);
        assert!((limit - 1.571e-3).abs() < 1e-5);
        assert!(cfl_check(4500.0, 10.0, 1e-3, SpaceOrder::Two).is_ok());
    }

    #[test]
    fn cfl_boundary_is_inclusive() {
        let limit = cfl_limit(4500.0, 10.0, SpaceOrder::Two);
        assert!(cfl_check(4500.0, 10.0, limit, SpaceOrder::Two).is_ok());
    }

    #[test]
    fn cfl_violation_reports_limit() {
        match cfl_check(4500.0, 10.0, 2e-3, SpaceOrder::Two) {
            Err(Error::Cfl { dt, limit }) => {
                assert_eq!(dt, 2e-3);
                assert!((limit - 1.571e-3).abs() < 1e-5);
            }
            other => panic!("expected CFL violation, got {other:?}"),
        }
    }

    #[test]
    fn higher_orders_are_stricter() {
        let l2 = cfl_limit(3000.0, 10.0, SpaceOrder::Two);
        let l4 = cfl_limit(3000.0, 10.0, SpaceOrder::Four);
        let l8 = cfl_limit(3000.0, 10.0, SpaceOrder::Eight);
        assert!(l2 > l4 && l4 > l8);
    }
}

#![allow(dead_code)]

use std::f64::consts::PI;

use moyalrel::phasegrid::{MomentumLine, PhaseGrid, UnitSystem};
use moyalrel::C64;

/// Grid with `dq = dp` in natural units.
pub fn square_grid(n: usize) -> PhaseGrid {
    PhaseGrid::new(n, (2.0 * PI * n as f64).sqrt(), 0.0, UnitSystem::default()).unwrap()
}

pub fn gaussian_line(g: PhaseGrid, p0: f64, q0: f64, sigma_q: f64) -> MomentumLine {
    MomentumLine::from_fn(g, |p| C64::from_polar((-(p - p0).powi(2) * sigma_q * sigma_q / 2.0).exp(), -p * q0))
}

/// Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 - x) * cur / (k + 1) as f64 - k as f64 * prev / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

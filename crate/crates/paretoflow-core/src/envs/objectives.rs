//! Synthetic objective functions on the unit square, plus the grid
//! objective selector.
//!
//! All four named functions take inputs in [0, 1] x [0, 1] and are used
//! as maximization targets exactly as written; `branin` is the only one
//! with an internal input rescaling.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_unit(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidInput(format!(
            "input {u} outside the unit interval"
        )));
    }
    Ok(u)
}

/// Branin on the unit square via `x1 = 15 u1 - 5`, `x2 = 15 u2`.
pub fn branin(u1: f64, u2: f64) -> Result<f64> {
    let x1 = 15.0 * check_unit(u1)? - 5.0;
    let x2 = 15.0 * check_unit(u2)?;
    let a = 1.0;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let r = 6.0;
    let s = 10.0;
    let t = 1.0 / (8.0 * PI);
    Ok(a * (x2 - b * x1 * x1 + c * x1 - r).powi(2) + s * (1.0 - t) * x1.cos() + s)
}

/// Currin exponential, evaluated directly on the unit square.
pub fn currin(u1: f64, u2: f64) -> Result<f64> {
    let x1 = check_unit(u1)?;
    let x2 = check_unit(u2)?;
    let factor = 1.0 - (-0.5 * x2).exp();
    let numerator = 2300.0 * x1.powi(3) + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0;
    let denominator = 13.77 * (100.0 * x1.powi(3) + 500.0 * x1 * x1 + 4.0 * x1 + 20.0);
    Ok(factor * numerator / denominator)
}

/// Rescaled Shubert product on the unit square.
pub fn shubert(u1: f64, u2: f64) -> Result<f64> {
    let x1 = check_unit(u1)?;
    let x2 = check_unit(u2)?;
    let series = |x: f64| -> f64 {
        (1..=5)
            .map(|i| {
                let i = i as f64;
                i * ((i + 1.0) * x + i).cos()
            })
            .sum()
    };
    Ok(series(x1) * series(x2) / 397.0 + 186.8 / 397.0)
}

/// Rescaled Beale. The exponent of the third term's `x2` is configurable
/// because two readings circulate: the classical cube and a squared
/// variant. [`beale`] uses the cube.
fn beale_impl(u1: f64, u2: f64, third_exp: i32) -> Result<f64> {
    let x1 = check_unit(u1)?;
    let x2 = check_unit(u2)?;
    let t1 = 1.5 - x1 + x1 * x2;
    let t2 = 2.25 - x1 + x1 * x2 * x2;
    let t3 = 2.625 - x1 + x1 * x2.powi(third_exp);
    Ok((t1 * t1 + t2 * t2 + t3 * t3) / 38.8)
}

pub fn beale(u1: f64, u2: f64) -> Result<f64> {
    beale_impl(u1, u2, 3)
}

/// Beale with the squared third term.
pub fn beale_squared_variant(u1: f64, u2: f64) -> Result<f64> {
    beale_impl(u1, u2, 2)
}

/// One named objective of a grid environment.
///
/// The four benchmark functions take two inputs; on grids with more than
/// two dimensions each objective reads a coordinate pair assigned by its
/// position in the objective list. `Coordinate(i)` is the linear ramp
/// `u_i`, useful for scalar grids and plain product-order examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridObjective {
    Branin,
    Currin,
    Shubert,
    Beale,
    BealeSquared,
    Coordinate(usize),
}

impl GridObjective {
    /// Parses the config spelling: a function name or `coord-<axis>`.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "branin" => Ok(Self::Branin),
            "currin" => Ok(Self::Currin),
            "shubert" => Ok(Self::Shubert),
            "beale" => Ok(Self::Beale),
            "beale-squared" => Ok(Self::BealeSquared),
            other => {
                if let Some(axis) = other.strip_prefix("coord-") {
                    let axis: usize = axis.parse().map_err(|_| {
                        Error::InvalidInput(format!("bad coordinate objective {other}"))
                    })?;
                    Ok(Self::Coordinate(axis))
                } else {
                    Err(Error::InvalidInput(format!("unknown objective {other}")))
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Branin => "branin".into(),
            Self::Currin => "currin".into(),
            Self::Shubert => "shubert".into(),
            Self::Beale => "beale".into(),
            Self::BealeSquared => "beale-squared".into(),
            Self::Coordinate(axis) => format!("coord-{axis}"),
        }
    }

    /// Evaluates on a point of the unit hypercube. `slot` is the
    /// objective's position in the environment's objective list, which
    /// fixes the coordinate pair fed to the two-input functions when the
    /// grid has three dimensions.
    pub fn eval(&self, u: &[f64], slot: usize) -> Result<f64> {
        if let Self::Coordinate(axis) = self {
            return u
                .get(*axis)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("coordinate {axis} out of range")));
        }
        let (i, j) = pair_for_slot(u.len(), slot)?;
        let (u1, u2) = (u[i], u[j]);
        match self {
            Self::Branin => branin(u1, u2),
            Self::Currin => currin(u1, u2),
            Self::Shubert => shubert(u1, u2),
            Self::Beale => beale(u1, u2),
            Self::BealeSquared => beale_squared_variant(u1, u2),
            Self::Coordinate(_) => unreachable!(),
        }
    }
}

/// Coordinate pair feeding a two-input objective at list position `slot`.
fn pair_for_slot(d: usize, slot: usize) -> Result<(usize, usize)> {
    match d {
        2 => Ok((0, 1)),
        3 => Ok([(0, 1), (1, 2), (0, 2)][slot % 3]),
        _ => Err(Error::InvalidInput(format!(
            "two-input objectives need a 2- or 3-dimensional grid, got d = {d}"
        ))),
    }
}

//! Fixed-capacity points and axis-aligned boxes shared by the engine and the
//! environment.

use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest spatial dimension handled by the particle engine and trap fields.
pub const MAX_DIM: usize = 4;

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::Range {
            dim,
            min: 1,
            max: MAX_DIM,
        })
    }
}

/// A point in `R^d`, `d <= MAX_DIM`, stored inline so particles stay `Copy`.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn origin(dim: usize) -> Self {
        debug_assert!(dim >= 1 && dim <= MAX_DIM);
        Point {
            coords: [0.0; MAX_DIM],
            dim: dim as u8,
        }
    }

    pub fn from_slice(xs: &[f64]) -> Result<Self> {
        check_dim(xs.len())?;
        let mut p = Point::origin(xs.len());
        p.coords[..xs.len()].copy_from_slice(xs);
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn norm_sq(&self) -> f64 {
        self.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim as usize]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::param("box", "lower and upper corners differ in dimension"));
        }
        check_dim(lo.len())?;
        if lo.iter().chain(hi.iter()).any(|x| !x.is_finite()) {
            return Err(Error::param("box", "corners must be finite"));
        }
        Ok(AxisBox { lo, hi })
    }

    /// The cube `[-half_width, half_width]^dim`.
    pub fn centered_cube(dim: usize, half_width: f64) -> Result<Self> {
        AxisBox::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| h <= l)
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.extent(k)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn contains_box(&self, other: &AxisBox) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|k| other.lo[k] >= self.lo[k] && other.hi[k] <= self.hi[k])
    }

    pub fn padded(&self, pad: f64) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().map(|l| l - pad).collect(),
            hi: self.hi.iter().map(|h| h + pad).collect(),
        }
    }

    /// Distance from an interior point to the nearest face.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| (v - l).min(h - v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn center(&self) -> Point {
        let mid: Vec<f64> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect();
        Point::from_slice(&mid).expect("box dimension already validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_rejects_unsupported_dimension() {
        assert!(Point::from_slice(&[]).is_err());
        assert!(Point::from_slice(&[0.0; MAX_DIM + 1]).is_err());
        assert_eq!(Point::from_slice(&[3.0, 4.0]).unwrap().norm(), 5.0);
    }

    #[test]
    fn box_queries() {
        let b = AxisBox::centered_cube(2, 4.0).unwrap();
        assert_eq!(b.volume(), 64.0);
        assert!(b.contains(&[4.0, -4.0]));
        assert!(!b.contains(&[4.0001, 0.0]));
        assert_eq!(b.distance_to_boundary(&[1.0, 0.0]), 3.0);
        assert!(b.padded(1.0).contains_box(&b));
        assert!(AxisBox::new(vec![0.0], vec![0.0]).unwrap().is_degenerate());
    }
}

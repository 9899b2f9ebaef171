//! IoU between field-of-view boxes.
//!
//! | method | areas | cost |
//! |---|---|---|
//! | [`fov_iou`] | planar, horizontal offset scaled by cos(mean lat) | a cosine |
//! | [`sph_iou`] | planar, raw longitude offset | none |
//! | [`exact_iou`] | spherical polygon clipping | tens of trig calls |
//! | [`mc_iou`] | uniform sphere sampling | `samples` membership tests |

pub mod approx;
pub mod exact;
pub mod mc;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::bfov::FovBBox;
use crate::error::{Error, Result};

pub use self::approx::{fov_distance, fov_iou, sph_iou, sph_iou_with, SphArea};
pub use self::exact::{exact_iou, spherical_polygon_area};
pub use self::mc::{mc_iou, McEstimate, McParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IouMethod {
    Fov,
    Sph,
    Exact,
    MonteCarlo(McParams),
}

impl IouMethod {
    #[inline]
    pub fn iou(&self, a: &FovBBox, b: &FovBBox) -> f64 {
        match self {
            IouMethod::Fov => fov_iou(a, b),
            IouMethod::Sph => sph_iou(a, b),
            IouMethod::Exact => exact_iou(a, b),
            IouMethod::MonteCarlo(p) => mc_iou(a, b, *p).iou,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IouMethod::Fov => "fov",
            IouMethod::Sph => "sph",
            IouMethod::Exact => "exact",
            IouMethod::MonteCarlo(_) => "mc",
        }
    }
}

impl fmt::Display for IouMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `fov`, `sph`, `exact` or `mc` (one million samples, seed 0).
impl FromStr for IouMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fov" => Ok(IouMethod::Fov),
            "sph" => Ok(IouMethod::Sph),
            "exact" => Ok(IouMethod::Exact),
            "mc" => Ok(IouMethod::MonteCarlo(McParams::new(1_000_000, 0)?)),
            other => Err(Error::InvalidArgument(format!(
                "unknown IoU method {other:?} (expected fov, sph, exact or mc)"
            ))),
        }
    }
}

/// Row-major matrix of pairwise IoU values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IouMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl IouMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// CSV with one line per row of `a`, six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|v| format!("{v:.6}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Every pair `(a[i], b[j])`. Rows are computed in parallel; each entry is
/// the scalar call, so the result does not depend on the thread count.
pub fn iou_matrix(a: &[FovBBox], b: &[FovBBox], method: IouMethod) -> IouMatrix {
    let cols = b.len();
    let mut values = vec![0.0; a.len() * cols];
    if cols > 0 {
        values.par_chunks_mut(cols).zip(a.par_iter()).for_each(|(row, ai)| {
            for (v, bj) in row.iter_mut().zip(b) {
                *v = method.iou(ai, bj);
            }
        });
    }
    IouMatrix {
        rows: a.len(),
        cols,
        values,
    }
}

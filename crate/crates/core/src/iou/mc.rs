//! Monte-Carlo IoU oracle by uniform sphere sampling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bfov::{BoxRegion, FovBBox};
use crate::error::{Error, Result};
use crate::sphere::Vec3;

pub const MIN_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct McParams {
    samples: u64,
    seed: u64,
}

impl McParams {
    pub fn new(samples: u64, seed: u64) -> Result<Self> {
        if samples < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                got: samples,
                min: MIN_SAMPLES,
            });
        }
        Ok(Self { samples, seed })
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub iou: f64,
    /// Binomial standard error of `iou` given the union hit count.
    pub std_error: f64,
    pub intersection_hits: u64,
    pub union_hits: u64,
    /// No sample hit either box and the boxes were not provably disjoint; the
    /// value comes from the clipping computation instead.
    pub from_clipping: bool,
}

/// Uniform point on the unit sphere: `y ~ U[-1, 1)`, `lon ~ U[-pi, pi)`.
#[inline]
pub fn sample_sphere(rng: &mut impl Rng) -> Vec3 {
    let y = rng.random::<f64>() * 2.0 - 1.0;
    let lon = (rng.random::<f64>() * 2.0 - 1.0) * PI;
    let r = (1.0 - y * y).sqrt();
    let (s, c) = lon.sin_cos();
    Vec3::new(s * r, y, c * r)
}

/// Counts samples inside both regions and inside either one.
pub fn monte_carlo_overlap(
    in_a: impl Fn(Vec3) -> bool,
    in_b: impl Fn(Vec3) -> bool,
    samples: u64,
    seed: u64,
) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut both, mut either) = (0u64, 0u64);
    for _ in 0..samples {
        let p = sample_sphere(&mut rng);
        let (a, b) = (in_a(p), in_b(p));
        both += (a && b) as u64;
        either += (a || b) as u64;
    }
    (both, either)
}

/// Deterministic under `params.seed()`.
pub fn mc_iou(bg: &FovBBox, bd: &FovBBox, params: McParams) -> McEstimate {
    let (rg, rd) = (BoxRegion::new(bg), BoxRegion::new(bd));
    let (both, either) = monte_carlo_overlap(|p| rg.contains(p), |p| rd.contains(p), params.samples, params.seed);
    if either == 0 {
        let touching = rg.corners().iter().any(|&c| rd.contains(c)) || rd.corners().iter().any(|&c| rg.contains(c));
        let iou = if touching { super::exact::exact_iou(bg, bd) } else { 0.0 };
        return McEstimate {
            iou,
            std_error: 0.0,
            intersection_hits: 0,
            union_hits: 0,
            from_clipping: touching,
        };
    }
    let p = both as f64 / either as f64;
    McEstimate {
        iou: p,
        std_error: (p * (1.0 - p) / either as f64).sqrt(),
        intersection_hits: both,
        union_hits: either,
        from_clipping: false,
    }
}

//! Micro-benchmark of the IoU kernels on a seeded stream of box pairs.

use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bfov::FovBBox;
use crate::error::{Error, Result};
use crate::iou::IouMethod;

pub const MIN_CALLS: usize = 1000;
pub const DEFAULT_WARMUP: f64 = 0.1;
/// Calls timed together so the clock resolution does not dominate.
pub const CHUNK: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub method: String,
    pub n_calls: usize,
    pub mean_ns: f64,
    pub p50_ns: f64,
    pub p95_ns: f64,
}

impl BenchResult {
    pub fn pairs_per_second(&self) -> f64 {
        1e9 / self.mean_ns
    }
}

/// Overlapping pairs away from the poles: the second box is the first one
/// jittered by up to half its extent.
pub fn bench_pairs(n: usize, seed: u64) -> Vec<(FovBBox, FovBBox)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let h = rng.random_range(10.0..90.0);
            let v = rng.random_range(10.0..90.0);
            let lon = rng.random_range(-180.0..180.0);
            let lat = rng.random_range(-60.0..60.0);
            let g = FovBBox::new(lon, lat, h, v).expect("valid box");
            let d = FovBBox::new(
                lon + rng.random_range(-0.5..0.5) * h,
                (lat + rng.random_range(-0.5..0.5) * v).clamp(-80.0, 80.0),
                h * rng.random_range(0.7..1.3),
                v * rng.random_range(0.7..1.3),
            )
            .expect("valid box");
            (g, d)
        })
        .collect()
}

/// Order-sensitive digest of a pair stream.
pub fn pair_checksum(pairs: &[(FovBBox, FovBBox)]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (g, d) in pairs {
        for x in g.to_array().into_iter().chain(d.to_array()) {
            h ^= x.to_bits();
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[rank.min(sorted.len() - 1)]
}

/// Times `n` calls per method on the same pair stream. The first
/// `warmup_fraction * n` calls of each method are run but not recorded;
/// percentiles are over per-call times of 100-call chunks.
pub fn run_bench(methods: &[IouMethod], n: usize, seed: u64, warmup_fraction: f64) -> Result<Vec<BenchResult>> {
    if n < MIN_CALLS {
        return Err(Error::TooFewSamples { got: n as u64, min: MIN_CALLS as u64 });
    }
    if !(0.0..=0.5).contains(&warmup_fraction) {
        return Err(Error::InvalidArgument(format!("warmup fraction {warmup_fraction} outside [0, 0.5]")));
    }
    let warmup = (warmup_fraction * n as f64).round() as usize;
    let pairs = bench_pairs(n + warmup, seed);
    let (warm, timed) = pairs.split_at(warmup);

    let mut out = Vec::with_capacity(methods.len());
    for &m in methods {
        for (g, d) in warm {
            black_box(m.iou(black_box(g), black_box(d)));
        }
        let mut per_call = Vec::with_capacity(timed.len().div_ceil(CHUNK));
        let mut total = 0.0;
        for chunk in timed.chunks(CHUNK) {
            let t0 = Instant::now();
            for (g, d) in chunk {
                black_box(m.iou(black_box(g), black_box(d)));
            }
            let ns = t0.elapsed().as_nanos() as f64;
            total += ns;
            per_call.push(ns / chunk.len() as f64);
        }
        per_call.sort_by(f64::total_cmp);
        out.push(BenchResult {
            method: m.name().to_string(),
            n_calls: timed.len(),
            mean_ns: total / timed.len() as f64,
            p50_ns: percentile(&per_call, 0.5),
            p95_ns: percentile(&per_call, 0.95),
        });
    }
    Ok(out)
}

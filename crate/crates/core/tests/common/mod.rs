//! Fixtures and reference implementations shared by the integration tests.

#![allow(dead_code)]

use sphergeo::eval::{EvalDataset, GroundTruth, LatBand, SizeBuckets};
use sphergeo::{fov_iou, Detection, FovBBox};

pub fn bx(lon: f64, lat: f64, h: f64, v: f64) -> FovBBox {
    FovBBox::new(lon, lat, h, v).unwrap()
}

/// Two images, two categories, 6 ground truths and 8 detections. Image 1
/// sits at high latitude; image 2 near the equator.
pub fn eval_fixture() -> (EvalDataset, Vec<Detection>) {
    let g = |id, image_id, category_id, bbox| GroundTruth {
        id,
        image_id,
        category_id,
        bbox,
    };
    let gts = vec![
        g(1, 1, 1, bx(0.0, 60.0, 20.0, 20.0)),
        g(2, 1, 1, bx(40.0, 65.0, 30.0, 20.0)),
        g(3, 1, 2, bx(100.0, 55.0, 10.0, 10.0)),
        g(4, 2, 1, bx(0.0, 0.0, 20.0, 15.0)),
        g(5, 2, 2, bx(50.0, 10.0, 5.0, 5.0)),
        g(6, 2, 2, bx(80.0, -20.0, 16.0, 16.0)),
    ];
    let d = |image, cat, b, s| Detection::new(image, cat, b, s).unwrap();
    let dets = vec![
        d(1, 1, bx(2.0, 60.0, 20.0, 20.0), 0.95),
        d(1, 1, bx(45.0, 66.0, 28.0, 22.0), 0.7),
        d(1, 1, bx(1.0, 61.0, 22.0, 18.0), 0.6),
        d(1, 2, bx(101.0, 56.0, 10.0, 9.0), 0.8),
        d(2, 1, bx(3.0, 1.0, 20.0, 15.0), 0.9),
        d(2, 2, bx(50.5, 10.0, 5.0, 5.0), 0.85),
        d(2, 2, bx(120.0, 0.0, 10.0, 10.0), 0.85),
        d(2, 2, bx(82.0, -21.0, 14.0, 16.0), 0.7),
    ];
    let ds = EvalDataset {
        image_ids: vec![1, 2],
        category_ids: vec![1, 2],
        annotations: gts,
    };
    (ds, dets)
}

/// Straight-from-the-definition AP for one category and threshold: greedy
/// matching over a globally score-sorted list, then for every recall level
/// the best precision at any rank reaching it.
pub fn brute_force_ap(gts: &[GroundTruth], dets: &[Detection], cat: i64, thr: f64) -> Option<f64> {
    let gts: Vec<&GroundTruth> = gts.iter().filter(|g| g.category_id == cat).collect();
    if gts.is_empty() {
        return None;
    }
    let mut dets: Vec<(usize, &Detection)> = dets.iter().enumerate().filter(|(_, d)| d.category_id == cat).collect();
    // score desc, then image id, then input position
    dets.sort_by(|a, b| {
        b.1.score
            .partial_cmp(&a.1.score)
            .unwrap()
            .then(a.1.image_id.cmp(&b.1.image_id))
            .then(a.0.cmp(&b.0))
    });
    let mut taken = vec![false; gts.len()];
    let mut hits = Vec::new();
    for (_, d) in &dets {
        let mut best: Option<(f64, i64, usize)> = None;
        for (k, g) in gts.iter().enumerate() {
            if taken[k] || g.image_id != d.image_id {
                continue;
            }
            let iou = fov_iou(&g.bbox, &d.bbox);
            if iou < thr {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bid, _)) => iou > bi || (iou == bi && g.id < bid),
            };
            if better {
                best = Some((iou, g.id, k));
            }
        }
        if let Some((_, _, k)) = best {
            taken[k] = true;
        }
        hits.push(best.is_some());
    }
    let n = gts.len() as f64;
    let mut pr = Vec::new();
    let mut tp = 0.0;
    for (i, &h) in hits.iter().enumerate() {
        if h {
            tp += 1.0;
        }
        pr.push((tp / (i + 1) as f64, tp / n));
    }
    let mut sum = 0.0;
    for k in 0..=100 {
        let r = k as f64 / 100.0;
        let p = pr.iter().filter(|(_, rec)| *rec >= r).map(|(p, _)| *p).fold(0.0, f64::max);
        sum += p;
    }
    Some(sum / 101.0)
}

pub fn mean_some(vals: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = vals.iter().flatten().copied().collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Reference summary numbers of one filtered subset: (AP, AP50, AP75, per threshold).
pub fn brute_force_summary(
    gts: &[GroundTruth],
    dets: &[Detection],
    cats: &[i64],
    thresholds: &[f64],
) -> (Option<f64>, Option<f64>, Option<f64>, Vec<Option<f64>>) {
    let grid: Vec<Vec<Option<f64>>> = thresholds
        .iter()
        .map(|&t| cats.iter().map(|&c| brute_force_ap(gts, dets, c, t)).collect())
        .collect();
    let all: Vec<Option<f64>> = grid.iter().flatten().copied().collect();
    let at = |t: f64| {
        let i = thresholds.iter().position(|&x| (x - t).abs() < 1e-9).unwrap();
        mean_some(&grid[i])
    };
    let per_t = grid.iter().map(|row| mean_some(row)).collect();
    (mean_some(&all), at(0.5), at(0.75), per_t)
}

pub fn in_band(b: &FovBBox, band: LatBand) -> bool {
    let a = b.lat().abs();
    a >= band.lo && a <= band.hi
}

/// 0 small, 1 medium, 2 large by planar square degrees.
pub fn size_class(b: &FovBBox, s: SizeBuckets) -> usize {
    let a = b.fov_h() * b.fov_v();
    if a < s.small_max {
        0
    } else if a < s.medium_max {
        1
    } else {
        2
    }
}

/// Smooth synthetic panorama: low-order harmonics of the direction vector,
/// so bilinear resampling loses little.
pub fn smooth_panorama(width: u32, height: u32) -> sphergeo::augment::ErpImage {
    let mut data = Vec::with_capacity((width * height * 3) as usize);
    for v in 0..height {
        for u in 0..width {
            let p = sphergeo::sphere::erp_pixel_to_sph(u as f64, v as f64, width, height).unwrap();
            let q = sphergeo::sphere::sph_to_cart(p);
            let r = 128.0 + 60.0 * (2.0 * q.x).sin() * (1.5 * q.y).cos() + 40.0 * (3.0 * q.z + 1.0).cos();
            let g = 128.0 + 70.0 * (2.5 * q.y + q.x).sin();
            let b = 128.0 + 50.0 * (q.z * q.x * 4.0).cos() - 30.0 * q.y;
            for c in [r, g, b] {
                data.push(c.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    sphergeo::augment::ErpImage::new(width, height, 3, data).unwrap()
}

/// PSNR in dB over rows whose center latitude is within `max_lat`.
pub fn psnr_interior(a: &sphergeo::augment::ErpImage, b: &sphergeo::augment::ErpImage, max_lat: f64) -> f64 {
    let (w, h) = (a.width(), a.height());
    let mut se = 0.0;
    let mut n = 0usize;
    for v in 0..h {
        let lat = 90.0 - (v as f64 + 0.5) / h as f64 * 180.0;
        if lat.abs() > max_lat {
            continue;
        }
        for u in 0..w {
            for (x, y) in a.pixel(u, v).iter().zip(b.pixel(u, v)) {
                let d = *x as f64 - *y as f64;
                se += d * d;
                n += 1;
            }
        }
    }
    let mse = se / n as f64;
    10.0 * (255.0 * 255.0 / mse).log10()
}

/// Grayscale panorama with a Gaussian blob (sigma in degrees) at `center`.
pub fn blob_panorama(width: u32, height: u32, center: sphergeo::SphPoint, sigma: f64) -> sphergeo::augment::ErpImage {
    let mut data = Vec::with_capacity((width * height) as usize);
    for v in 0..height {
        for u in 0..width {
            let p = sphergeo::sphere::erp_pixel_to_sph(u as f64, v as f64, width, height).unwrap();
            let d = sphergeo::sphere::great_circle_distance(p, center);
            data.push((255.0 * (-0.5 * (d / sigma).powi(2)).exp()).round() as u8);
        }
    }
    sphergeo::augment::ErpImage::new(width, height, 1, data).unwrap()
}

/// Intensity-weighted mean direction of a grayscale panorama.
pub fn blob_center(img: &sphergeo::augment::ErpImage) -> sphergeo::SphPoint {
    let (w, h) = (img.width(), img.height());
    let mut acc = sphergeo::Vec3::new(0.0, 0.0, 0.0);
    for v in 0..h {
        for u in 0..w {
            let p = sphergeo::sphere::erp_pixel_to_sph(u as f64, v as f64, w, h).unwrap();
            // pixel solid angle shrinks with cos(lat)
            let wgt = img.pixel(u, v)[0] as f64 * p.lat().to_radians().cos();
            acc = acc + sphergeo::sphere::sph_to_cart(p) * wgt;
        }
    }
    sphergeo::sphere::cart_to_sph(acc).unwrap()
}

/// Pixel distance with horizontal wraparound.
pub fn pixel_distance(a: (f64, f64), b: (f64, f64), width: u32) -> f64 {
    let w = width as f64;
    let du = (a.0 - b.0).rem_euclid(w);
    let du = du.min(w - du);
    du.hypot(a.1 - b.1)
}

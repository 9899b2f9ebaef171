//! Exact IoU through spherical polygon clipping.

use std::f64::consts::PI;

use crate::bfov::{center_vec, BoxRegion, FovBBox};
use crate::error::{Error, Result};
use crate::sphere::Vec3;

use super::mc::{mc_iou, McParams};

/// Plane-side tolerance: vertices closer than this to a clip plane count as on it.
pub const CLIP_EPS: f64 = 1e-9;

/// Sample count used when clipping is numerically degenerate.
pub const FALLBACK_SAMPLES: u64 = 1_000_000;
pub const FALLBACK_SEED: u64 = 0x5eed;

/// Area of a simple spherical polygon with great-circle edges on the unit
/// sphere, from its interior angles: `sum(angles) - (n - 2) pi`.
///
/// Vertices must be unit vectors ordered counter-clockwise as seen from
/// outside the sphere.
pub fn spherical_polygon_area(vertices: &[Vec3]) -> Result<f64> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::TooFewVertices(n));
    }
    for i in 0..n {
        if (vertices[(i + 1) % n] - vertices[i]).norm() <= CLIP_EPS {
            return Err(Error::DuplicateVertex(i));
        }
    }
    let mut sum = 0.0;
    for i in 0..n {
        let v = vertices[i];
        let prev = tangent(v, vertices[(i + n - 1) % n]);
        let next = tangent(v, vertices[(i + 1) % n]);
        // counter-clockwise sweep from the outgoing to the incoming arc
        sum += v.dot(next.cross(prev)).atan2(next.dot(prev)).rem_euclid(2.0 * PI);
    }
    Ok(sum - (n as f64 - 2.0) * PI)
}

/// Direction of the great-circle arc from `v` towards `w`, tangent at `v`.
#[inline]
fn tangent(v: Vec3, w: Vec3) -> Vec3 {
    (w - v * v.dot(w)).normalize()
}

/// Sutherland-Hodgman against one great-circle half-space `{p : n . p >= 0}`.
fn clip_half_space(input: &[Vec3], normal: Vec3, out: &mut Vec<Vec3>) {
    out.clear();
    let n = input.len();
    for i in 0..n {
        let a = input[i];
        let b = input[(i + 1) % n];
        let da = normal.dot(a);
        let db = normal.dot(b);
        let a_in = da >= -CLIP_EPS;
        if a_in {
            out.push(a);
        }
        // strict crossing: one side beyond the tolerance band on each end
        if (da > CLIP_EPS && db < -CLIP_EPS) || (da < -CLIP_EPS && db > CLIP_EPS) {
            let t = da / (da - db);
            out.push((a * (1.0 - t) + b * t).normalize());
        }
    }
}

fn dedup_ring(poly: &mut Vec<Vec3>) {
    poly.dedup_by(|b, a| (*b - *a).norm() <= CLIP_EPS);
    while poly.len() > 1 && (poly[0] - poly[poly.len() - 1]).norm() <= CLIP_EPS {
        poly.pop();
    }
}

/// Intersection polygon of two boxes (counter-clockwise, possibly empty).
pub fn intersection_polygon(bg: &FovBBox, bd: &FovBBox) -> Result<Vec<Vec3>, Degenerate> {
    let subject = BoxRegion::new(bg).corners();
    let normals = BoxRegion::new(bd).edge_normals();
    let mut poly = subject.to_vec();
    let mut scratch = Vec::with_capacity(8);
    for normal in normals {
        if poly.iter().all(|v| normal.dot(*v).abs() <= CLIP_EPS) {
            return Err(Degenerate);
        }
        clip_half_space(&poly, normal, &mut scratch);
        std::mem::swap(&mut poly, &mut scratch);
        dedup_ring(&mut poly);
        if poly.len() < 3 {
            poly.clear();
            break;
        }
    }
    Ok(poly)
}

/// Every vertex of the polygon lies on a clip plane; the clip cannot tell
/// inside from outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degenerate;

/// Angular radius of the smallest cap around the center that holds the box.
fn circumradius(b: &FovBBox) -> f64 {
    let th = (b.fov_h().to_radians() / 2.0).tan();
    let tv = (b.fov_v().to_radians() / 2.0).tan();
    th.hypot(tv).atan()
}

/// IoU of the two spherical quadrilaterals, areas in steradians.
///
/// Falls back to a Monte-Carlo estimate with [`FALLBACK_SAMPLES`] samples when
/// the clip is degenerate.
pub fn exact_iou(bg: &FovBBox, bd: &FovBBox) -> f64 {
    let sep = center_vec(bg).dot(center_vec(bd)).clamp(-1.0, 1.0).acos();
    if sep > circumradius(bg) + circumradius(bd) + 1e-12 {
        return 0.0;
    }
    let poly = match intersection_polygon(bg, bd) {
        Ok(p) => p,
        Err(Degenerate) => return fallback(bg, bd),
    };
    let area_g = box_area(bg);
    let area_d = box_area(bd);
    let inter = if poly.is_empty() {
        0.0
    } else {
        match spherical_polygon_area(&poly) {
            Ok(a) => a.clamp(0.0, area_g.min(area_d)),
            Err(_) => return fallback(bg, bd),
        }
    };
    (inter / (area_g + area_d - inter)).clamp(0.0, 1.0)
}

fn box_area(b: &FovBBox) -> f64 {
    spherical_polygon_area(&BoxRegion::new(b).corners()).unwrap_or_else(|_| b.solid_angle())
}

fn fallback(bg: &FovBBox, bd: &FovBBox) -> f64 {
    let params = McParams::new(FALLBACK_SAMPLES, FALLBACK_SEED).expect("valid fallback sample count");
    mc_iou(bg, bd, params).iou
}

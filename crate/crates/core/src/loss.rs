//! GIoU-style regression losses over FoV-IoU and Sph-IoU.
//!
//! `loss = 1 - IoU + (A(C) - A(U)) / A(C)` where `C` is the smallest
//! enclosing rectangle in the same recentred coordinates used for the
//! intersection. Gradients are taken with respect to the detected box in
//! degrees, by forward-mode dual numbers over the same arithmetic.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::Serialize;

use crate::bfov::FovBBox;
use crate::iou::approx::{terms, Kinks, Offset, Real, SphArea, Terms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Fov,
    Sph,
}

impl LossKind {
    fn offset(self) -> Offset {
        match self {
            LossKind::Fov => Offset::FovDistance,
            LossKind::Sph => Offset::Longitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossValue {
    pub value: f64,
    pub iou: f64,
    /// `(A(C) - A(U)) / A(C)`, in `[0, 1)`.
    pub penalty: f64,
}

/// Partial derivatives of the loss with respect to the detection's
/// `(lon, lat, fov_h, fov_v)`, per degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossGradient {
    pub loss: LossValue,
    pub d_lon: f64,
    pub d_lat: f64,
    pub d_fov_h: f64,
    pub d_fov_v: f64,
    /// Some min/max was tied; the derivative is one-sided, taken from the
    /// ground-truth branch.
    pub at_kink: bool,
}

impl LossGradient {
    pub fn as_array(&self) -> [f64; 4] {
        [self.d_lon, self.d_lat, self.d_fov_h, self.d_fov_v]
    }
}

fn giou<T: Real>(t: &Terms<T>) -> (T, T, T) {
    let iou = t.iou();
    let penalty = (t.enclosure - t.union) / t.enclosure;
    (T::cst(1.0) - iou + penalty, iou, penalty)
}

pub fn giou_loss(bg: &FovBBox, bd: &FovBBox, kind: LossKind) -> LossValue {
    let t = terms(bg.to_array(), bd.to_array(), kind.offset(), SphArea::Planar, &mut Kinks::default());
    let (value, iou, penalty) = giou(&t);
    LossValue { value, iou, penalty }
}

pub fn fov_giou_loss(bg: &FovBBox, bd: &FovBBox) -> LossValue {
    giou_loss(bg, bd, LossKind::Fov)
}

pub fn sph_giou_loss(bg: &FovBBox, bd: &FovBBox) -> LossValue {
    giou_loss(bg, bd, LossKind::Sph)
}

pub fn loss_gradient(bg: &FovBBox, bd: &FovBBox, kind: LossKind) -> LossGradient {
    let g = bg.to_array().map(Dual::cst);
    let d = bd.to_array();
    let d = [0, 1, 2, 3].map(|i| Dual::var(d[i], i));
    let mut kinks = Kinks::default();
    let t = terms(g, d, kind.offset(), SphArea::Planar, &mut kinks);
    let (value, iou, penalty) = giou(&t);
    LossGradient {
        loss: LossValue {
            value: value.v,
            iou: iou.v,
            penalty: penalty.v,
        },
        d_lon: value.d[0],
        d_lat: value.d[1],
        d_fov_h: value.d[2],
        d_fov_v: value.d[3],
        at_kink: kinks.0,
    }
}

/// Value plus gradient over the four detection coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dual {
    v: f64,
    d: [f64; 4],
}

impl Dual {
    fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; 4];
        d[i] = 1.0;
        Self { v, d }
    }

    #[inline]
    fn chain(self, v: f64, slope: f64) -> Self {
        Self {
            v,
            d: self.d.map(|x| x * slope),
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: [0, 1, 2, 3].map(|i| self.d[i] + o.d[i]),
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: [0, 1, 2, 3].map(|i| self.d[i] - o.d[i]),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: [0, 1, 2, 3].map(|i| self.d[i] * o.v + self.v * o.d[i]),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual {
            v: q,
            d: [0, 1, 2, 3].map(|i| (self.d[i] - q * o.d[i]) / o.v),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: self.d.map(|x| -x),
        }
    }
}

impl Real for Dual {
    fn cst(v: f64) -> Self {
        Self { v, d: [0.0; 4] }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::iou::{fov_iou, sph_iou};

    fn bx(lon: f64, lat: f64, h: f64, v: f64) -> FovBBox {
        FovBBox::new(lon, lat, h, v).unwrap()
    }

    fn central_difference(bg: &FovBBox, bd: &FovBBox, kind: LossKind, h: f64) -> [f64; 4] {
        let base = bd.to_array();
        [0, 1, 2, 3].map(|i| {
            let mut plus = base;
            let mut minus = base;
            plus[i] += h;
            minus[i] -= h;
            let lp = giou_loss(bg, &FovBBox::from_array(plus).unwrap(), kind).value;
            let lm = giou_loss(bg, &FovBBox::from_array(minus).unwrap(), kind).value;
            (lp - lm) / (2.0 * h)
        })
    }

    #[test]
    fn identical_boxes_have_zero_loss() {
        let b = bx(10.0, 50.0, 30.0, 20.0);
        for kind in [LossKind::Fov, LossKind::Sph] {
            let l = giou_loss(&b, &b, kind);
            assert_eq!(l.value, 0.0);
            assert_eq!(l.iou, 1.0);
            assert_eq!(l.penalty, 0.0);
        }
    }

    #[test]
    fn disjoint_boxes_across_the_antimeridian() {
        let l = fov_giou_loss(&bx(0.0, 0.0, 10.0, 10.0), &bx(170.0, 0.0, 10.0, 10.0));
        assert_eq!(l.iou, 0.0);
        assert!(l.value > 1.0 && l.value < 2.0);
        // 190 wraps to -170: the same configuration mirrored
        let m = fov_giou_loss(&bx(0.0, 0.0, 10.0, 10.0), &bx(190.0, 0.0, 10.0, 10.0));
        assert!(m.value > 1.0 && m.value < 2.0);
    }

    #[test]
    fn table_one_pair_by_hand() {
        // C spans [-30, 45] x [30, 90] = 4500 = A(U): no penalty
        let l = fov_giou_loss(&bx(30.0, 60.0, 60.0, 60.0), &bx(60.0, 60.0, 60.0, 60.0));
        assert_abs_diff_eq!(l.penalty, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.value, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn iou_term_matches_standalone_iou() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let g = bx(rng.random_range(-50.0..50.0), rng.random_range(-80.0..80.0), rng.random_range(5.0..60.0), rng.random_range(5.0..60.0));
            let d = bx(rng.random_range(-50.0..50.0), rng.random_range(-80.0..80.0), rng.random_range(5.0..60.0), rng.random_range(5.0..60.0));
            let f = fov_giou_loss(&g, &d);
            assert_eq!(f.iou, fov_iou(&g, &d));
            assert_eq!(sph_giou_loss(&g, &d).iou, sph_iou(&g, &d));
            assert!((1.0 - f.value + f.penalty - f.iou).abs() < 1e-12);
            assert!((0.0..2.0).contains(&f.value));
            assert!((0.0..1.0).contains(&f.penalty));
        }
    }

    #[test]
    fn sph_and_fov_agree_on_the_equator() {
        let (g, d) = (bx(0.0, 0.0, 30.0, 20.0), bx(12.0, 0.0, 25.0, 30.0));
        assert_eq!(sph_giou_loss(&g, &d), fov_giou_loss(&g, &d));
        let (g, d) = (bx(0.0, 40.0, 30.0, 20.0), bx(12.0, 40.0, 25.0, 30.0));
        assert!(sph_giou_loss(&g, &d).value > fov_giou_loss(&g, &d).value);
    }

    #[test]
    fn sph_giou_golden_values() {
        // Independently evaluated by hand from the rectangle formulas.
        // g = (10, 20, 30, 40), d = (25, 35, 20, 30):
        //   x: g [-15, 15], d [5, 25] -> I 10, C 40; y: g [0, 40], d [20, 50] -> I 20, C 50
        //   I = 200, U = 1200 + 600 - 200 = 1600, C = 2000
        let l = sph_giou_loss(&bx(10.0, 20.0, 30.0, 40.0), &bx(25.0, 35.0, 20.0, 30.0));
        assert_abs_diff_eq!(l.iou, 200.0 / 1600.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.penalty, 400.0 / 2000.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.value, 1.0 - 0.125 + 0.2, epsilon = 1e-15);
        // g = (-30, -60, 50, 20), d = (-10, -50, 10, 10): x g [-25, 25], d [15, 25];
        //   y g [-70, -50], d [-55, -45] -> I 10 x 5 = 50, U 1000 + 100 - 50 = 1050,
        //   C 50 x 25 = 1250
        let l = sph_giou_loss(&bx(-30.0, -60.0, 50.0, 20.0), &bx(-10.0, -50.0, 10.0, 10.0));
        assert_abs_diff_eq!(l.iou, 50.0 / 1050.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.penalty, 200.0 / 1250.0, epsilon = 1e-15);
    }

    #[test]
    fn gradient_at_identity() {
        let b = bx(20.0, 45.0, 30.0, 40.0);
        let g = loss_gradient(&b, &b, LossKind::Fov);
        assert!(g.at_kink);
        assert_abs_diff_eq!(g.d_lon, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(g.d_lat, 0.0, epsilon = 1e-6);
        let fd = central_difference(&b, &b, LossKind::Fov, 1e-4);
        assert_abs_diff_eq!(g.d_fov_h, fd[2], epsilon = 1e-4);
        assert_abs_diff_eq!(g.d_fov_v, fd[3], epsilon = 1e-4);
    }

    #[test]
    fn gradient_matches_finite_differences_both_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut checked = 0;
        while checked < 100 {
            let g = bx(rng.random_range(-30.0..30.0), rng.random_range(-70.0..70.0), rng.random_range(10.0..50.0), rng.random_range(10.0..50.0));
            let d = bx(g.lon() + rng.random_range(-20.0..20.0), (g.lat() + rng.random_range(-15.0..15.0)).clamp(-89.0, 89.0), rng.random_range(10.0..50.0), rng.random_range(10.0..50.0));
            for kind in [LossKind::Fov, LossKind::Sph] {
                let grad = loss_gradient(&g, &d, kind);
                assert_eq!(grad.loss, giou_loss(&g, &d, kind));
                if grad.at_kink {
                    continue;
                }
                let fd = central_difference(&g, &d, kind, 1e-4);
                for (a, b) in grad.as_array().iter().zip(fd) {
                    assert!((a - b).abs() < 1e-4, "{kind:?} {g:?} {d:?}: {a} vs {b}");
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn loss_decreases_as_disjoint_boxes_approach() {
        let g = bx(0.0, 0.0, 20.0, 20.0);
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let lon = 60.0 - 60.0 * k as f64 / 49.0;
            let l = fov_giou_loss(&g, &bx(lon, 0.0, 20.0, 20.0)).value;
            assert!(l < last, "step {k}: {l} >= {last}");
            last = l;
        }
        assert_eq!(last, 0.0);
    }

    #[test]
    fn gradient_descent_strictly_decreases() {
        let g = bx(0.0, 0.0, 40.0, 40.0);
        let mut d = bx(20.0, 20.0, 40.0, 40.0);
        let mut last = fov_giou_loss(&g, &d).value;
        for step in 0..200 {
            let grad = loss_gradient(&g, &d, LossKind::Fov).as_array();
            let next = d.to_array();
            let next = [0, 1, 2, 3].map(|i| next[i] - 0.05 * grad[i]);
            d = FovBBox::from_array(next).unwrap();
            let l = fov_giou_loss(&g, &d).value;
            assert!(l < last, "step {step}: {l} >= {last}");
            last = l;
        }
    }
}

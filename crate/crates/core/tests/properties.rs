mod common;

use proptest::prelude::*;

use common::*;
use sphergeo::dataio::{dataset_to_string, parse_dataset, Annotation, Category, DatasetFile, ImageRecord};
use sphergeo::eval::{evaluate, EvalConfig, EvalDataset, GroundTruth};
use sphergeo::iou::McParams;
use sphergeo::sphere::{cart_to_sph, sph_to_cart};
use sphergeo::{exact_iou, fov_iou, mc_iou, nms, sph_iou, Detection, FovBBox, IouMethod, RotationSpec};

fn any_box() -> impl Strategy<Value = FovBBox> {
    (-180.0..180.0f64, -85.0..85.0f64, 1.0..120.0f64, 1.0..120.0f64).prop_map(|(a, b, c, d)| bx(a, b, c, d))
}

fn near_pair() -> impl Strategy<Value = (FovBBox, FovBBox)> {
    (any_box(), -0.5..0.5f64, -0.5..0.5f64, 0.6..1.4f64, 0.6..1.4f64).prop_map(|(g, dx, dy, sh, sv)| {
        let d = bx(
            g.lon() + dx * g.fov_h(),
            (g.lat() + dy * g.fov_v()).clamp(-85.0, 85.0),
            (g.fov_h() * sh).min(170.0),
            (g.fov_v() * sv).min(170.0),
        );
        (g, d)
    })
}

const METHODS: [IouMethod; 3] = [IouMethod::Fov, IouMethod::Sph, IouMethod::Exact];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn iou_is_symmetric_and_bounded((a, b) in near_pair()) {
        for m in METHODS {
            let ab = m.iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - m.iou(&b, &a)).abs() <= 1e-9, "{} {} {}", m, ab, m.iou(&b, &a));
        }
    }

    #[test]
    fn identity_gives_one(a in any_box()) {
        prop_assert_eq!(fov_iou(&a, &a), 1.0);
        prop_assert_eq!(sph_iou(&a, &a), 1.0);
        prop_assert!((exact_iou(&a, &a) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn joint_yaw_invariance((a, b) in near_pair(), shift in -360.0..360.0f64) {
        for m in METHODS {
            let moved = m.iou(&a.shifted_lon(shift), &b.shifted_lon(shift));
            prop_assert!((moved - m.iou(&a, &b)).abs() <= 1e-9);
        }
    }

    #[test]
    fn exact_iou_after_joint_yaw_agrees_with_the_oracle((a, b) in near_pair(), yaw in 0.0..360.0f64) {
        prop_assume!(!a.pole_adjacent() && !b.pole_adjacent());
        let e = exact_iou(&a.shifted_lon(yaw), &b.shifted_lon(yaw));
        let mc = mc_iou(&a, &b, McParams::new(200_000, 9).unwrap());
        // too few hits for the binomial error to mean anything
        prop_assume!(mc.union_hits >= 2000);
        prop_assert!((e - mc.iou).abs() <= 5.0 * mc.std_error + 0.01, "{} vs {:?}", e, mc);
    }

    #[test]
    fn nms_is_idempotent_and_a_subset(
        boxes in prop::collection::vec((any_box(), 0.0..1.0f64, 1i64..3), 0..25),
        thr in 0.0..1.0f64,
    ) {
        let dets: Vec<Detection> = boxes.iter().map(|(b, s, c)| Detection::new(1, *c, *b, *s).unwrap()).collect();
        for m in [IouMethod::Fov, IouMethod::Sph] {
            let kept = nms(&dets, thr, m).unwrap();
            prop_assert_eq!(&nms(&kept, thr, m).unwrap(), &kept);
            prop_assert!(kept.iter().all(|k| dets.contains(k)));
            prop_assert!(kept.windows(2).all(|w| w[0].score >= w[1].score));
        }
    }

    #[test]
    fn rotation_round_trip(lon in -180.0..180.0f64, lat in -89.0..89.0f64, yaw in 0.0..360.0f64, pitch in -90.0..90.0f64) {
        let spec = RotationSpec::new(yaw, pitch).unwrap();
        let v = sph_to_cart(sphergeo::SphPoint::new(lon, lat).unwrap());
        let back = spec.apply_inverse(spec.apply(v));
        prop_assert!((back - v).norm() < 1e-12);
        let p = cart_to_sph(v).unwrap();
        prop_assert!((p.lat() - lat).abs() < 1e-9);
    }
}

fn eval_set() -> impl Strategy<Value = (EvalDataset, Vec<Detection>)> {
    let gts = prop::collection::vec((1i64..3, 1i64..3, any_box()), 1..12);
    let jitter = prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, 0..20u32, any::<bool>()), 0..20);
    (gts, jitter).prop_map(|(gts, jitter)| {
        let annotations: Vec<GroundTruth> = gts
            .iter()
            .enumerate()
            .map(|(i, &(image_id, category_id, bbox))| GroundTruth {
                id: i as i64,
                image_id,
                category_id,
                bbox,
            })
            .collect();
        let dets = jitter
            .iter()
            .enumerate()
            .map(|(i, &(dx, dy, q, keep_cat))| {
                let g = &annotations[i % annotations.len()];
                let b = bx(g.bbox.lon() + dx, (g.bbox.lat() + dy).clamp(-89.0, 89.0), g.bbox.fov_h(), g.bbox.fov_v());
                let cat = if keep_cat { g.category_id } else { 3 - g.category_id };
                // scores on a coarse grid so ties occur
                Detection::new(g.image_id, cat, b, q as f64 / 20.0).unwrap()
            })
            .collect();
        (
            EvalDataset {
                image_ids: vec![1, 2],
                category_ids: vec![1, 2],
                annotations,
            },
            dets,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ap_is_invariant_under_monotone_rescaling((gt, dets) in eval_set()) {
        let cfg = EvalConfig::default();
        let base = evaluate(&gt, &dets, &cfg).unwrap();
        let scaled: Vec<Detection> = dets.iter().map(|d| Detection { score: d.score * d.score * 0.5, ..*d }).collect();
        prop_assert_eq!(evaluate(&gt, &scaled, &cfg).unwrap(), base);
    }

    #[test]
    fn ap_matches_brute_force((gt, dets) in eval_set()) {
        let cfg = EvalConfig::default();
        let r = evaluate(&gt, &dets, &cfg).unwrap();
        let (ap, ap50, ap75, _) = brute_force_summary(&gt.annotations, &dets, &[1, 2], &cfg.thresholds);
        for (x, y) in [(r.ap, ap), (r.ap50, ap50), (r.ap75, ap75)] {
            let same = match (x, y) {
                (Some(a), Some(b)) => (a - b).abs() < 1e-12,
                (None, None) => true,
                _ => false,
            };
            prop_assert!(same, "{:?} vs {:?}", x, y);
        }
    }

    #[test]
    fn adding_a_false_positive_below_all_scores_never_raises_ap((gt, dets) in eval_set()) {
        let cfg = EvalConfig::default();
        let base = evaluate(&gt, &dets, &cfg).unwrap();
        let mut more = dets.clone();
        more.push(Detection::new(1, 1, bx(179.0, -80.0, 1.0, 1.0), 0.0).unwrap());
        let r = evaluate(&gt, &more, &cfg).unwrap();
        if let (Some(a), Some(b)) = (r.ap, base.ap) {
            prop_assert!(a <= b + 1e-12);
        }
    }

    #[test]
    fn dataset_save_load_identity(
        anns in prop::collection::vec((1i64..4, 1i64..3, any_box()), 0..20),
        name in "[a-zA-Z0-9 _\\-\"\\\\é]{0,12}",
    ) {
        let mut ds = DatasetFile::default();
        for id in 1..4 {
            ds.images.push(ImageRecord { id, file_name: format!("{name}{id}.jpg"), width: 2048, height: 1024 });
        }
        ds.categories = vec![Category { id: 1, name: name.clone() }, Category { id: 2, name: "b".into() }];
        for (i, (image_id, category_id, bbox)) in anns.into_iter().enumerate() {
            ds.annotations.push(Annotation { id: i as i64 * 3 + 1, image_id, category_id, bbox });
        }
        let text = dataset_to_string(&ds);
        let back = parse_dataset(std::path::Path::new("mem"), &text).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(dataset_to_string(&back), text);
    }
}

mod common;

use common::{random_pose, rng, uniform};
use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use relpose::encoding::naive_offset_residual;
use relpose::{
    constraint_residual, decode_translation, encode_input, encode_targets, CamPoint,
    CameraIntrinsics, ConstraintForm, DepthMap, EncodeOptions, Error, InputMode, InstanceMask,
    ObjPoint, RefStrategy, ReferencePoint, SceneObservation, TargetMode,
};

/// One pixel at a random image position, depth and pose, with a random reference.
fn single_pixel_case(
    r: &mut rand_chacha::ChaCha8Rng,
) -> (SceneObservation<f64>, ReferencePoint<f64>) {
    let k = CameraIntrinsics::new(
        uniform(r, 300.0, 900.0),
        uniform(r, 300.0, 900.0),
        uniform(r, -320.0, 320.0),
        uniform(r, -240.0, 240.0),
    )
    .unwrap();
    let d = uniform(r, 0.3, 3.0);
    let depth = DepthMap::new(1, 1, vec![d]).unwrap();
    let mask = InstanceMask::new(1, 1, vec![true]).unwrap();
    let pose = random_pose(r, (0.3, 3.0));
    let d0 = uniform(r, 0.3, 3.0);
    let reference = ReferencePoint::new(
        uniform(r, -0.5, 0.5),
        uniform(r, -0.5, 0.5),
        d0,
        RefStrategy::MeanVisible,
    )
    .unwrap();
    (
        SceneObservation::new(depth, mask, k, None, Some(pose)).unwrap(),
        reference,
    )
}

#[test]
fn corrected_residual_vanishes_and_as_printed_differs_by_closed_form() {
    let mut r = rng(1);
    let opts = EncodeOptions::default();
    let (mut worst, mut worst_gap) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let (obs, reference) = single_pixel_case(&mut r);
        let enc = encode_input(&obs, &reference, InputMode::DepthScaled, &opts).unwrap();
        let tgt = encode_targets(&obs, &reference, TargetMode::RelativeOffset, &opts).unwrap();
        let pose = obs.gt_pose.as_ref().unwrap();
        let corrected = constraint_residual(&enc, &tgt, pose, ConstraintForm::Corrected).unwrap();
        let printed = constraint_residual(&enc, &tgt, pose, ConstraintForm::AsPrinted).unwrap();
        for (c, p) in corrected.iter().zip(&printed) {
            worst = worst.max(c.amax());
            // independent closed form from the raw depths
            let di = obs.depth.get(0, 0);
            let expected = reference.t0() * ((1.0 - (di - reference.d0)) / (di * reference.d0));
            worst_gap = worst_gap.max((p - c - expected).amax());
        }
    }
    assert!(worst < 1e-9, "{worst}");
    assert!(worst_gap < 1e-12, "{worst_gap}");
}

#[test]
fn depth_scaled_third_component_is_exactly_zero() {
    let mut r = rng(2);
    for _ in 0..2000 {
        let (obs, reference) = single_pixel_case(&mut r);
        let p = obs.lifted_points(0.0).unwrap()[0].2;
        let scaled = relpose::encoding::depth_scaled_offset(&p, &reference);
        assert_eq!(scaled.z, 0.0);
    }
}

#[test]
fn only_the_relative_modes_satisfy_the_constraint() {
    let mut r = rng(3);
    let (obs, reference) = single_pixel_case(&mut r);
    let pose = obs.gt_pose.unwrap();
    let opts = EncodeOptions::default();
    for &input in InputMode::ALL {
        for &target in TargetMode::ALL {
            let enc = encode_input(&obs, &reference, input, &opts).unwrap();
            let tgt = encode_targets(&obs, &reference, target, &opts).unwrap();
            let res = constraint_residual(&enc, &tgt, &pose, ConstraintForm::Corrected);
            if input == InputMode::DepthScaled && target == TargetMode::RelativeOffset {
                assert!(res.unwrap()[0].amax() < 1e-9);
            } else {
                assert!(
                    matches!(res, Err(Error::ModeMismatch { .. })),
                    "{input} {target}"
                );
            }
        }
    }
}

#[test]
fn modes_are_distinct_encodings() {
    let mut r = rng(4);
    let (obs, reference) = single_pixel_case(&mut r);
    let opts = EncodeOptions::default();
    let inputs: Vec<_> = InputMode::ALL
        .iter()
        .map(|m| encode_input(&obs, &reference, *m, &opts).unwrap().pixels[0].xyd)
        .collect();
    let targets: Vec<_> = TargetMode::ALL
        .iter()
        .map(|m| encode_targets(&obs, &reference, *m, &opts).unwrap().abc[0])
        .collect();
    for set in [&inputs, &targets] {
        for i in 0..set.len() {
            for j in i + 1..set.len() {
                assert!((set[i] - set[j]).amax() > 1e-6);
            }
        }
    }
}

#[test]
fn targets_decode_to_the_ground_truth_translation() {
    let mut r = rng(5);
    let opts = EncodeOptions::default();
    for _ in 0..1000 {
        let (obs, reference) = single_pixel_case(&mut r);
        let tgt = encode_targets(&obs, &reference, TargetMode::RelativeOffset, &opts).unwrap();
        let t = decode_translation(&tgt.delta_t, &reference);
        assert!((t - obs.gt_pose.unwrap().translation()).amax() < 1e-12);
    }
}

fn on_grid(x: f64) -> f64 {
    const SCALE: f64 = (1u64 << 32) as f64;
    (x * SCALE).round() / SCALE
}

#[test]
fn naive_offset_residual_ignores_translation() {
    // Rotated points and translations live on a 2^-32 grid with magnitude
    // below 8, so regenerating camera points for a new t involves no rounding.
    let mut r = rng(6);
    for _ in 0..1000 {
        let pose = random_pose(&mut r, (0.3, 3.0));
        let rot: Matrix3<f64> = *pose.rotation();
        let obj: Vec<ObjPoint<f64>> = (0..8)
            .map(|_| ObjPoint::from_vector(&common::vec_in(&mut r, 0.1)))
            .collect();
        let rotated: Vec<Vector3<f64>> = obj
            .iter()
            .map(|o| (rot * o.to_vector()).map(on_grid))
            .collect();
        let make_cam = |t: Vector3<f64>| -> Vec<CamPoint<f64>> {
            rotated
                .iter()
                .map(|p| CamPoint::from_vector(&(p + t)))
                .collect()
        };
        let t1 = pose.translation().map(on_grid);
        let t2 = Vector3::new(
            uniform(&mut r, -1.0, 1.0),
            uniform(&mut r, -1.0, 1.0),
            uniform(&mut r, 0.3, 3.0),
        )
        .map(on_grid);
        let idx = r.random_range(0..obj.len());
        let (c1, c2) = (make_cam(t1), make_cam(t2));
        let a = naive_offset_residual(&c1, &obj, (&c1[idx], &obj[idx]), &rot).unwrap();
        let b = naive_offset_residual(&c2, &obj, (&c2[idx], &obj[idx]), &rot).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for i in 0..3 {
                assert_eq!(x[i].to_bits(), y[i].to_bits());
            }
        }
    }
}

#[test]
fn single_precision_constraint() {
    let k = CameraIntrinsics::new(500.0f32, 500.0, 2.0, 2.0).unwrap();
    let depth = DepthMap::new(4, 4, (0..16).map(|i| 0.9 + 0.01 * i as f32).collect()).unwrap();
    let mask = InstanceMask::new(4, 4, vec![true; 16]).unwrap();
    let pose = relpose::Pose32::from_axis_angle(
        &Vector3::new(0.2, 1.0, -0.3),
        0.7,
        Vector3::new(0.01, 0.02, 1.0),
    );
    let obs = SceneObservation::new(depth, mask, k, None, Some(pose)).unwrap();
    let reference =
        relpose::reference_point(&obs.depth, &obs.mask, None, &k, RefStrategy::MeanVisible)
            .unwrap();
    let opts = EncodeOptions::default();
    let enc = encode_input(&obs, &reference, InputMode::DepthScaled, &opts).unwrap();
    let tgt = encode_targets(&obs, &reference, TargetMode::RelativeOffset, &opts).unwrap();
    let res = constraint_residual(&enc, &tgt, &pose, ConstraintForm::Corrected).unwrap();
    assert!(res.iter().all(|v| v.amax() < 1e-4));
}

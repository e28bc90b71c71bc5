#![allow(dead_code)]

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relpose::synth::sample_rotation_uniform;
use relpose::{CameraIntrinsics, RigidPose};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn vec_in(rng: &mut ChaCha8Rng, half: f64) -> Vector3<f64> {
    Vector3::new(
        uniform(rng, -half, half),
        uniform(rng, -half, half),
        uniform(rng, -half, half),
    )
}

pub fn random_pose(rng: &mut ChaCha8Rng, depth: (f64, f64)) -> RigidPose<f64> {
    let q: UnitQuaternion<f64> = sample_rotation_uniform(rng);
    let t = Vector3::new(
        uniform(rng, -0.3, 0.3),
        uniform(rng, -0.3, 0.3),
        uniform(rng, depth.0, depth.1),
    );
    RigidPose::from_quaternion(&q, t)
}

pub fn camera() -> CameraIntrinsics<f64> {
    CameraIntrinsics::new(572.4114, 573.57043, 325.2611, 242.04899).unwrap()
}

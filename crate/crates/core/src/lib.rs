//! Relative-offset geometric encoding for 6D object pose estimation from
//! RGB-D crops.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, with `*32` variants
//! for `f32`. Synthetic data generation and file I/O are `f64` only.

// `!(x > 0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Serializes a named enum as its `name()` and parses it back with `FromStr`.
macro_rules! serde_via_name {
    ($name:ty) => {
        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(
                &self,
                s: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(self.name())
            }
        }

        impl<'de> serde::Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(
                d: D,
            ) -> std::result::Result<Self, D::Error> {
                let text = <std::borrow::Cow<'de, str> as serde::Deserialize>::deserialize(d)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

pub mod encoding;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod refpoint;
pub mod scalar;
pub mod solver;
pub mod synth;

pub use encoding::{
    constraint_residual, decode_translation, encode_input, encode_targets, ConstraintForm,
    EncodeOptions, EncodedPixel, GeoEncoding, GeoTargets, InputMode, SceneObservation, TargetMode,
};
pub use error::{Error, Result};
pub use geometry::{backproject, project, CamPoint, CameraIntrinsics, ObjPoint, RigidPose};
pub use metrics::{add, add_s, add_selective, auc, LossDecomposition, MetricConfig, ObjectModel};
pub use refpoint::{reference_point, DepthMap, InstanceMask, RefStrategy, ReferencePoint, Roi};
pub use scalar::{KahanSum, Scalar};
pub use solver::{
    solve_from_constraints, solve_procrustes, ConditionFlag, SolveOptions, SolveReport,
};

pub type Pose = RigidPose<f64>;
pub type Pose32 = RigidPose<f32>;
pub type Intrinsics = CameraIntrinsics<f64>;
pub type Intrinsics32 = CameraIntrinsics<f32>;
pub type Depth = DepthMap<f64>;
pub type Depth32 = DepthMap<f32>;
pub type Observation = SceneObservation<f64>;
pub type Observation32 = SceneObservation<f32>;
pub type Reference = ReferencePoint<f64>;
pub type Reference32 = ReferencePoint<f32>;
pub type Encoding = GeoEncoding<f64>;
pub type Encoding32 = GeoEncoding<f32>;
pub type Targets = GeoTargets<f64>;
pub type Targets32 = GeoTargets<f32>;
pub type Model = ObjectModel<f64>;
pub type Model32 = ObjectModel<f32>;
pub type Report = SolveReport<f64>;
pub type Report32 = SolveReport<f32>;

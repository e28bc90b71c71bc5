//! Relative-offset encoding of an observation around a reference point.
//!
//! For a visible point `pᵢ = (xᵢ, yᵢ, dᵢ)` with object-frame coordinates `aᵢ`
//! and a reference point `t₀ = (x₀, y₀, d₀)` with object-frame image `a₀`,
//! dividing `pᵢ = R·aᵢ + t` by depth and subtracting the reference gives
//!
//! ```text
//! [Δx, Δy, 0]ᵀ = R·ΔABC − (Δd / dᵢd₀)·Δt − (Δd / dᵢd₀)·t₀
//! ```
//!
//! with `Δx = xᵢ/dᵢ − x₀/d₀`, `Δd = dᵢ − d₀`, `ΔABC = aᵢ/dᵢ − a₀/d₀` and
//! `Δt = t − t₀`. The left-hand quantities plus `dᵢd₀` and `t₀/(dᵢd₀)` are
//! observable from depth alone and form the input channels; `ΔABC` and `Δt`
//! are the object-frame targets.
//!
//! [`ConstraintForm::AsPrinted`] evaluates the variant whose last term is
//! `−t₀/(dᵢd₀)` with no `Δd` factor. Exact data does not satisfy it unless
//! `Δd = 1`; it differs from the corrected residual by `(1 − Δd)·t₀/(dᵢd₀)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{
    backproject, inverse_transform, project, CamPoint, CameraIntrinsics, ObjPoint, RigidPose,
};
use crate::refpoint::{valid_pixels, DepthMap, InstanceMask, ReferencePoint};
use crate::scalar::Scalar;

/// Default minimum depth, in meters, for a pixel to take part in encoding.
pub const DEFAULT_DEPTH_EPSILON: f64 = 1e-6;

/// One RGB-D observation of a single object instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObservation<T: Scalar> {
    pub depth: DepthMap<T>,
    pub mask: InstanceMask,
    pub intrinsics: CameraIntrinsics<T>,
    /// Opaque per-pixel color, row-major. Never interpreted.
    pub rgb: Option<Vec<[u8; 3]>>,
    pub gt_pose: Option<RigidPose<T>>,
}

impl<T: Scalar> SceneObservation<T> {
    pub fn new(
        depth: DepthMap<T>,
        mask: InstanceMask,
        intrinsics: CameraIntrinsics<T>,
        rgb: Option<Vec<[u8; 3]>>,
        gt_pose: Option<RigidPose<T>>,
    ) -> Result<Self> {
        if depth.width() != mask.width() || depth.height() != mask.height() {
            return Err(Error::DimensionMismatch(format!(
                "depth {}x{} vs mask {}x{}",
                depth.width(),
                depth.height(),
                mask.width(),
                mask.height()
            )));
        }
        if let Some(rgb) = &rgb {
            if rgb.len() != depth.values().len() {
                return Err(Error::DimensionMismatch(format!(
                    "rgb has {} pixels, depth has {}",
                    rgb.len(),
                    depth.values().len()
                )));
            }
        }
        Ok(Self {
            depth,
            mask,
            intrinsics,
            rgb,
            gt_pose,
        })
    }

    /// Lifted camera points of the pixels used for encoding, row-major.
    pub fn lifted_points(&self, depth_epsilon: T) -> Result<Vec<(usize, usize, CamPoint<T>)>> {
        valid_pixels(&self.depth, &self.mask, depth_epsilon)
            .map(|(u, v, d)| {
                backproject(
                    T::from_usize_lossy(u),
                    T::from_usize_lossy(v),
                    d,
                    &self.intrinsics,
                )
                .map(|p| (u, v, p))
            })
            .collect()
    }
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($(#[$vmeta:meta])* $variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($(#[$vmeta])* $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        serde_via_name!($name);

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|m| m.name() == s)
                    .ok_or_else(|| Error::InvalidSpec(format!(
                        concat!("unknown ", stringify!($name), " `{}`"), s
                    )))
            }
        }
    };
}

named_enum! {
    /// Which camera-frame channels are produced.
    InputMode {
        /// Raw `(x, y, d)`.
        AbsoluteXyd => "absolute",
        /// `(x − x₀, y − y₀, d − d₀)`.
        OffsetXyd => "offset",
        /// `(Δx, Δy, Δd)` plus `dᵢd₀` and `t₀/(dᵢd₀)`.
        DepthScaled => "depth-scaled",
    }
}

named_enum! {
    /// Which object-frame regression target is produced per pixel.
    TargetMode {
        /// `aᵢ`.
        Absolute => "absolute",
        /// `aᵢ − a₀`.
        Offset => "offset",
        /// `aᵢ/dᵢ − a₀/d₀`.
        RelativeOffset => "relative-offset",
    }
}

named_enum! {
    ConstraintForm {
        /// `t₀` term scaled by `Δd/(dᵢd₀)`; exact for consistent data.
        Corrected => "corrected",
        /// `t₀` term scaled by `1/(dᵢd₀)`.
        AsPrinted => "as-printed",
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeOptions<T: Scalar> {
    /// Pixels with depth at or below this are skipped.
    pub depth_epsilon: T,
    /// Emit `(uᵢ − u₀, vᵢ − v₀)` where `(u₀, v₀)` is the projection of `t₀`.
    pub uv_offsets: bool,
}

impl<T: Scalar> Default for EncodeOptions<T> {
    fn default() -> Self {
        Self {
            depth_epsilon: T::lit(DEFAULT_DEPTH_EPSILON),
            uv_offsets: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPixel<T: Scalar> {
    pub u: usize,
    pub v: usize,
    /// Mode-dependent: `(x, y, d)`, `(x − x₀, y − y₀, d − d₀)` or `(Δx, Δy, Δd)`.
    pub xyd: Vector3<T>,
    /// `dᵢ·d₀`; depth-scaled mode only.
    pub dd0: Option<T>,
    /// `t₀/(dᵢ·d₀)`; depth-scaled mode only.
    pub t0_over_dd0: Option<Vector3<T>>,
    pub delta_uv: Option<(T, T)>,
    pub rgb: Option<[u8; 3]>,
}

impl<T: Scalar> EncodedPixel<T> {
    pub fn delta_x(&self) -> T {
        self.xyd.x
    }
    pub fn delta_y(&self) -> T {
        self.xyd.y
    }
    pub fn delta_d(&self) -> T {
        self.xyd.z
    }
}

/// Camera-frame input channels for every valid masked pixel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoEncoding<T: Scalar> {
    pub mode: InputMode,
    pub reference: ReferencePoint<T>,
    pub pixels: Vec<EncodedPixel<T>>,
}

/// Object-frame targets aligned with [`GeoEncoding::pixels`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeoTargets<T: Scalar> {
    pub mode: TargetMode,
    /// `t − t₀`.
    pub delta_t: Vector3<T>,
    /// Per-pixel target selected by `mode`.
    pub abc: Vec<Vector3<T>>,
}

/// `(x/d − x₀/d₀, y/d − y₀/d₀, d/d − d₀/d₀)`. The last entry is zero in exact
/// floating point for any positive finite depths.
// the third component is evaluated literally; it is exactly zero for d > 0
#[allow(clippy::eq_op)]
pub fn depth_scaled_offset<T: Scalar>(
    p: &CamPoint<T>,
    reference: &ReferencePoint<T>,
) -> Vector3<T> {
    Vector3::new(
        p.x / p.d - reference.x0 / reference.d0,
        p.y / p.d - reference.y0 / reference.d0,
        p.d / p.d - reference.d0 / reference.d0,
    )
}

pub fn encode_input<T: Scalar>(
    obs: &SceneObservation<T>,
    reference: &ReferencePoint<T>,
    mode: InputMode,
    opts: &EncodeOptions<T>,
) -> Result<GeoEncoding<T>> {
    if !(reference.d0 > T::zero()) {
        return Err(Error::InvalidDepth(reference.d0.as_f64()));
    }
    let t0 = reference.t0();
    let uv0 = if opts.uv_offsets {
        Some(project(&reference.as_cam_point(), &obs.intrinsics)?)
    } else {
        None
    };
    let width = obs.depth.width();
    let pixels: Vec<EncodedPixel<T>> = obs
        .lifted_points(opts.depth_epsilon)?
        .into_iter()
        .map(|(u, v, p)| {
            let mut px = EncodedPixel {
                u,
                v,
                xyd: p.to_vector(),
                dd0: None,
                t0_over_dd0: None,
                delta_uv: uv0
                    .map(|(u0, v0)| (T::from_usize_lossy(u) - u0, T::from_usize_lossy(v) - v0)),
                rgb: obs.rgb.as_ref().map(|rgb| rgb[v * width + u]),
            };
            match mode {
                InputMode::AbsoluteXyd => {}
                InputMode::OffsetXyd => px.xyd = p.to_vector() - t0,
                InputMode::DepthScaled => {
                    let scaled = depth_scaled_offset(&p, reference);
                    let dd0 = p.d * reference.d0;
                    px.xyd = Vector3::new(scaled.x, scaled.y, p.d - reference.d0);
                    px.dd0 = Some(dd0);
                    px.t0_over_dd0 = Some(t0 / dd0);
                }
            }
            px
        })
        .collect();
    if pixels.is_empty() {
        return Err(Error::EmptyObject);
    }
    Ok(GeoEncoding {
        mode,
        reference: *reference,
        pixels,
    })
}

/// Object-frame targets computed from the ground-truth pose.
pub fn encode_targets<T: Scalar>(
    obs: &SceneObservation<T>,
    reference: &ReferencePoint<T>,
    mode: TargetMode,
    opts: &EncodeOptions<T>,
) -> Result<GeoTargets<T>> {
    let pose = obs.gt_pose.as_ref().ok_or(Error::MissingPose)?;
    let a0 = inverse_transform(pose, &reference.as_cam_point()).to_vector();
    let d0 = reference.d0;
    let abc: Vec<Vector3<T>> = obs
        .lifted_points(opts.depth_epsilon)?
        .into_iter()
        .map(|(_, _, p)| {
            let a = inverse_transform(pose, &p).to_vector();
            match mode {
                TargetMode::Absolute => a,
                TargetMode::Offset => a - a0,
                TargetMode::RelativeOffset => a / p.d - a0 / d0,
            }
        })
        .collect();
    if abc.is_empty() {
        return Err(Error::EmptyObject);
    }
    Ok(GeoTargets {
        mode,
        delta_t: pose.translation() - reference.t0(),
        abc,
    })
}

/// `Δt + t₀`.
pub fn decode_translation<T: Scalar>(
    delta_t: &Vector3<T>,
    reference: &ReferencePoint<T>,
) -> Vector3<T> {
    delta_t + reference.t0()
}

fn require_constraint_modes<T: Scalar>(enc: &GeoEncoding<T>, tgt: &GeoTargets<T>) -> Result<()> {
    if enc.mode != InputMode::DepthScaled {
        return Err(Error::ModeMismatch {
            expected: InputMode::DepthScaled.to_string(),
            got: enc.mode.to_string(),
        });
    }
    if tgt.mode != TargetMode::RelativeOffset {
        return Err(Error::ModeMismatch {
            expected: TargetMode::RelativeOffset.to_string(),
            got: tgt.mode.to_string(),
        });
    }
    if enc.pixels.len() != tgt.abc.len() {
        return Err(Error::LengthMismatch {
            left: enc.pixels.len(),
            right: tgt.abc.len(),
        });
    }
    Ok(())
}

/// Per-pixel residual `[Δx, Δy, 0]ᵀ − RHS` of the depth-scaled constraint for
/// a candidate pose. `Δt` is taken from the pose, `ΔABC` from the targets.
pub fn constraint_residual<T: Scalar>(
    enc: &GeoEncoding<T>,
    tgt: &GeoTargets<T>,
    pose: &RigidPose<T>,
    form: ConstraintForm,
) -> Result<Vec<Vector3<T>>> {
    require_constraint_modes(enc, tgt)?;
    let t0 = enc.reference.t0();
    let delta_t = pose.translation() - t0;
    enc.pixels
        .iter()
        .zip(&tgt.abc)
        .map(|(px, abc)| {
            let (dd0, t0_scaled) = depth_scaled_channels(px)?;
            Ok(pixel_residual(
                pose.rotation(),
                &delta_t,
                &t0,
                px,
                dd0,
                &t0_scaled,
                abc,
                form,
            ))
        })
        .collect()
}

pub(crate) fn depth_scaled_channels<T: Scalar>(px: &EncodedPixel<T>) -> Result<(T, Vector3<T>)> {
    match (px.dd0, px.t0_over_dd0) {
        (Some(dd0), Some(t)) => Ok((dd0, t)),
        _ => Err(Error::ModeMismatch {
            expected: InputMode::DepthScaled.to_string(),
            got: "pixel without depth-scaled channels".into(),
        }),
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn pixel_residual<T: Scalar>(
    rotation: &Matrix3<T>,
    delta_t: &Vector3<T>,
    t0: &Vector3<T>,
    px: &EncodedPixel<T>,
    dd0: T,
    t0_over_dd0: &Vector3<T>,
    abc: &Vector3<T>,
    form: ConstraintForm,
) -> Vector3<T> {
    let lhs = Vector3::new(px.delta_x(), px.delta_y(), T::zero());
    let k = px.delta_d() / dd0;
    let t0_term = match form {
        ConstraintForm::Corrected => t0 * k,
        ConstraintForm::AsPrinted => *t0_over_dd0,
    };
    lhs - (rotation * abc - delta_t * k - t0_term)
}

/// `[xᵢ − x₀, yᵢ − y₀, dᵢ − d₀]ᵀ − R·[aᵢ − a₀, bᵢ − b₀, cᵢ − c₀]ᵀ` for each pair.
/// Translation cancels, so this constrains rotation only.
pub fn naive_offset_residual<T: Scalar>(
    cam_points: &[CamPoint<T>],
    obj_points: &[ObjPoint<T>],
    reference: (&CamPoint<T>, &ObjPoint<T>),
    rotation: &Matrix3<T>,
) -> Result<Vec<Vector3<T>>> {
    if cam_points.len() != obj_points.len() {
        return Err(Error::LengthMismatch {
            left: cam_points.len(),
            right: obj_points.len(),
        });
    }
    let c0 = reference.0.to_vector();
    let o0 = reference.1.to_vector();
    Ok(cam_points
        .iter()
        .zip(obj_points)
        .map(|(c, o)| (c.to_vector() - c0) - rotation * (o.to_vector() - o0))
        .collect())
}

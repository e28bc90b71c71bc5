//! Pin-hole camera math and rigid transforms.
//!
//! Depth `d` is the z-coordinate along the optical axis, not the ray length.
//! All lengths are meters.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pin-hole intrinsics. Focal lengths and principal point are in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T: Scalar> {
    fx: T,
    fy: T,
    cx: T,
    cy: T,
}

impl<T: Scalar> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T) -> Result<Self> {
        if !(fx.is_finite_value() && fx > T::zero()) || !(fy.is_finite_value() && fy > T::zero()) {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx} fy={fy}"
            )));
        }
        if !cx.is_finite_value() || !cy.is_finite_value() {
            return Err(Error::InvalidIntrinsics(format!(
                "principal point must be finite, got cx={cx} cy={cy}"
            )));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    pub fn fx(&self) -> T {
        self.fx
    }
    pub fn fy(&self) -> T {
        self.fy
    }
    pub fn cx(&self) -> T {
        self.cx
    }
    pub fn cy(&self) -> T {
        self.cy
    }

    /// The 3x3 matrix `K`.
    pub fn matrix(&self) -> Matrix3<T> {
        let z = T::zero();
        Matrix3::new(self.fx, z, self.cx, z, self.fy, self.cy, z, z, T::one())
    }
}

/// A point in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CamPoint<T: Scalar> {
    pub x: T,
    pub y: T,
    pub d: T,
}

impl<T: Scalar> CamPoint<T> {
    pub fn new(x: T, y: T, d: T) -> Self {
        Self { x, y, d }
    }
    pub fn to_vector(self) -> Vector3<T> {
        Vector3::new(self.x, self.y, self.d)
    }
    pub fn from_vector(v: &Vector3<T>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

/// A point in the object (model) frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjPoint<T: Scalar> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Scalar> ObjPoint<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Self { a, b, c }
    }
    pub fn to_vector(self) -> Vector3<T> {
        Vector3::new(self.a, self.b, self.c)
    }
    pub fn from_vector(v: &Vector3<T>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

/// Lifts pixel `(u, v)` with depth `d` into the camera frame.
pub fn backproject<T: Scalar>(u: T, v: T, d: T, k: &CameraIntrinsics<T>) -> Result<CamPoint<T>> {
    check_depth(d)?;
    Ok(CamPoint::new(
        (u - k.cx) / k.fx * d,
        (v - k.cy) / k.fy * d,
        d,
    ))
}

/// Projects a camera-frame point to `(u, v)` pixel coordinates.
pub fn project<T: Scalar>(p: &CamPoint<T>, k: &CameraIntrinsics<T>) -> Result<(T, T)> {
    check_depth(p.d)?;
    Ok((k.fx * p.x / p.d + k.cx, k.fy * p.y / p.d + k.cy))
}

fn check_depth<T: Scalar>(d: T) -> Result<()> {
    if d.is_finite_value() && d > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidDepth(d.as_f64()))
    }
}

/// Rigid transform from the object frame to the camera frame.
///
/// The rotation always satisfies `RᵀR = I` and `det R = 1` to within
/// [`Scalar::invariant_tol`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose<T: Scalar> {
    rotation: Matrix3<T>,
    translation: Vector3<T>,
}

impl<T: Scalar> RigidPose<T> {
    /// Validates the rotation. Inputs that miss the invariant by no more than
    /// [`Scalar::repair_tol`] are projected onto SO(3); anything worse is rejected.
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Result<Self> {
        if !translation.iter().all(|v| v.is_finite_value()) {
            return Err(Error::InvalidRotation {
                orthogonality: f64::NAN,
                det: f64::NAN,
            });
        }
        let rotation = checked_rotation(rotation)?;
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Construction helper; the quaternion is normalized by its type.
    pub fn from_quaternion(q: &UnitQuaternion<T>, translation: Vector3<T>) -> Self {
        Self::from_rotation_unchecked(q.to_rotation_matrix().into_inner(), translation)
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: &Vector3<T>, angle: T, translation: Vector3<T>) -> Self {
        let q = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle);
        Self::from_quaternion(&q, translation)
    }

    /// Projects the rotation block onto SO(3) without a tolerance gate. Used by
    /// solvers whose raw output is only approximately orthonormal.
    pub fn from_nearest_rotation(raw: &Matrix3<T>, translation: Vector3<T>) -> Self {
        Self::from_rotation_unchecked(nearest_rotation(raw), translation)
    }

    pub(crate) fn from_rotation_unchecked(rotation: Matrix3<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<T> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<T> {
        &self.translation
    }

    pub fn with_translation(&self, translation: Vector3<T>) -> Self {
        Self {
            rotation: self.rotation,
            translation,
        }
    }

    pub fn apply(&self, v: &Vector3<T>) -> Vector3<T> {
        self.rotation * v + self.translation
    }

    pub fn apply_inverse(&self, v: &Vector3<T>) -> Vector3<T> {
        self.rotation.transpose() * (v - self.translation)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        renormalized(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn invert(&self) -> Self {
        let rt = self.rotation.transpose();
        renormalized(rt, -(rt * self.translation))
    }
}

/// `R·p + t`.
pub fn transform<T: Scalar>(pose: &RigidPose<T>, p: &ObjPoint<T>) -> CamPoint<T> {
    CamPoint::from_vector(&pose.apply(&p.to_vector()))
}

/// `Rᵀ·(q − t)`.
pub fn inverse_transform<T: Scalar>(pose: &RigidPose<T>, q: &CamPoint<T>) -> ObjPoint<T> {
    ObjPoint::from_vector(&pose.apply_inverse(&q.to_vector()))
}

pub fn compose<T: Scalar>(a: &RigidPose<T>, b: &RigidPose<T>) -> RigidPose<T> {
    a.compose(b)
}

pub fn invert<T: Scalar>(a: &RigidPose<T>) -> RigidPose<T> {
    a.invert()
}

/// `(‖RᵀR − I‖_F, det R)`.
pub fn rotation_defect<T: Scalar>(r: &Matrix3<T>) -> (T, T) {
    let orth = (r.transpose() * r - Matrix3::identity()).norm();
    (orth, r.determinant())
}

fn checked_rotation<T: Scalar>(r: Matrix3<T>) -> Result<Matrix3<T>> {
    if !r.iter().all(|v| v.is_finite_value()) {
        return Err(Error::InvalidRotation {
            orthogonality: f64::NAN,
            det: f64::NAN,
        });
    }
    let (orth, det) = rotation_defect(&r);
    let det_err = (det - T::one()).abs();
    if orth <= T::invariant_tol() && det_err <= T::invariant_tol() {
        Ok(r)
    } else if orth <= T::repair_tol() && det_err <= T::repair_tol() {
        Ok(nearest_rotation(&r))
    } else {
        Err(Error::InvalidRotation {
            orthogonality: orth.as_f64(),
            det: det.as_f64(),
        })
    }
}

fn renormalized<T: Scalar>(r: Matrix3<T>, t: Vector3<T>) -> RigidPose<T> {
    let (orth, det) = rotation_defect(&r);
    let r = if orth > T::invariant_tol() || (det - T::one()).abs() > T::invariant_tol() {
        nearest_rotation(&r)
    } else {
        r
    };
    RigidPose::from_rotation_unchecked(r, t)
}

/// Closest rotation in Frobenius norm: `U·diag(1, 1, det(UVᵀ))·Vᵀ`.
pub fn nearest_rotation<T: Scalar>(m: &Matrix3<T>) -> Matrix3<T> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut fix = Matrix3::identity();
    if (u * v_t).determinant() < T::zero() {
        fix[(2, 2)] = -T::one();
    }
    u * fix * v_t
}

/// Skew-symmetric cross-product matrix `[v]×`.
pub fn skew<T: Scalar>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

//! Closed-form pose recovery.
//!
//! [`solve_procrustes`] is the classical SVD alignment of paired points.
//! [`solve_from_constraints`] recovers the pose from the relative-offset
//! channels and targets alone, without ever seeing absolute coordinates.
//!
//! # Linear structure of the constraint
//!
//! Each pixel contributes `M·ΔABCᵢ + sᵢ·S = bᵢ` where `M` stands in for the
//! rotation, `S` for `Δt`, `sᵢ = −Δdᵢ/(dᵢd₀)` and
//! `bᵢ = [Δxᵢ, Δyᵢ, 0] + (Δdᵢ/(dᵢd₀))·t₀`. The three rows decouple into three
//! least-squares problems sharing one `n×4` design matrix with rows
//! `fᵢ = [ΔABCᵢ, sᵢ]`.
//!
//! Because `dᵢ = R₃·aᵢ + t_z`, every `fᵢ` is orthogonal to `[R₃, t_z]`: the
//! design matrix has rank 3 on exact data no matter how many pixels are used.
//! The solver takes the minimum-norm solution in the rank-3 subspace and then
//! fixes the one free coefficient per row from the null vector itself: the null
//! vector gives `R₃` and `t_z` up to scale, and the first two rows are shifted
//! along it until they are orthogonal to `R₃`.

use nalgebra::{Matrix3, Matrix4, SMatrix, SVector, Vector3, Vector4};

use crate::encoding::{
    depth_scaled_channels, pixel_residual, ConstraintForm, GeoEncoding, InputMode,
};
use crate::error::{Error, Result};
use crate::geometry::{nearest_rotation, skew, CamPoint, ObjPoint, RigidPose};
use crate::refpoint::ReferencePoint;
use crate::scalar::{KahanSum, Scalar};

/// Relative eigenvalue floor of the normal matrix below which a system is degenerate.
pub const RANK_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionFlag {
    WellPosed,
    Degenerate,
}

impl ConditionFlag {
    pub fn name(&self) -> &'static str {
        match self {
            ConditionFlag::WellPosed => "well-posed",
            ConditionFlag::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T: Scalar> {
    pub pose: RigidPose<T>,
    /// Rotation block before projection onto SO(3).
    pub pre_projection_rotation: Matrix3<T>,
    pub residual_rms: T,
    pub point_count: usize,
    pub condition: ConditionFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    /// Gauss-Newton iterations on the constraint residual after the linear solve.
    /// Zero disables refinement.
    pub refine_iterations: usize,
}

/// Least-squares rigid alignment minimizing `Σ‖R·oⱼ + t − cⱼ‖²`.
pub fn solve_procrustes<T: Scalar>(
    cam_points: &[CamPoint<T>],
    obj_points: &[ObjPoint<T>],
) -> Result<SolveReport<T>> {
    if cam_points.len() != obj_points.len() {
        return Err(Error::LengthMismatch {
            left: cam_points.len(),
            right: obj_points.len(),
        });
    }
    let n = cam_points.len();
    if n < 3 {
        return Err(Error::Degenerate(format!(
            "{n} point pairs, need at least 3"
        )));
    }
    let nf = T::from_usize_lossy(n);
    let cam: Vec<Vector3<T>> = cam_points.iter().map(|p| p.to_vector()).collect();
    let obj: Vec<Vector3<T>> = obj_points.iter().map(|p| p.to_vector()).collect();
    let mu_c = cam.iter().fold(Vector3::zeros(), |acc, v| acc + v) / nf;
    let mu_o = obj.iter().fold(Vector3::zeros(), |acc, v| acc + v) / nf;

    let mut cross = Matrix3::zeros();
    let mut scatter = Matrix3::zeros();
    for (c, o) in cam.iter().zip(&obj) {
        let oc = o - mu_o;
        cross += (c - mu_c) * oc.transpose();
        scatter += oc * oc.transpose();
    }

    // Collinear or coincident object points leave rotation about their line free.
    let mut eig = scatter
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect::<Vec<_>>();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if !(eig[0] > T::zero()) || eig[1] / eig[0] < T::lit(RANK_THRESHOLD) {
        return Err(Error::Degenerate("object points are collinear".into()));
    }

    let svd = cross.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let raw = u * v_t;
    let rotation = nearest_rotation(&cross);
    let translation = mu_c - rotation * mu_o;
    let pose = RigidPose::from_rotation_unchecked(rotation, translation);

    let sq = cam.iter().zip(&obj).fold(T::zero(), |acc, (c, o)| {
        acc + (pose.apply(o) - c).norm_squared()
    });
    Ok(SolveReport {
        pose,
        pre_projection_rotation: raw,
        residual_rms: (sq / nf).sqrt(),
        point_count: n,
        condition: ConditionFlag::WellPosed,
    })
}

struct PixelTerms<T: Scalar> {
    abc: Vector3<T>,
    k: T,
    rhs: Vector3<T>,
}

/// Recovers `(R, t)` from depth-scaled channels and relative-offset targets.
pub fn solve_from_constraints<T: Scalar>(
    enc: &GeoEncoding<T>,
    delta_abc: &[Vector3<T>],
    reference: &ReferencePoint<T>,
    opts: &SolveOptions,
) -> Result<SolveReport<T>> {
    if enc.mode != InputMode::DepthScaled {
        return Err(Error::ModeMismatch {
            expected: InputMode::DepthScaled.to_string(),
            got: enc.mode.to_string(),
        });
    }
    if enc.pixels.len() != delta_abc.len() {
        return Err(Error::LengthMismatch {
            left: enc.pixels.len(),
            right: delta_abc.len(),
        });
    }
    let n = enc.pixels.len();
    if n < 6 {
        return Err(Error::Degenerate(format!("{n} pixels, need at least 6")));
    }
    let t0 = reference.t0();

    let mut terms = Vec::with_capacity(n);
    for (px, abc) in enc.pixels.iter().zip(delta_abc) {
        let (dd0, _) = depth_scaled_channels(px)?;
        let k = px.delta_d() / dd0;
        let lhs = Vector3::new(px.delta_x(), px.delta_y(), T::zero());
        terms.push(PixelTerms {
            abc: *abc,
            k,
            rhs: lhs + t0 * k,
        });
    }

    let mut normal = Matrix4::<T>::zeros();
    let mut moment = SMatrix::<T, 4, 3>::zeros();
    for term in &terms {
        let f = Vector4::new(term.abc.x, term.abc.y, term.abc.z, -term.k);
        normal += f * f.transpose();
        moment += f * term.rhs.transpose();
    }

    let eig = normal.symmetric_eigen();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let lambda = |i: usize| eig.eigenvalues[order[i]];
    let vector = |i: usize| -> Vector4<T> { eig.eigenvectors.column(order[i]).into_owned() };
    if !(lambda(0) > T::zero()) || lambda(2) / lambda(0) < T::lit(RANK_THRESHOLD) {
        return Err(Error::Degenerate(format!(
            "constraint system rank below 3 (eigenvalue ratio {:.3e})",
            (lambda(2) / lambda(0)).as_f64()
        )));
    }

    // Minimum-norm solution restricted to the rank-3 subspace.
    let mut particular = SMatrix::<T, 4, 3>::zeros();
    for i in 0..3 {
        let v = vector(i);
        particular += v * (v.transpose() * moment) / lambda(i);
    }

    let null = vector(3);
    let null_rot = Vector3::new(null.x, null.y, null.z);
    let null_norm = null_rot.norm();
    if !(null_norm > T::lit(RANK_THRESHOLD)) {
        return Err(Error::Degenerate(
            "null direction carries no rotation component".into(),
        ));
    }
    // Sign chosen so the implied object depth t_z is positive.
    let scale = if null.w >= T::zero() {
        T::one() / null_norm
    } else {
        -T::one() / null_norm
    };
    let r3 = null_rot * scale;
    let mut raw = Matrix3::zeros();
    for row in 0..2 {
        let p = particular.column(row);
        let p_rot = Vector3::new(p[0], p[1], p[2]);
        let mu = -p_rot.dot(&r3) / null_rot.dot(&r3);
        let r = p_rot + null_rot * mu;
        raw.set_row(row, &r.transpose());
    }
    raw.set_row(2, &r3.transpose());

    let mut rotation = nearest_rotation(&raw);
    let mut delta_t = best_delta_t(&terms, &rotation);

    for _ in 0..opts.refine_iterations {
        let (step_rot, step_t) = gauss_newton_step(&terms, &rotation, &delta_t);
        let angle = step_rot.norm();
        let update = if angle > T::zero() {
            nalgebra::Rotation3::from_scaled_axis(step_rot).into_inner()
        } else {
            Matrix3::identity()
        };
        rotation = nearest_rotation(&(update * rotation));
        delta_t += step_t;
        if angle + step_t.norm() < T::default_epsilon() {
            break;
        }
    }

    let translation = delta_t + t0;
    let pose = RigidPose::from_rotation_unchecked(rotation, translation);
    let mut sq = KahanSum::new();
    for (px, abc) in enc.pixels.iter().zip(delta_abc) {
        let (dd0, t0_scaled) = depth_scaled_channels(px)?;
        sq.add(
            pixel_residual(
                &rotation,
                &delta_t,
                &t0,
                px,
                dd0,
                &t0_scaled,
                abc,
                ConstraintForm::Corrected,
            )
            .norm_squared(),
        );
    }
    let sq = sq.value();
    Ok(SolveReport {
        pose,
        pre_projection_rotation: raw,
        residual_rms: (sq / T::from_usize_lossy(n)).sqrt(),
        point_count: n,
        condition: ConditionFlag::WellPosed,
    })
}

/// `Δt` minimizing the residual for a fixed rotation.
fn best_delta_t<T: Scalar>(terms: &[PixelTerms<T>], rotation: &Matrix3<T>) -> Vector3<T> {
    let mut num = Vector3::zeros();
    let mut den = T::zero();
    for t in terms {
        num += (rotation * t.abc - t.rhs) * t.k;
        den += t.k * t.k;
    }
    num / den
}

/// One Gauss-Newton step over a left rotation increment and `Δt`.
/// Residual `rᵢ = bᵢ − R·ΔABCᵢ + kᵢ·Δt`.
fn gauss_newton_step<T: Scalar>(
    terms: &[PixelTerms<T>],
    rotation: &Matrix3<T>,
    delta_t: &Vector3<T>,
) -> (Vector3<T>, Vector3<T>) {
    let mut jtj = SMatrix::<T, 6, 6>::zeros();
    let mut jtr = SVector::<T, 6>::zeros();
    for t in terms {
        let q = rotation * t.abc;
        let r = t.rhs - q + delta_t * t.k;
        let mut j = SMatrix::<T, 3, 6>::zeros();
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&q));
        j.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(Matrix3::identity() * t.k));
        jtj += j.transpose() * j;
        jtr += j.transpose() * r;
    }
    match jtj.cholesky() {
        Some(ch) => {
            let step = -ch.solve(&jtr);
            (
                Vector3::new(step[0], step[1], step[2]),
                Vector3::new(step[3], step[4], step[5]),
            )
        }
        None => (Vector3::zeros(), Vector3::zeros()),
    }
}

/// Angle of `Ra·Rbᵀ` in `[0, π]`.
///
/// Evaluated as `atan2(sin θ, cos θ)` from the skew and trace parts, which
/// equals `arccos((tr − 1)/2)` but keeps full precision near zero.
pub fn rotation_geodesic_error<T: Scalar>(a: &RigidPose<T>, b: &RigidPose<T>) -> T {
    let m = a.rotation() * b.rotation().transpose();
    let half = T::lit(0.5);
    let cos = (m.trace() - T::one()) * half;
    let sin = Vector3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    )
    .norm()
        * half;
    sin.atan2(cos)
}

/// Euclidean distance between the translations.
pub fn translation_error<T: Scalar>(a: &RigidPose<T>, b: &RigidPose<T>) -> T {
    (a.translation() - b.translation()).norm()
}

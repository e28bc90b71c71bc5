//! Pose accuracy metrics and the rotation/translation split of the ADD loss.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{ObjPoint, RigidPose};
use crate::scalar::{KahanSum, Scalar};

/// Object-frame point set used for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel<T: Scalar> {
    points: Vec<Vector3<T>>,
    diameter: T,
    symmetric: bool,
}

impl<T: Scalar> ObjectModel<T> {
    /// Builds a model and computes its diameter exhaustively.
    pub fn new(points: Vec<ObjPoint<T>>, symmetric: bool) -> Result<Self> {
        let points: Vec<Vector3<T>> = points.into_iter().map(|p| p.to_vector()).collect();
        if points.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if !points
            .iter()
            .flat_map(|p| p.iter())
            .all(|v| v.is_finite_value())
        {
            return Err(Error::InvalidModel("non-finite coordinate".into()));
        }
        let diameter = max_pairwise_distance(&points);
        if !(diameter > T::zero()) {
            return Err(Error::InvalidModel("all points coincide".into()));
        }
        Ok(Self {
            points,
            diameter,
            symmetric,
        })
    }

    pub fn points(&self) -> &[Vector3<T>] {
        &self.points
    }

    pub fn obj_points(&self) -> impl Iterator<Item = ObjPoint<T>> + '_ {
        self.points.iter().map(ObjPoint::from_vector)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn diameter(&self) -> T {
        self.diameter
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn with_symmetric(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }

    /// Mean of the model points.
    pub fn centroid(&self) -> Vector3<T> {
        let mut s = [KahanSum::new(), KahanSum::new(), KahanSum::new()];
        for p in &self.points {
            for (acc, v) in s.iter_mut().zip(p.iter()) {
                acc.add(*v);
            }
        }
        let n = T::from_usize_lossy(self.points.len());
        Vector3::new(s[0].value() / n, s[1].value() / n, s[2].value() / n)
    }
}

/// Exhaustive `max ‖pᵢ − pⱼ‖`.
pub fn max_pairwise_distance<T: Scalar>(points: &[Vector3<T>]) -> T {
    let mut best = T::zero();
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            let d = (p - q).norm_squared();
            if d > best {
                best = d;
            }
        }
    }
    best.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig<T: Scalar> {
    /// AUC cap `M`, meters.
    pub auc_max_threshold: T,
    /// Accuracy threshold as a fraction of the model diameter.
    pub threshold_fraction: T,
}

impl<T: Scalar> Default for MetricConfig<T> {
    fn default() -> Self {
        Self {
            auc_max_threshold: T::lit(0.1),
            threshold_fraction: T::lit(0.1),
        }
    }
}

impl<T: Scalar> MetricConfig<T> {
    pub fn new(auc_max_threshold: T, threshold_fraction: T) -> Result<Self> {
        if !(auc_max_threshold > T::zero() && threshold_fraction > T::zero()) {
            return Err(Error::InvalidSpec(
                "metric thresholds must be positive".into(),
            ));
        }
        Ok(Self {
            auc_max_threshold,
            threshold_fraction,
        })
    }
}

/// Mean distance between corresponding transformed model points.
pub fn add<T: Scalar>(pred: &RigidPose<T>, gt: &RigidPose<T>, model: &ObjectModel<T>) -> T {
    let mut sum = KahanSum::new();
    for p in &model.points {
        sum.add((pred.apply(p) - gt.apply(p)).norm());
    }
    sum.value() / T::from_usize_lossy(model.len())
}

/// Mean distance from each predicted point to the closest ground-truth point.
pub fn add_s<T: Scalar>(pred: &RigidPose<T>, gt: &RigidPose<T>, model: &ObjectModel<T>) -> T {
    let gt_pts: Vec<Vector3<T>> = model.points.iter().map(|p| gt.apply(p)).collect();
    let mut sum = KahanSum::new();
    for p in &model.points {
        let q = pred.apply(p);
        let mut best = (q - gt_pts[0]).norm_squared();
        for g in &gt_pts[1..] {
            let d = (q - g).norm_squared();
            if d < best {
                best = d;
            }
        }
        sum.add(best.sqrt());
    }
    sum.value() / T::from_usize_lossy(model.len())
}

/// ADD-S for symmetric models, ADD otherwise.
pub fn add_selective<T: Scalar>(
    pred: &RigidPose<T>,
    gt: &RigidPose<T>,
    model: &ObjectModel<T>,
) -> T {
    if model.symmetric {
        add_s(pred, gt, model)
    } else {
        add(pred, gt, model)
    }
}

/// Fraction of errors strictly below `threshold_fraction · diameter`.
pub fn accuracy_at_threshold<T: Scalar>(
    errors: &[T],
    model: &ObjectModel<T>,
    cfg: &MetricConfig<T>,
) -> Result<T> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let threshold = cfg.threshold_fraction * model.diameter;
    let hits = errors.iter().filter(|e| **e < threshold).count();
    Ok(T::from_usize_lossy(hits) / T::from_usize_lossy(errors.len()))
}

/// Exact area under the accuracy-vs-threshold curve on `[0, M]`, normalized
/// to `[0, 1]`: `mean(max(0, 1 − eᵢ/M))`.
pub fn auc<T: Scalar>(errors: &[T], cfg: &MetricConfig<T>) -> Result<T> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sum = KahanSum::new();
    for &e in errors {
        if !(e >= T::zero()) {
            return Err(Error::InvalidSpec(format!("negative or NaN error {e}")));
        }
        let area = T::one() - e / cfg.auc_max_threshold;
        sum.add(if area > T::zero() { area } else { T::zero() });
    }
    Ok(sum.value() / T::from_usize_lossy(errors.len()))
}

/// Squared-distance ADD training loss.
pub fn add_loss<T: Scalar>(pred: &RigidPose<T>, gt: &RigidPose<T>, model: &ObjectModel<T>) -> T {
    let mut sum = KahanSum::new();
    for p in &model.points {
        sum.add((pred.apply(p) - gt.apply(p)).norm_squared());
    }
    sum.value() / T::from_usize_lossy(model.len())
}

/// `total = rotation_part + cross_term + translation_part`, all in m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossDecomposition<T: Scalar> {
    pub total: T,
    pub rotation_part: T,
    pub translation_part: T,
    pub cross_term: T,
}

/// Splits the ADD loss with `⊖R = R̂ − R̄`, `⊖t = t̂ − t̄`:
/// `(1/m)Σ‖⊖R·pⱼ‖² + (2/m)(⊖R·Σpⱼ)·⊖t + ‖⊖t‖²`.
pub fn decompose_add_loss<T: Scalar>(
    pred: &RigidPose<T>,
    gt: &RigidPose<T>,
    model: &ObjectModel<T>,
) -> LossDecomposition<T> {
    let d_rot: Matrix3<T> = pred.rotation() - gt.rotation();
    let d_t: Vector3<T> = pred.translation() - gt.translation();
    let m = T::from_usize_lossy(model.len());

    let mut rot = KahanSum::new();
    let mut sums = [KahanSum::new(), KahanSum::new(), KahanSum::new()];
    for p in &model.points {
        rot.add((d_rot * p).norm_squared());
        for (acc, v) in sums.iter_mut().zip(p.iter()) {
            acc.add(*v);
        }
    }
    let point_sum = Vector3::new(sums[0].value(), sums[1].value(), sums[2].value());
    let rotation_part = rot.value() / m;
    let cross_term = T::lit(2.0) / m * (d_rot * point_sum).dot(&d_t);
    let translation_part = d_t.norm_squared();
    LossDecomposition {
        total: rotation_part + cross_term + translation_part,
        rotation_part,
        translation_part,
        cross_term,
    }
}

/// `w_rot·rotation_part + cross_term + w_trans·translation_part`.
pub fn weighted_add_loss<T: Scalar>(
    pred: &RigidPose<T>,
    gt: &RigidPose<T>,
    model: &ObjectModel<T>,
    w_rot: T,
    w_trans: T,
) -> Result<T> {
    if !(w_rot >= T::zero() && w_trans >= T::zero()) {
        return Err(Error::InvalidSpec(
            "loss weights must be non-negative".into(),
        ));
    }
    let dec = decompose_add_loss(pred, gt, model);
    Ok(w_rot * dec.rotation_part + dec.cross_term + w_trans * dec.translation_part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn model(symmetric: bool) -> ObjectModel<f64> {
        let pts = vec![
            ObjPoint::new(0.05, 0.0, 0.0),
            ObjPoint::new(-0.05, 0.0, 0.0),
            ObjPoint::new(0.0, 0.03, 0.01),
            ObjPoint::new(0.0, -0.03, -0.01),
        ];
        ObjectModel::new(pts, symmetric).unwrap()
    }

    fn gt() -> RigidPose<f64> {
        RigidPose::from_axis_angle(
            &Vector3::new(1.0, 1.0, 0.0),
            0.4,
            Vector3::new(0.0, 0.1, 0.8),
        )
    }

    #[test]
    fn model_validation() {
        assert!(ObjectModel::new(vec![ObjPoint::new(0.0, 0.0, 0.0)], false).is_err());
        assert!(ObjectModel::<f64>::new(vec![ObjPoint::default(); 3], false).is_err());
        assert_relative_eq!(model(false).diameter(), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn add_zero_and_pure_translation() {
        let m = model(false);
        assert_eq!(add(&gt(), &gt(), &m), 0.0);
        assert_eq!(add_s(&gt(), &gt(), &m), 0.0);
        let shifted = gt().with_translation(gt().translation() + Vector3::new(0.01, 0.0, 0.0));
        assert_relative_eq!(add(&shifted, &gt(), &m), 0.01, epsilon = 1e-15);
        assert_relative_eq!(add_loss(&shifted, &gt(), &m), 1e-4, epsilon = 1e-15);
    }

    #[test]
    fn two_point_model_flip() {
        let r = 0.05;
        let m = ObjectModel::new(
            vec![ObjPoint::new(r, 0.0, 0.0), ObjPoint::new(-r, 0.0, 0.0)],
            true,
        )
        .unwrap();
        let g = RigidPose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let p = RigidPose::from_axis_angle(&Vector3::z(), PI, *g.translation());
        assert_relative_eq!(add(&p, &g, &m), 2.0 * r, epsilon = 1e-15);
        assert!(add_s(&p, &g, &m) < 1e-15);
        assert_eq!(add_selective(&p, &g, &m), add_s(&p, &g, &m));
        let m = m.with_symmetric(false);
        assert_eq!(add_selective(&p, &g, &m), add(&p, &g, &m));
    }

    #[test]
    fn accuracy_counts() {
        let m = model(false);
        let cfg = MetricConfig::default();
        assert_eq!(accuracy_at_threshold(&[0.0, 0.0], &m, &cfg).unwrap(), 1.0);
        assert_eq!(
            accuracy_at_threshold(&[0.005, 0.02], &m, &cfg).unwrap(),
            0.5
        );
        assert_eq!(accuracy_at_threshold(&[0.5, 0.02], &m, &cfg).unwrap(), 0.0);
        // strict comparison at the threshold itself
        let th = cfg.threshold_fraction * m.diameter();
        assert_eq!(accuracy_at_threshold(&[th], &m, &cfg).unwrap(), 0.0);
        assert!(matches!(
            accuracy_at_threshold(&[], &m, &cfg),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn auc_closed_forms() {
        let cfg = MetricConfig::default();
        assert_eq!(auc(&[0.0, 0.0, 0.0], &cfg).unwrap(), 1.0);
        assert_eq!(auc(&[0.05], &cfg).unwrap(), 0.5);
        assert_eq!(auc(&[0.05, 0.2], &cfg).unwrap(), 0.25);
        assert!(matches!(auc::<f64>(&[], &cfg), Err(Error::EmptyInput)));
        assert!(auc(&[-0.1], &cfg).is_err());
    }

    #[test]
    fn decomposition_identity() {
        let m = model(false);
        let pred = RigidPose::from_axis_angle(
            &Vector3::new(0.2, -0.5, 1.0),
            0.9,
            Vector3::new(0.3, -0.2, 1.4),
        );
        let dec = decompose_add_loss(&pred, &gt(), &m);
        let direct = add_loss(&pred, &gt(), &m);
        assert_relative_eq!(dec.total, direct, max_relative = 1e-12);
        // the test model is centered exactly
        assert_eq!(dec.cross_term, 0.0);
        let zero = decompose_add_loss(&gt(), &gt(), &m);
        assert_eq!(
            (
                zero.total,
                zero.rotation_part,
                zero.translation_part,
                zero.cross_term
            ),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn weighted_loss() {
        let m = model(false);
        let pred = RigidPose::from_axis_angle(&Vector3::x(), 0.3, Vector3::new(0.0, 0.0, 0.9));
        let dec = decompose_add_loss(&pred, &gt(), &m);
        assert_relative_eq!(
            weighted_add_loss(&pred, &gt(), &m, 1.0, 1.0).unwrap(),
            dec.total
        );
        assert_relative_eq!(
            weighted_add_loss(&pred, &gt(), &m, 4.0, 1.0).unwrap(),
            4.0 * dec.rotation_part + dec.translation_part
        );
        let shifted = gt().with_translation(Vector3::new(0.0, 0.0, 1.0));
        let dec = decompose_add_loss(&shifted, &gt(), &m);
        assert_eq!(
            weighted_add_loss(&shifted, &gt(), &m, 0.0, 1.0).unwrap(),
            dec.translation_part
        );
        assert!(weighted_add_loss(&shifted, &gt(), &m, -1.0, 1.0).is_err());
    }
}

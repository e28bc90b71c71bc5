//! Deterministic synthetic scenes.
//!
//! A scene is a pure function of `(SceneSpec, index)`. The model surface is
//! sampled once from stream 0 of a ChaCha8 generator seeded with `spec.seed`;
//! scene `i` draws from stream `i + 1`. Analytic primitives are rendered by
//! casting one ray per pixel center and keeping the nearest surface hit, so
//! every lifted depth pixel lies on the model surface. Models loaded from a
//! file are point-splatted instead.

use std::path::PathBuf;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoding::SceneObservation;
use crate::error::{Error, Result};
use crate::geometry::{project, CamPoint, CameraIntrinsics, ObjPoint, RigidPose};
use crate::io::{read_ply, to_toml, IntrinsicsRecord};
use crate::metrics::ObjectModel;
use crate::refpoint::{reference_point, DepthMap, InstanceMask, RefStrategy};
use crate::scalar::KahanSum;

/// Identifier of the random stream layout, folded into every scene digest.
pub const RNG_ALGORITHM: &str = "chacha8-stream-per-scene/v1";

/// Surface primitive dimensions in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelKind {
    /// Extents along the object a, b and c axes.
    Box {
        w: f64,
        h: f64,
        l: f64,
    },
    /// Axis along c.
    Cylinder {
        r: f64,
        h: f64,
    },
    #[serde(rename = "sphere")]
    SpherePoints {
        r: f64,
    },
    FromFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationDist {
    #[default]
    UniformSo3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TranslationDist {
    Box {
        center: [f64; 3],
        half_widths: [f64; 3],
    },
    Gaussian {
        mean: [f64; 3],
        sigma: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub model: ModelKind,
    pub surface_sample_count: usize,
    pub image_size: [usize; 2],
    pub intrinsics: IntrinsicsRecord,
    #[serde(default)]
    pub rotation_dist: RotationDist,
    pub translation_dist: TranslationDist,
    /// Standard deviation of additive depth noise, truncated at 3σ. Meters.
    #[serde(default)]
    pub depth_noise_sigma: f64,
    /// Probability that a masked pixel loses its depth.
    #[serde(default)]
    pub pixel_dropout: f64,
    /// Fraction of the object's bounding-box width erased from the left.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occlusion: Option<f64>,
    pub seed: u64,
}

impl Default for SceneSpec {
    /// 640x480 camera with LineMOD-like intrinsics, an 8x6x6 cm box (diameter
    /// about 0.117 m) and translations uniform in a ±0.3 m box around 1 m depth.
    fn default() -> Self {
        Self {
            model: ModelKind::Box {
                w: 0.08,
                h: 0.06,
                l: 0.06,
            },
            surface_sample_count: 1000,
            image_size: [640, 480],
            intrinsics: IntrinsicsRecord {
                fx: 572.4114,
                fy: 573.57043,
                cx: 325.2611,
                cy: 242.04899,
            },
            rotation_dist: RotationDist::UniformSo3,
            translation_dist: TranslationDist::Box {
                center: [0.0, 0.0, 1.0],
                half_widths: [0.3, 0.3, 0.3],
            },
            depth_noise_sigma: 0.0,
            pixel_dropout: 0.0,
            occlusion: None,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn camera(&self) -> Result<CameraIntrinsics<f64>> {
        self.intrinsics.to_intrinsics()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.surface_sample_count < 2 {
            return bad("surface_sample_count must be at least 2".into());
        }
        if self.image_size[0] == 0 || self.image_size[1] == 0 {
            return bad("image size must be positive".into());
        }
        self.camera()?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match &self.model {
            ModelKind::Box { w, h, l } if !(positive(*w) && positive(*h) && positive(*l)) => {
                return bad("box dimensions must be positive".into())
            }
            ModelKind::Cylinder { r, h } if !(positive(*r) && positive(*h)) => {
                return bad("cylinder dimensions must be positive".into())
            }
            ModelKind::SpherePoints { r } if !positive(*r) => {
                return bad("sphere radius must be positive".into())
            }
            _ => {}
        }
        match &self.translation_dist {
            TranslationDist::Box {
                center,
                half_widths,
            } => {
                if !half_widths.iter().all(|h| positive(*h))
                    || !center.iter().all(|c| c.is_finite())
                {
                    return bad(
                        "translation box needs finite center and positive half widths".into(),
                    );
                }
            }
            TranslationDist::Gaussian { mean, sigma } => {
                if !sigma.iter().all(|s| s.is_finite() && *s >= 0.0)
                    || !mean.iter().all(|m| m.is_finite())
                {
                    return bad(
                        "gaussian translation needs finite mean and non-negative sigma".into(),
                    );
                }
            }
        }
        if !(self.depth_noise_sigma.is_finite() && self.depth_noise_sigma >= 0.0) {
            return bad("depth_noise_sigma must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.pixel_dropout) {
            return bad("pixel_dropout must lie in [0, 1]".into());
        }
        if let Some(f) = self.occlusion {
            if !(0.0..=1.0).contains(&f) {
                return bad("occlusion fraction must lie in [0, 1]".into());
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the RNG layout id, the serialized spec and the scene index.
    pub fn digest(&self, index: u64) -> Result<String> {
        let mut h = Sha256::new();
        h.update(RNG_ALGORITHM.as_bytes());
        h.update(b"\n");
        h.update(to_toml(self)?.as_bytes());
        h.update(b"\n");
        h.update(index.to_le_bytes());
        Ok(hex::encode(h.finalize()))
    }
}

/// Analytic surface in the model frame, centered at `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Box { half: Vector3<f64> },
    Cylinder { r: f64, half_h: f64 },
    Sphere { r: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    Analytic {
        primitive: Primitive,
        center: Vector3<f64>,
    },
    Points,
}

impl Surface {
    /// Signed distance from a model-frame point to the surface (negative inside).
    /// `None` for point-only models.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> Option<f64> {
        let Surface::Analytic { primitive, center } = self else {
            return None;
        };
        let q = p - center;
        Some(match *primitive {
            Primitive::Sphere { r } => q.norm() - r,
            Primitive::Box { half } => {
                let d = q.abs() - half;
                let outside = d.map(|v| v.max(0.0)).norm();
                outside + d.max().min(0.0)
            }
            Primitive::Cylinder { r, half_h } => {
                let radial = (q.x * q.x + q.y * q.y).sqrt() - r;
                let axial = q.z.abs() - half_h;
                let outside = (radial.max(0.0).powi(2) + axial.max(0.0).powi(2)).sqrt();
                outside + radial.max(axial).min(0.0)
            }
        })
    }

    /// Smallest positive ray parameter `s` with `origin + s·dir` on the surface.
    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let Surface::Analytic { primitive, center } = self else {
            return None;
        };
        let o = origin - center;
        match *primitive {
            Primitive::Sphere { r } => {
                let a = dir.norm_squared();
                let b = o.dot(dir);
                let c = o.norm_squared() - r * r;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let s = (-b - disc.sqrt()) / a;
                (s > 0.0).then_some(s)
            }
            Primitive::Box { half } => {
                let mut near = f64::NEG_INFINITY;
                let mut far = f64::INFINITY;
                for i in 0..3 {
                    if dir[i] == 0.0 {
                        if o[i].abs() > half[i] {
                            return None;
                        }
                        continue;
                    }
                    let s1 = (-half[i] - o[i]) / dir[i];
                    let s2 = (half[i] - o[i]) / dir[i];
                    near = near.max(s1.min(s2));
                    far = far.min(s1.max(s2));
                }
                (near <= far && near > 0.0).then_some(near)
            }
            Primitive::Cylinder { r, half_h } => {
                let mut best: Option<f64> = None;
                let mut keep = |s: f64| {
                    if s > 0.0 && best.is_none_or(|b| s < b) {
                        best = Some(s);
                    }
                };
                let a = dir.x * dir.x + dir.y * dir.y;
                if a > 0.0 {
                    let b = o.x * dir.x + o.y * dir.y;
                    let c = o.x * o.x + o.y * o.y - r * r;
                    let disc = b * b - a * c;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        for s in [(-b - sq) / a, (-b + sq) / a] {
                            if (o.z + s * dir.z).abs() <= half_h {
                                keep(s);
                            }
                        }
                    }
                }
                if dir.z != 0.0 {
                    for cap in [-half_h, half_h] {
                        let s = (cap - o.z) / dir.z;
                        let (x, y) = (o.x + s * dir.x, o.y + s * dir.y);
                        if x * x + y * y <= r * r {
                            keep(s);
                        }
                    }
                }
                best
            }
        }
    }

    /// Radius of a ball around the model origin containing the whole surface.
    fn bounding_radius(&self, model: &ObjectModel<f64>) -> f64 {
        match self {
            Surface::Analytic { primitive, center } => {
                center.norm()
                    + match *primitive {
                        Primitive::Sphere { r } => r,
                        Primitive::Box { half } => half.norm(),
                        Primitive::Cylinder { r, half_h } => (r * r + half_h * half_h).sqrt(),
                    }
            }
            Surface::Points => model.points().iter().map(|p| p.norm()).fold(0.0, f64::max),
        }
    }
}

/// An object model together with the surface used to render it.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneModel {
    pub model: ObjectModel<f64>,
    pub surface: Surface,
}

/// Uniform rotation from a uniform unit quaternion (Shoemake's subgroup method).
pub fn sample_rotation_uniform<R: Rng + ?Sized>(rng: &mut R) -> UnitQuaternion<f64> {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = nalgebra::Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    );
    UnitQuaternion::new_normalize(q)
}

fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n: f64 = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

fn sample_surface<R: Rng + ?Sized>(primitive: &Primitive, rng: &mut R) -> Vector3<f64> {
    match *primitive {
        Primitive::Sphere { r } => unit_vector(rng) * r,
        Primitive::Box { half } => {
            let areas = [half.y * half.z, half.x * half.z, half.x * half.y];
            let total: f64 = areas.iter().sum();
            let mut pick = rng.random::<f64>() * total;
            let mut axis = 2;
            for (i, a) in areas.iter().enumerate() {
                if pick < *a {
                    axis = i;
                    break;
                }
                pick -= a;
            }
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let mut p = Vector3::zeros();
            for i in 0..3 {
                p[i] = if i == axis {
                    sign * half[i]
                } else {
                    (rng.random::<f64>() * 2.0 - 1.0) * half[i]
                };
            }
            p
        }
        Primitive::Cylinder { r, half_h } => {
            let side = 2.0 * r * 2.0 * half_h;
            let cap = r * r;
            let pick = rng.random::<f64>() * (side + 2.0 * cap);
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            if pick < side {
                let z = (rng.random::<f64>() * 2.0 - 1.0) * half_h;
                Vector3::new(r * theta.cos(), r * theta.sin(), z)
            } else {
                let rho = r * rng.random::<f64>().sqrt();
                let z = if pick < side + cap { half_h } else { -half_h };
                Vector3::new(rho * theta.cos(), rho * theta.sin(), z)
            }
        }
    }
}

fn recenter(points: &mut [Vector3<f64>]) -> Vector3<f64> {
    let mut s = [KahanSum::new(), KahanSum::new(), KahanSum::new()];
    for p in points.iter() {
        for i in 0..3 {
            s[i].add(p[i]);
        }
    }
    let n = points.len() as f64;
    let c = Vector3::new(s[0].value() / n, s[1].value() / n, s[2].value() / n);
    for p in points.iter_mut() {
        *p -= c;
    }
    c
}

/// Samples the model surface and re-centers the points on their centroid.
/// Spheres and cylinders are flagged symmetric.
pub fn make_model<R: Rng + ?Sized>(
    kind: &ModelKind,
    surface_sample_count: usize,
    rng: &mut R,
) -> Result<SceneModel> {
    let (primitive, symmetric) = match kind {
        ModelKind::Box { w, h, l } => (
            Primitive::Box {
                half: Vector3::new(*w, *h, *l) / 2.0,
            },
            false,
        ),
        ModelKind::Cylinder { r, h } => (
            Primitive::Cylinder {
                r: *r,
                half_h: h / 2.0,
            },
            true,
        ),
        ModelKind::SpherePoints { r } => (Primitive::Sphere { r: *r }, true),
        ModelKind::FromFile { path } => {
            let mut points = read_ply(path)?;
            recenter(&mut points);
            let model =
                ObjectModel::new(points.iter().map(ObjPoint::from_vector).collect(), false)?;
            return Ok(SceneModel {
                model,
                surface: Surface::Points,
            });
        }
    };
    let mut points: Vec<Vector3<f64>> = (0..surface_sample_count)
        .map(|_| sample_surface(&primitive, rng))
        .collect();
    let shift = recenter(&mut points);
    let model = ObjectModel::new(
        points.iter().map(ObjPoint::from_vector).collect(),
        symmetric,
    )?;
    Ok(SceneModel {
        model,
        surface: Surface::Analytic {
            primitive,
            center: -shift,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub index: u64,
    pub observation: SceneObservation<f64>,
    pub spec_digest: String,
}

impl SyntheticScene {
    pub fn gt_pose(&self) -> &RigidPose<f64> {
        self.observation
            .gt_pose
            .as_ref()
            .expect("synthetic scenes carry a pose")
    }
}

/// Renders scenes for one spec; the model is built once.
#[derive(Debug, Clone)]
pub struct SceneGenerator {
    spec: SceneSpec,
    intrinsics: CameraIntrinsics<f64>,
    model: SceneModel,
    bounding_radius: f64,
}

fn scene_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const MAX_POSE_DRAWS: usize = 1000;

impl SceneGenerator {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        spec.validate()?;
        let intrinsics = spec.camera()?;
        let model = make_model(
            &spec.model,
            spec.surface_sample_count,
            &mut scene_rng(spec.seed, 0),
        )?;
        let bounding_radius = model.surface.bounding_radius(&model.model);
        if let TranslationDist::Box {
            center,
            half_widths,
        } = &spec.translation_dist
        {
            if center[2] - half_widths[2] - bounding_radius <= 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "translation box reaches depth {:.4} m; the object (radius {:.4} m) would cross the camera plane",
                    center[2] - half_widths[2],
                    bounding_radius
                )));
            }
        }
        Ok(Self {
            spec,
            intrinsics,
            model,
            bounding_radius,
        })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn model(&self) -> &SceneModel {
        &self.model
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics<f64> {
        &self.intrinsics
    }

    fn sample_pose(&self, rng: &mut ChaCha8Rng) -> Result<RigidPose<f64>> {
        let q = sample_rotation_uniform(rng);
        for _ in 0..MAX_POSE_DRAWS {
            let t = match &self.spec.translation_dist {
                TranslationDist::Box {
                    center,
                    half_widths,
                } => Vector3::from_fn(|i, _| {
                    center[i] + (rng.random::<f64>() * 2.0 - 1.0) * half_widths[i]
                }),
                TranslationDist::Gaussian { mean, sigma } => Vector3::from_fn(|i, _| {
                    let z: f64 = StandardNormal.sample(rng);
                    mean[i] + sigma[i] * z
                }),
            };
            if t.z - self.bounding_radius > 0.0 {
                return Ok(RigidPose::from_quaternion(&q, t));
            }
        }
        Err(Error::InvalidSpec(
            "could not draw a translation keeping the object in front of the camera".into(),
        ))
    }

    pub fn render(&self, index: u64) -> Result<SyntheticScene> {
        let mut rng = scene_rng(self.spec.seed, index + 1);
        let pose = self.sample_pose(&mut rng)?;
        let [w, h] = self.spec.image_size;
        let mut depth = DepthMap::zeros(w, h);
        let mut mask = InstanceMask::empty(w, h);
        match &self.model.surface {
            Surface::Analytic { .. } => self.ray_cast(&pose, &mut depth, &mut mask)?,
            Surface::Points => self.splat(&pose, &mut depth, &mut mask)?,
        }

        if let Some(frac) = self.spec.occlusion {
            if let Some((c0, r0, c1, r1)) = mask.bounding_box() {
                let erase = ((c1 - c0 + 1) as f64 * frac).ceil() as usize;
                for row in r0..=r1 {
                    for col in c0..(c0 + erase).min(c1 + 1) {
                        mask.set(col, row, false);
                        depth.set(col, row, 0.0);
                    }
                }
            }
        }

        let sigma = self.spec.depth_noise_sigma;
        let dropout = self.spec.pixel_dropout;
        for row in 0..h {
            for col in 0..w {
                if !mask.get(col, row) {
                    continue;
                }
                let mut d = depth.get(col, row);
                if sigma > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    d += sigma * z.clamp(-3.0, 3.0);
                }
                if dropout > 0.0 && rng.random::<f64>() < dropout {
                    d = 0.0;
                }
                depth.set(col, row, d.max(0.0));
            }
        }

        if !mask
            .values()
            .iter()
            .zip(depth.values())
            .any(|(m, d)| *m && *d > 0.0)
        {
            return Err(Error::EmptyObject);
        }
        let observation = SceneObservation::new(depth, mask, self.intrinsics, None, Some(pose))?;
        Ok(SyntheticScene {
            index,
            observation,
            spec_digest: self.spec.digest(index)?,
        })
    }

    /// Inclusive pixel window covering the projected bounding ball, clipped to the image.
    fn pixel_window(&self, pose: &RigidPose<f64>) -> Option<(usize, usize, usize, usize)> {
        let c = pose.translation();
        let rho = self.bounding_radius;
        let (mut umin, mut vmin, mut umax, mut vmax) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for dz in [-rho, rho] {
            for dx in [-rho, rho] {
                for dy in [-rho, rho] {
                    let p = CamPoint::new(c.x + dx, c.y + dy, c.z + dz);
                    let (u, v) = project(&p, &self.intrinsics).ok()?;
                    umin = umin.min(u);
                    umax = umax.max(u);
                    vmin = vmin.min(v);
                    vmax = vmax.max(v);
                }
            }
        }
        let [w, h] = self.spec.image_size;
        let lo = |x: f64| x.floor().max(0.0) as usize;
        let (c0, r0) = (lo(umin), lo(vmin));
        let c1 = umax.ceil().min((w - 1) as f64);
        let r1 = vmax.ceil().min((h - 1) as f64);
        if c1 < 0.0 || r1 < 0.0 || c0 >= w || r0 >= h {
            return None;
        }
        Some((c0, r0, c1 as usize, r1 as usize))
    }

    fn ray_cast(
        &self,
        pose: &RigidPose<f64>,
        depth: &mut DepthMap<f64>,
        mask: &mut InstanceMask,
    ) -> Result<()> {
        let Some((c0, r0, c1, r1)) = self.pixel_window(pose) else {
            return Err(Error::EmptyObject);
        };
        let k = &self.intrinsics;
        let origin = pose.apply_inverse(&Vector3::zeros());
        let rt = pose.rotation().transpose();
        for row in r0..=r1 {
            for col in c0..=c1 {
                let ray = Vector3::new(
                    (col as f64 - k.cx()) / k.fx(),
                    (row as f64 - k.cy()) / k.fy(),
                    1.0,
                );
                // ray has unit z, so the hit parameter is the depth
                if let Some(s) = self.model.surface.intersect(&origin, &(rt * ray)) {
                    depth.set(col, row, s);
                    mask.set(col, row, true);
                }
            }
        }
        Ok(())
    }

    fn splat(
        &self,
        pose: &RigidPose<f64>,
        depth: &mut DepthMap<f64>,
        mask: &mut InstanceMask,
    ) -> Result<()> {
        let [w, h] = self.spec.image_size;
        for p in self.model.model.points() {
            let q = CamPoint::from_vector(&pose.apply(p));
            let Ok((u, v)) = project(&q, &self.intrinsics) else {
                continue;
            };
            let (u, v) = (u.round(), v.round());
            if u < 0.0 || v < 0.0 || u >= w as f64 || v >= h as f64 {
                continue;
            }
            let (col, row) = (u as usize, v as usize);
            if !mask.get(col, row) || q.d < depth.get(col, row) {
                depth.set(col, row, q.d);
                mask.set(col, row, true);
            }
        }
        Ok(())
    }
}

/// Convenience wrapper building the model on every call.
pub fn render_scene(spec: &SceneSpec, index: u64) -> Result<SyntheticScene> {
    SceneGenerator::new(spec.clone())?.render(index)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisStats {
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

fn axis_stats(values: &[f64]) -> AxisStats {
    let n = values.len() as f64;
    let mut s = KahanSum::new();
    for v in values {
        s.add(*v);
    }
    let mean = s.value() / n;
    let mut ss = KahanSum::new();
    for v in values {
        ss.add((v - mean) * (v - mean));
    }
    AxisStats {
        variance: ss.value() / (n - 1.0),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Per-axis spread of ground-truth translations and of `Δt = t − t₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionReport {
    pub strategy: RefStrategy,
    pub scene_count: usize,
    pub raw_t: [AxisStats; 3],
    pub delta_t: [AxisStats; 3],
}

impl DistributionReport {
    /// `variance(t) / variance(Δt)` per axis.
    pub fn reduction_ratio(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.raw_t[i].variance / self.delta_t[i].variance)
    }
}

/// Translation targets `(t, Δt)` of one observation.
pub fn translation_pair(
    obs: &SceneObservation<f64>,
    strategy: RefStrategy,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let pose = obs.gt_pose.as_ref().ok_or(Error::MissingPose)?;
    let r = reference_point(&obs.depth, &obs.mask, None, &obs.intrinsics, strategy)?;
    let t = *pose.translation();
    Ok((t, t - r.t0()))
}

pub fn distribution_report<'a, I>(
    observations: I,
    strategy: RefStrategy,
) -> Result<DistributionReport>
where
    I: IntoIterator<Item = &'a SceneObservation<f64>>,
{
    let mut raw: [Vec<f64>; 3] = Default::default();
    let mut delta: [Vec<f64>; 3] = Default::default();
    for obs in observations {
        let (t, dt) = translation_pair(obs, strategy)?;
        for i in 0..3 {
            raw[i].push(t[i]);
            delta[i].push(dt[i]);
        }
    }
    let n = raw[0].len();
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "distribution report needs at least 2 scenes, got {n}"
        )));
    }
    Ok(DistributionReport {
        strategy,
        scene_count: n,
        raw_t: [0, 1, 2].map(|i| axis_stats(&raw[i])),
        delta_t: [0, 1, 2].map(|i| axis_stats(&delta[i])),
    })
}

//! Reference point generation from a depth map and instance mask.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{backproject, CamPoint, CameraIntrinsics};
use crate::scalar::{KahanSum, Scalar};

/// Row-major depth image in meters. Zero marks a missing measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap<T: Scalar> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Scalar> DepthMap<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "depth map {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(bad) = values
            .iter()
            .find(|v| !v.is_finite_value() || **v < T::zero())
        {
            return Err(Error::InvalidDepth(bad.as_f64()));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![T::zero(); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, col: usize, row: usize) -> T {
        self.values[row * self.width + col]
    }

    pub(crate) fn set(&mut self, col: usize, row: usize, d: T) {
        self.values[row * self.width + col] = d;
    }
}

/// Row-major foreground flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl InstanceMask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "mask {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.values[row * self.width + col]
    }

    pub(crate) fn set(&mut self, col: usize, row: usize, on: bool) {
        self.values[row * self.width + col] = on;
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| **v).count()
    }

    /// Inclusive pixel bounds `(col_min, row_min, col_max, row_max)` of the foreground.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bounds: Option<(usize, usize, usize, usize)> = None;
        for row in 0..self.height {
            for col in 0..self.width {
                if self.get(col, row) {
                    bounds = Some(match bounds {
                        None => (col, row, col, row),
                        Some((c0, r0, c1, r1)) => {
                            (c0.min(col), r0.min(row), c1.max(col), r1.max(row))
                        }
                    });
                }
            }
        }
        bounds
    }
}

/// Region of interest given by its center pixel and extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roi<T: Scalar> {
    pub c_col: T,
    pub c_row: T,
    pub w: T,
    pub h: T,
}

impl<T: Scalar> Roi<T> {
    pub fn new(c_col: T, c_row: T, w: T, h: T) -> Result<Self> {
        if !(w > T::zero() && h > T::zero()) {
            return Err(Error::InvalidSpec(format!(
                "roi extent must be positive, got {w}x{h}"
            )));
        }
        Ok(Self { c_col, c_row, w, h })
    }

    /// Box around the mask foreground, as a detector would report it.
    pub fn from_mask(mask: &InstanceMask) -> Result<Self> {
        let (c0, r0, c1, r1) = mask.bounding_box().ok_or(Error::EmptyObject)?;
        let two = T::lit(2.0);
        Self::new(
            (T::from_usize_lossy(c0) + T::from_usize_lossy(c1)) / two,
            (T::from_usize_lossy(r0) + T::from_usize_lossy(r1)) / two,
            T::from_usize_lossy(c1 - c0 + 1),
            T::from_usize_lossy(r1 - r0 + 1),
        )
    }

    fn check_intersects(&self, width: usize, height: usize) -> Result<()> {
        let half = T::lit(0.5);
        let (w, h) = (T::from_usize_lossy(width), T::from_usize_lossy(height));
        let left = self.c_col - self.w * half;
        let top = self.c_row - self.h * half;
        let right = self.c_col + self.w * half;
        let bottom = self.c_row + self.h * half;
        if right < T::zero() || bottom < T::zero() || left > w || top > h {
            Err(Error::InvalidSpec(
                "roi does not intersect the image".into(),
            ))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefStrategy {
    /// ROI center pixel lifted with the nearest (minimum) masked depth.
    CenterNearestDepth,
    /// ROI center pixel lifted with the mean masked depth.
    CenterMeanDepth,
    /// Mean of all lifted masked points.
    MeanVisible,
}

impl RefStrategy {
    pub const ALL: [RefStrategy; 3] = [
        RefStrategy::CenterNearestDepth,
        RefStrategy::CenterMeanDepth,
        RefStrategy::MeanVisible,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RefStrategy::CenterNearestDepth => "center-nearest",
            RefStrategy::CenterMeanDepth => "center-mean",
            RefStrategy::MeanVisible => "mean-visible",
        }
    }
}

impl fmt::Display for RefStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

serde_via_name!(RefStrategy);

impl FromStr for RefStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RefStrategy::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown reference strategy `{s}`")))
    }
}

/// Camera-frame anchor `t₀ = (x₀, y₀, d₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint<T: Scalar> {
    pub x0: T,
    pub y0: T,
    pub d0: T,
    pub strategy: RefStrategy,
}

impl<T: Scalar> ReferencePoint<T> {
    pub fn new(x0: T, y0: T, d0: T, strategy: RefStrategy) -> Result<Self> {
        if !(d0.is_finite_value() && d0 > T::zero())
            || !x0.is_finite_value()
            || !y0.is_finite_value()
        {
            return Err(Error::InvalidDepth(d0.as_f64()));
        }
        Ok(Self {
            x0,
            y0,
            d0,
            strategy,
        })
    }

    pub fn t0(&self) -> Vector3<T> {
        Vector3::new(self.x0, self.y0, self.d0)
    }

    pub fn as_cam_point(&self) -> CamPoint<T> {
        CamPoint::new(self.x0, self.y0, self.d0)
    }
}

/// Row-major `(col, row, depth)` for masked pixels whose depth exceeds `min_depth`.
pub fn valid_pixels<'a, T: Scalar>(
    depth: &'a DepthMap<T>,
    mask: &'a InstanceMask,
    min_depth: T,
) -> impl Iterator<Item = (usize, usize, T)> + 'a {
    let w = depth.width;
    depth
        .values
        .iter()
        .zip(mask.values.iter())
        .enumerate()
        .filter(move |(_, (d, m))| **m && **d > min_depth)
        .map(move |(i, (d, _))| (i % w, i / w, *d))
}

fn check_pair<T: Scalar>(depth: &DepthMap<T>, mask: &InstanceMask) -> Result<()> {
    if depth.width != mask.width || depth.height != mask.height {
        return Err(Error::DimensionMismatch(format!(
            "depth {}x{} vs mask {}x{}",
            depth.width, depth.height, mask.width, mask.height
        )));
    }
    Ok(())
}

fn center_with_depth<T: Scalar>(
    roi: &Roi<T>,
    d0: T,
    k: &CameraIntrinsics<T>,
    strategy: RefStrategy,
) -> Result<ReferencePoint<T>> {
    let p = backproject(roi.c_col, roi.c_row, d0, k)?;
    ReferencePoint::new(p.x, p.y, p.d, strategy)
}

/// ROI center with the minimum valid masked depth.
pub fn ref_center_nearest<T: Scalar>(
    depth: &DepthMap<T>,
    mask: &InstanceMask,
    roi: &Roi<T>,
    k: &CameraIntrinsics<T>,
) -> Result<ReferencePoint<T>> {
    check_pair(depth, mask)?;
    roi.check_intersects(depth.width, depth.height)?;
    let d0 = valid_pixels(depth, mask, T::zero())
        .map(|(_, _, d)| d)
        .reduce(|a, b| if b < a { b } else { a })
        .ok_or(Error::EmptyObject)?;
    center_with_depth(roi, d0, k, RefStrategy::CenterNearestDepth)
}

/// ROI center with the mean valid masked depth.
pub fn ref_center_meandepth<T: Scalar>(
    depth: &DepthMap<T>,
    mask: &InstanceMask,
    roi: &Roi<T>,
    k: &CameraIntrinsics<T>,
) -> Result<ReferencePoint<T>> {
    check_pair(depth, mask)?;
    roi.check_intersects(depth.width, depth.height)?;
    let mut sum = KahanSum::new();
    let mut n = 0usize;
    for (_, _, d) in valid_pixels(depth, mask, T::zero()) {
        sum.add(d);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyObject);
    }
    let d0 = sum.value() / T::from_usize_lossy(n);
    center_with_depth(roi, d0, k, RefStrategy::CenterMeanDepth)
}

/// Componentwise mean of every lifted valid masked pixel.
pub fn ref_mean_visible<T: Scalar>(
    depth: &DepthMap<T>,
    mask: &InstanceMask,
    k: &CameraIntrinsics<T>,
) -> Result<ReferencePoint<T>> {
    check_pair(depth, mask)?;
    let (mut sx, mut sy, mut sd) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
    let mut n = 0usize;
    for (col, row, d) in valid_pixels(depth, mask, T::zero()) {
        let p = backproject(T::from_usize_lossy(col), T::from_usize_lossy(row), d, k)?;
        sx.add(p.x);
        sy.add(p.y);
        sd.add(p.d);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyObject);
    }
    let n = T::from_usize_lossy(n);
    ReferencePoint::new(
        sx.value() / n,
        sy.value() / n,
        sd.value() / n,
        RefStrategy::MeanVisible,
    )
}

/// Dispatches on `strategy`. Center strategies use `roi`, or the mask bounding
/// box when none is given.
pub fn reference_point<T: Scalar>(
    depth: &DepthMap<T>,
    mask: &InstanceMask,
    roi: Option<&Roi<T>>,
    k: &CameraIntrinsics<T>,
    strategy: RefStrategy,
) -> Result<ReferencePoint<T>> {
    let derived;
    let roi = match (strategy, roi) {
        (RefStrategy::MeanVisible, _) => None,
        (_, Some(r)) => Some(r),
        (_, None) => {
            derived = Roi::from_mask(mask)?;
            Some(&derived)
        }
    };
    match strategy {
        RefStrategy::CenterNearestDepth => ref_center_nearest(depth, mask, roi.unwrap(), k),
        RefStrategy::CenterMeanDepth => ref_center_meandepth(depth, mask, roi.unwrap(), k),
        RefStrategy::MeanVisible => ref_mean_visible(depth, mask, k),
    }
}

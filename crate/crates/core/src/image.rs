//! Pixel containers shared by every stage of the pipeline.
//!
//! All samples are `f64`. An [`ImageRGB`] carries a [`ValueRange`] tag so that
//! display-referred data in `[0, 1]` and open-ended linear radiance never mix
//! silently; constructors validate the tag and all shape invariants, and the
//! containers are immutable afterwards.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Interpretation of the sample values in an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueRange {
    /// Display-referred values, every sample in `[0, 1]`.
    Unit,
    /// Scene-referred linear values, every sample finite and `>= 0`.
    Linear,
}

impl fmt::Display for ValueRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueRange::Unit => f.write_str("unit"),
            ValueRange::Linear => f.write_str("linear"),
        }
    }
}

/// Shape or range violation raised by the container constructors.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageError {
    /// Width or height is zero.
    ZeroDimension,
    /// Sample buffer length does not equal `width * height`.
    DataLength { expected: usize, got: usize },
    /// The three channel planes do not share one size.
    PlaneMismatch,
    /// A sample violates the declared value range.
    RangeViolation { range: ValueRange, index: usize, value: f64 },
    /// The image carries the wrong range tag for this use.
    WrongRange { expected: ValueRange, got: ValueRange },
    /// An exposure stack needs at least one image.
    EmptyStack,
    /// Image count and exposure time count differ.
    CountMismatch { images: usize, times: usize },
    /// Image `index` does not match the size of the first image in the stack.
    StackDimensionMismatch { index: usize },
    /// Exposure time `index` is not finite and positive.
    BadExposureTime { index: usize, value: f64 },
}

impl fmt::Display for ImageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageError::ZeroDimension => f.write_str("image dimensions must be at least 1x1"),
            ImageError::DataLength { expected, got } => {
                write!(f, "sample buffer holds {got} values, dimensions require {expected}")
            }
            ImageError::PlaneMismatch => f.write_str("channel planes differ in size"),
            ImageError::RangeViolation { range, index, value } => {
                write!(f, "sample {index} = {value} outside the {range} range")
            }
            ImageError::WrongRange { expected, got } => {
                write!(f, "expected a {expected}-range image, got {got}")
            }
            ImageError::EmptyStack => f.write_str("exposure stack is empty"),
            ImageError::CountMismatch { images, times } => {
                write!(f, "{images} images but {times} exposure times")
            }
            ImageError::StackDimensionMismatch { index } => {
                write!(f, "stack image {index} differs in size from the first image")
            }
            ImageError::BadExposureTime { index, value } => {
                write!(f, "exposure time {index} = {value} must be finite and > 0")
            }
        }
    }
}

/// One grayscale plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    pub(crate) width: usize,
    pub(crate) height: usize,
    pub(crate) data: Vec<f64>,
}

impl ImagePlane {
    /// Wraps a row-major sample buffer. Both dimensions must be nonzero and
    /// `data.len()` must equal `width * height`.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension);
        }
        let expected = width * height;
        if data.len() != expected {
            return Err(ImageError::DataLength { expected, got: data.len() });
        }
        Ok(ImagePlane { width, height, data })
    }

    /// Plane of the given size with every sample equal to `value`.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension);
        }
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(ImagePlane { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major samples.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Sample at column `x`, row `y`. Panics outside the plane.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// New plane with `f` applied to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImagePlane {
        ImagePlane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn check_range(data: &[f64], range: ValueRange) -> Result<(), ImageError> {
    for (index, &value) in data.iter().enumerate() {
        let ok = match range {
            ValueRange::Unit => value >= 0.0 && value <= 1.0,
            ValueRange::Linear => value.is_finite() && value >= 0.0,
        };
        if !ok {
            return Err(ImageError::RangeViolation { range, index, value });
        }
    }
    Ok(())
}

/// Three equally sized channel planes plus the range they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRGB {
    pub(crate) planes: [ImagePlane; 3],
    pub(crate) range: ValueRange,
}

impl ImageRGB {
    /// Combines three planes into a color image, checking that they share one
    /// size and that every sample satisfies `range`.
    pub fn new(
        r: ImagePlane,
        g: ImagePlane,
        b: ImagePlane,
        range: ValueRange,
    ) -> Result<Self, ImageError> {
        if r.width != g.width
            || r.width != b.width
            || r.height != g.height
            || r.height != b.height
        {
            return Err(ImageError::PlaneMismatch);
        }
        for plane in [&r, &g, &b] {
            check_range(&plane.data, range)?;
        }
        Ok(ImageRGB { planes: [r, g, b], range })
    }

    /// Grayscale image: one plane replicated into all three channels.
    pub fn from_plane(plane: ImagePlane, range: ValueRange) -> Result<Self, ImageError> {
        Self::new(plane.clone(), plane.clone(), plane, range)
    }

    pub fn width(&self) -> usize {
        self.planes[0].width
    }

    pub fn height(&self) -> usize {
        self.planes[0].height
    }

    pub fn range(&self) -> ValueRange {
        self.range
    }

    /// Channel planes in R, G, B order.
    pub fn planes(&self) -> &[ImagePlane; 3] {
        &self.planes
    }

    /// Unweighted channel mean, the gray signal used by fusion and sampling.
    pub fn luma_mean(&self) -> ImagePlane {
        let [r, g, b] = &self.planes;
        let data = r
            .data
            .iter()
            .zip(&g.data)
            .zip(&b.data)
            .map(|((&r, &g), &b)| (r + g + b) / 3.0)
            .collect();
        ImagePlane { width: r.width, height: r.height, data }
    }
}

/// Scene-referred radiance in linear units; always [`ValueRange::Linear`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceMap(ImageRGB);

impl RadianceMap {
    pub fn new(image: ImageRGB) -> Result<Self, ImageError> {
        if image.range != ValueRange::Linear {
            return Err(ImageError::WrongRange {
                expected: ValueRange::Linear,
                got: image.range,
            });
        }
        Ok(RadianceMap(image))
    }

    pub fn rgb(&self) -> &ImageRGB {
        &self.0
    }

    pub fn into_rgb(self) -> ImageRGB {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }
}

/// A bracketed series: same scene, same size, varying exposure time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureStack {
    images: Vec<ImageRGB>,
    exposure_times: Vec<f64>,
}

impl ExposureStack {
    /// Validates that the stack is nonempty, every image is display-referred
    /// ([`ValueRange::Unit`]) with one shared size, and each image has a
    /// finite positive exposure time in seconds.
    pub fn new(images: Vec<ImageRGB>, exposure_times: Vec<f64>) -> Result<Self, ImageError> {
        if images.is_empty() {
            return Err(ImageError::EmptyStack);
        }
        if images.len() != exposure_times.len() {
            return Err(ImageError::CountMismatch {
                images: images.len(),
                times: exposure_times.len(),
            });
        }
        let (w, h) = (images[0].width(), images[0].height());
        for (index, image) in images.iter().enumerate() {
            if image.range != ValueRange::Unit {
                return Err(ImageError::WrongRange {
                    expected: ValueRange::Unit,
                    got: image.range,
                });
            }
            if image.width() != w || image.height() != h {
                return Err(ImageError::StackDimensionMismatch { index });
            }
        }
        for (index, &value) in exposure_times.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(ImageError::BadExposureTime { index, value });
            }
        }
        Ok(ExposureStack { images, exposure_times })
    }

    pub fn images(&self) -> &[ImageRGB] {
        &self.images
    }

    pub fn exposure_times(&self) -> &[f64] {
        &self.exposure_times
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn width(&self) -> usize {
        self.images[0].width()
    }

    pub fn height(&self) -> usize {
        self.images[0].height()
    }
}

/// Rounds a unit-range sample to an 8-bit code, halves away from zero.
pub(crate) fn quantize_unit(v: f64) -> u8 {
    let q = libm::round(v * 255.0);
    if q <= 0.0 {
        0
    } else if q >= 255.0 {
        255
    } else {
        q as u8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_rejects_bad_shapes() {
        assert_eq!(ImagePlane::new(0, 4, vec![]), Err(ImageError::ZeroDimension));
        assert_eq!(ImagePlane::new(4, 0, vec![]), Err(ImageError::ZeroDimension));
        assert_eq!(
            ImagePlane::new(3, 2, vec![0.0; 5]),
            Err(ImageError::DataLength { expected: 6, got: 5 })
        );
    }

    #[test]
    fn plane_indexing_is_row_major() {
        let p = ImagePlane::new(3, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(p.get(0, 0), 0.0);
        assert_eq!(p.get(2, 0), 2.0);
        assert_eq!(p.get(0, 1), 3.0);
        assert_eq!(p.get(2, 1), 5.0);
    }

    #[test]
    fn unit_range_is_validated() {
        let ok = ImagePlane::filled(2, 2, 0.5).unwrap();
        let bad = ImagePlane::new(2, 2, vec![0.0, 1.0, 1.5, 0.2]).unwrap();
        assert!(ImageRGB::new(ok.clone(), ok.clone(), ok.clone(), ValueRange::Unit).is_ok());
        let err = ImageRGB::new(bad, ok.clone(), ok, ValueRange::Unit).unwrap_err();
        assert_eq!(
            err,
            ImageError::RangeViolation { range: ValueRange::Unit, index: 2, value: 1.5 }
        );
    }

    #[test]
    fn linear_range_allows_large_values_but_not_nan() {
        let big = ImagePlane::filled(2, 2, 4096.0).unwrap();
        assert!(ImageRGB::from_plane(big, ValueRange::Linear).is_ok());
        let nan = ImagePlane::filled(1, 1, f64::NAN).unwrap();
        assert!(ImageRGB::from_plane(nan, ValueRange::Linear).is_err());
        let neg = ImagePlane::filled(1, 1, -0.25).unwrap();
        assert!(ImageRGB::from_plane(neg, ValueRange::Linear).is_err());
    }

    #[test]
    fn radiance_map_requires_linear_tag() {
        let p = ImagePlane::filled(2, 2, 0.5).unwrap();
        let unit = ImageRGB::from_plane(p.clone(), ValueRange::Unit).unwrap();
        assert_eq!(
            RadianceMap::new(unit).unwrap_err(),
            ImageError::WrongRange { expected: ValueRange::Linear, got: ValueRange::Unit }
        );
        let linear = ImageRGB::from_plane(p, ValueRange::Linear).unwrap();
        assert!(RadianceMap::new(linear).is_ok());
    }

    #[test]
    fn stack_validation() {
        let img = |v: f64| {
            ImageRGB::from_plane(ImagePlane::filled(2, 2, v).unwrap(), ValueRange::Unit).unwrap()
        };
        assert_eq!(
            ExposureStack::new(vec![], vec![]).unwrap_err(),
            ImageError::EmptyStack
        );
        assert_eq!(
            ExposureStack::new(vec![img(0.1)], vec![]).unwrap_err(),
            ImageError::CountMismatch { images: 1, times: 0 }
        );
        let other =
            ImageRGB::from_plane(ImagePlane::filled(3, 2, 0.5).unwrap(), ValueRange::Unit)
                .unwrap();
        assert_eq!(
            ExposureStack::new(vec![img(0.1), other], vec![1.0, 2.0]).unwrap_err(),
            ImageError::StackDimensionMismatch { index: 1 }
        );
        assert_eq!(
            ExposureStack::new(vec![img(0.1)], vec![0.0]).unwrap_err(),
            ImageError::BadExposureTime { index: 0, value: 0.0 }
        );
        assert!(ExposureStack::new(vec![img(0.1), img(0.9)], vec![0.5, 2.0]).is_ok());
    }

    #[test]
    fn quantize_rounds_half_away_from_zero() {
        assert_eq!(quantize_unit(0.5), 128); // 127.5 rounds up
        assert_eq!(quantize_unit(0.0), 0);
        assert_eq!(quantize_unit(1.0), 255);
        assert_eq!(quantize_unit(0.2), 51);
    }
}

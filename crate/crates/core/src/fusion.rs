//! Exposure fusion.
//!
//! The primary method transforms every stack image, averages the coefficient
//! grids with uniform weights and inverse-transforms the mean
//! ([`fuse_dct`]). Because the transform is linear and the weights uniform,
//! the result must equal the per-pixel mean ([`fuse_spatial_mean`]) to
//! numerical precision; that equivalence is this module's central test
//! oracle. A pyramidal baseline ([`fuse_mertens`]) blends Laplacian pyramids
//! under contrast / saturation / well-exposedness weights.
//!
//! Coefficient and pixel averages sum their operands in sorted order, so
//! fusion output is bit-identical under any permutation of the stack.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::image::{ExposureStack, ImagePlane, ImageRGB, ValueRange};
use crate::transform::{block_dct2, block_idct2, dct2, idct2, CoeffGrid, CoeffLayout, TransformError};

#[derive(Debug, Clone, PartialEq)]
pub enum FusionError {
    Transform(TransformError),
    /// Quality exponents must be finite and >= 0.
    BadExponent { value: f64 },
    /// Pyramids need at least one level.
    ZeroLevels,
    /// More levels than the plane can support.
    TooManyLevels { levels: usize, max: usize },
    /// Pyramid levels do not telescope (level i+1 must be ceil(level i / 2)).
    LevelShape { index: usize },
}

impl fmt::Display for FusionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FusionError::Transform(e) => e.fmt(f),
            FusionError::BadExponent { value } => {
                write!(f, "quality exponent {value} must be finite and >= 0")
            }
            FusionError::ZeroLevels => f.write_str("pyramid needs at least one level"),
            FusionError::TooManyLevels { levels, max } => {
                write!(f, "{levels} pyramid levels, image supports at most {max}")
            }
            FusionError::LevelShape { index } => {
                write!(f, "pyramid level {index} has the wrong size")
            }
        }
    }
}

impl From<TransformError> for FusionError {
    fn from(e: TransformError) -> Self {
        FusionError::Transform(e)
    }
}

/// Exponents and pyramid depth for [`fuse_mertens`].
#[derive(Debug, Clone, PartialEq)]
pub struct MertensParams {
    pub contrast_exp: f64,
    pub saturation_exp: f64,
    pub wellexposed_exp: f64,
    /// `None` picks `floor(log2(min dim)) - 2`, clamped to at least 1.
    pub levels: Option<usize>,
}

impl Default for MertensParams {
    fn default() -> Self {
        MertensParams {
            contrast_exp: 1.0,
            saturation_exp: 1.0,
            wellexposed_exp: 1.0,
            levels: None,
        }
    }
}

/// Fusion algorithm selector.
#[derive(Debug, Clone, PartialEq)]
pub enum FusionMethod {
    /// Transform-domain uniform coefficient averaging.
    DctAverage(CoeffLayout),
    /// Per-pixel arithmetic mean (the linearity oracle).
    SpatialMean,
    /// Pyramidal blending under quality weights.
    MertensPyramid(MertensParams),
}

/// Fusion result before the final clamp.
///
/// `raw` keeps the unclamped channels so tests can compare methods exactly;
/// [`FusionOutput::image`] applies the clamp to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct FusionOutput {
    raw: [ImagePlane; 3],
    max_excursion: f64,
}

impl FusionOutput {
    fn from_raw(raw: [ImagePlane; 3]) -> Self {
        let mut max_excursion: f64 = 0.0;
        for plane in &raw {
            for &v in plane.data() {
                let out = (-v).max(v - 1.0);
                if out > max_excursion {
                    max_excursion = out;
                }
            }
        }
        FusionOutput { raw, max_excursion }
    }

    /// Unclamped channel planes, R, G, B.
    pub fn raw_planes(&self) -> &[ImagePlane; 3] {
        &self.raw
    }

    /// Largest distance any raw sample sits outside `[0, 1]` (0 if none).
    pub fn max_excursion(&self) -> f64 {
        self.max_excursion
    }

    /// The displayable fused image, clamped to the unit range.
    pub fn image(&self) -> ImageRGB {
        let [r, g, b] = &self.raw;
        let clamp = |p: &ImagePlane| p.map(|v| v.clamp(0.0, 1.0));
        ImageRGB::new(clamp(r), clamp(g), clamp(b), ValueRange::Unit)
            .expect("clamped values are in the unit range")
    }
}

/// Sums in ascending value order: the result depends only on the multiset of
/// inputs, never on stack order.
fn canonical_mean(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let mut acc = 0.0;
    for &v in values.iter() {
        acc += v;
    }
    acc / values.len() as f64
}

/// Runs the selected fusion method over the stack.
pub fn fuse(stack: &ExposureStack, method: &FusionMethod) -> Result<FusionOutput, FusionError> {
    match method {
        FusionMethod::DctAverage(layout) => fuse_dct(stack, *layout),
        FusionMethod::SpatialMean => Ok(fuse_spatial_mean(stack)),
        FusionMethod::MertensPyramid(params) => fuse_mertens(stack, params),
    }
}

/// Transform, average the coefficients uniformly, inverse-transform.
pub fn fuse_dct(stack: &ExposureStack, layout: CoeffLayout) -> Result<FusionOutput, FusionError> {
    let k = stack.len();
    let mut raw = Vec::with_capacity(3);
    let mut scratch = vec![0.0; k];
    for c in 0..3 {
        let mut grids = Vec::with_capacity(k);
        for img in stack.images() {
            let grid = match layout {
                CoeffLayout::FullFrame => dct2(&img.planes()[c]),
                CoeffLayout::Block(b) => block_dct2(&img.planes()[c], b)?,
            };
            grids.push(grid);
        }
        let len = grids[0].coeffs().len();
        let mut mean = Vec::with_capacity(len);
        for i in 0..len {
            for (j, g) in grids.iter().enumerate() {
                scratch[j] = g.coeffs()[i];
            }
            mean.push(canonical_mean(&mut scratch));
        }
        let grid = CoeffGrid::new(stack.width(), stack.height(), layout, mean)?;
        let plane = match layout {
            CoeffLayout::FullFrame => idct2(&grid)?,
            CoeffLayout::Block(_) => block_idct2(&grid)?,
        };
        raw.push(plane);
    }
    let raw: [ImagePlane; 3] = raw.try_into().expect("three channels");
    Ok(FusionOutput::from_raw(raw))
}

/// Per-pixel arithmetic mean across the stack.
pub fn fuse_spatial_mean(stack: &ExposureStack) -> FusionOutput {
    let k = stack.len();
    let (w, h) = (stack.width(), stack.height());
    let mut scratch = vec![0.0; k];
    let mut raw = Vec::with_capacity(3);
    for c in 0..3 {
        let mut data = Vec::with_capacity(w * h);
        for i in 0..w * h {
            for (j, img) in stack.images().iter().enumerate() {
                scratch[j] = img.planes()[c].data()[i];
            }
            data.push(canonical_mean(&mut scratch));
        }
        raw.push(ImagePlane::new(w, h, data).expect("stack dimensions are nonzero"));
    }
    let raw: [ImagePlane; 3] = raw.try_into().expect("three channels");
    FusionOutput::from_raw(raw)
}

/// Absolute response of the 3x3 discrete Laplacian, edges replicated.
pub fn quality_contrast(plane: &ImagePlane) -> ImagePlane {
    let (w, h) = (plane.width(), plane.height());
    ImagePlane::from_fn(w, h, |x, y| {
        let at = |dx: isize, dy: isize| {
            let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
            let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
            plane.get(sx, sy)
        };
        let lap = at(-1, 0) + at(1, 0) + at(0, -1) + at(0, 1) - 4.0 * at(0, 0);
        lap.abs()
    })
    .expect("same dimensions as input")
}

/// Population standard deviation of the three channel values.
pub fn saturation_weight(r: f64, g: f64, b: f64) -> f64 {
    let mean = (r + g + b) / 3.0;
    let var = ((r - mean) * (r - mean) + (g - mean) * (g - mean) + (b - mean) * (b - mean)) / 3.0;
    libm::sqrt(var)
}

/// Product over channels of a Gaussian centered at mid-gray (sigma 0.2).
pub fn wellexposed_weight(r: f64, g: f64, b: f64) -> f64 {
    let gauss = |v: f64| libm::exp(-(v - 0.5) * (v - 0.5) / (2.0 * 0.2 * 0.2));
    gauss(r) * gauss(g) * gauss(b)
}

/// Per-pixel [`saturation_weight`] over a color image.
pub fn quality_saturation(image: &ImageRGB) -> ImagePlane {
    let [r, g, b] = image.planes();
    let data = (0..r.data().len())
        .map(|i| saturation_weight(r.data()[i], g.data()[i], b.data()[i]))
        .collect();
    ImagePlane::new(image.width(), image.height(), data).expect("same dimensions as input")
}

/// Per-pixel [`wellexposed_weight`] over a color image.
pub fn quality_wellexposed(image: &ImageRGB) -> ImagePlane {
    let [r, g, b] = image.planes();
    let data = (0..r.data().len())
        .map(|i| wellexposed_weight(r.data()[i], g.data()[i], b.data()[i]))
        .collect();
    ImagePlane::new(image.width(), image.height(), data).expect("same dimensions as input")
}

fn floor_log2(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

/// Default pyramid depth: `floor(log2(min dim)) - 2`, at least 1.
pub fn default_levels(width: usize, height: usize) -> usize {
    let f = floor_log2(width.min(height)) as isize - 2;
    f.max(1) as usize
}

const KERNEL: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];

fn blur_line(src: &[f64], dst: &mut [f64]) {
    let m = src.len() as isize;
    for (j, out) in dst.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &kv) in KERNEL.iter().enumerate() {
            let i = (j as isize + k as isize - 2).clamp(0, m - 1);
            acc += kv * src[i as usize];
        }
        *out = acc / 16.0;
    }
}

/// Zero-insertion upsample fused with the kernel: only taps landing on
/// original samples contribute, and the 2x gain restores unit DC response so
/// constants pass through exactly (each output draws taps summing to 8/16).
fn expand_line(src: &[f64], dst: &mut [f64]) {
    let m = src.len() as isize;
    for (j, out) in dst.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &kv) in KERNEL.iter().enumerate() {
            let p = j as isize + k as isize - 2;
            if p & 1 == 0 {
                let i = (p >> 1).clamp(0, m - 1);
                acc += kv * src[i as usize];
            }
        }
        *out = acc * 0.125;
    }
}

fn rows_map(src: &ImagePlane, out_w: usize, f: impl Fn(&[f64], &mut [f64])) -> ImagePlane {
    let (w, h) = (src.width(), src.height());
    let mut data = vec![0.0; out_w * h];
    for y in 0..h {
        f(&src.data()[y * w..(y + 1) * w], &mut data[y * out_w..(y + 1) * out_w]);
    }
    ImagePlane::new(out_w, h, data).expect("nonzero dimensions")
}

fn cols_map(src: &ImagePlane, out_h: usize, f: impl Fn(&[f64], &mut [f64])) -> ImagePlane {
    let (w, h) = (src.width(), src.height());
    let mut data = vec![0.0; w * out_h];
    let mut col = vec![0.0; h];
    let mut done = vec![0.0; out_h];
    for x in 0..w {
        for y in 0..h {
            col[y] = src.get(x, y);
        }
        f(&col, &mut done);
        for y in 0..out_h {
            data[y * w + x] = done[y];
        }
    }
    ImagePlane::new(w, out_h, data).expect("nonzero dimensions")
}

fn blur_plane(src: &ImagePlane) -> ImagePlane {
    let rows = rows_map(src, src.width(), blur_line);
    cols_map(&rows, src.height(), blur_line)
}

fn downsample(src: &ImagePlane) -> ImagePlane {
    let blurred = blur_plane(src);
    let (w, h) = (src.width().div_ceil(2), src.height().div_ceil(2));
    ImagePlane::from_fn(w, h, |x, y| blurred.get(2 * x, 2 * y)).expect("halved dims stay nonzero")
}

fn expand_to(src: &ImagePlane, w: usize, h: usize) -> ImagePlane {
    let rows = rows_map(src, w, expand_line);
    cols_map(&rows, h, expand_line)
}

fn check_levels(plane: &ImagePlane, levels: usize) -> Result<(), FusionError> {
    if levels == 0 {
        return Err(FusionError::ZeroLevels);
    }
    let min_dim = plane.width().min(plane.height());
    let max = floor_log2(min_dim) + 1; // smallest level must keep >= 1 pixel
    if levels > max {
        return Err(FusionError::TooManyLevels { levels, max });
    }
    Ok(())
}

/// Successively blurred and halved copies, `levels` entries, finest first.
pub fn gaussian_pyramid(plane: &ImagePlane, levels: usize) -> Result<Vec<ImagePlane>, FusionError> {
    check_levels(plane, levels)?;
    let mut out = Vec::with_capacity(levels);
    out.push(plane.clone());
    for _ in 1..levels {
        let next = downsample(out.last().expect("pushed above"));
        out.push(next);
    }
    Ok(out)
}

/// Band-pass stack: `L_i = G_i - expand(G_{i+1})`, coarsest Gaussian last.
pub fn laplacian_pyramid(plane: &ImagePlane, levels: usize) -> Result<Vec<ImagePlane>, FusionError> {
    let gauss = gaussian_pyramid(plane, levels)?;
    let mut out = Vec::with_capacity(levels);
    for i in 0..levels - 1 {
        let up = expand_to(&gauss[i + 1], gauss[i].width(), gauss[i].height());
        out.push(zip_planes(&gauss[i], &up, |a, b| a - b));
    }
    out.push(gauss[levels - 1].clone());
    Ok(out)
}

/// Inverts [`laplacian_pyramid`] by telescoping expansion.
pub fn collapse_pyramid(levels: &[ImagePlane]) -> Result<ImagePlane, FusionError> {
    if levels.is_empty() {
        return Err(FusionError::ZeroLevels);
    }
    for i in 0..levels.len() - 1 {
        let ok = levels[i + 1].width() == levels[i].width().div_ceil(2)
            && levels[i + 1].height() == levels[i].height().div_ceil(2);
        if !ok {
            return Err(FusionError::LevelShape { index: i + 1 });
        }
    }
    let mut acc = levels.last().expect("nonempty").clone();
    for level in levels[..levels.len() - 1].iter().rev() {
        let up = expand_to(&acc, level.width(), level.height());
        acc = zip_planes(level, &up, |a, b| a + b);
    }
    Ok(acc)
}

fn zip_planes(a: &ImagePlane, b: &ImagePlane, f: impl Fn(f64, f64) -> f64) -> ImagePlane {
    debug_assert_eq!((a.width(), a.height()), (b.width(), b.height()));
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    ImagePlane::new(a.width(), a.height(), data).expect("matching dimensions")
}

fn validate_exponent(value: f64) -> Result<(), FusionError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(FusionError::BadExponent { value })
    }
}

/// Raw quality products `c^wc * s^ws * e^we + eps`, normalized per pixel so
/// the maps sum to one across the stack.
pub fn mertens_weight_maps(
    stack: &ExposureStack,
    params: &MertensParams,
) -> Result<Vec<ImagePlane>, FusionError> {
    validate_exponent(params.contrast_exp)?;
    validate_exponent(params.saturation_exp)?;
    validate_exponent(params.wellexposed_exp)?;
    const EPS: f64 = 1e-12;
    let (w, h) = (stack.width(), stack.height());
    let mut maps = Vec::with_capacity(stack.len());
    for img in stack.images() {
        let contrast = quality_contrast(&img.luma_mean());
        let saturation = quality_saturation(img);
        let wellexposed = quality_wellexposed(img);
        let data = (0..w * h)
            .map(|i| {
                libm::pow(contrast.data()[i], params.contrast_exp)
                    * libm::pow(saturation.data()[i], params.saturation_exp)
                    * libm::pow(wellexposed.data()[i], params.wellexposed_exp)
                    + EPS
            })
            .collect();
        maps.push(ImagePlane::new(w, h, data).expect("stack dimensions are nonzero"));
    }
    let mut total = vec![0.0; w * h];
    for map in &maps {
        for (t, &v) in total.iter_mut().zip(map.data()) {
            *t += v;
        }
    }
    for map in &mut maps {
        let normalized =
            map.data().iter().zip(&total).map(|(&v, &t)| v / t).collect::<Vec<f64>>();
        *map = ImagePlane::new(w, h, normalized).expect("stack dimensions are nonzero");
    }
    Ok(maps)
}

/// Pyramidal blending: weight-map Gaussian pyramids against image Laplacian
/// pyramids, summed level-wise and collapsed.
pub fn fuse_mertens(
    stack: &ExposureStack,
    params: &MertensParams,
) -> Result<FusionOutput, FusionError> {
    let min_dim = stack.width().min(stack.height());
    let levels = match params.levels {
        Some(0) => return Err(FusionError::ZeroLevels),
        Some(l) => {
            let max = floor_log2(min_dim);
            if l > max.max(1) {
                return Err(FusionError::TooManyLevels { levels: l, max: max.max(1) });
            }
            l
        }
        None => default_levels(stack.width(), stack.height()),
    };

    let maps = mertens_weight_maps(stack, params)?;
    let mut weight_pyrs = Vec::with_capacity(maps.len());
    for map in &maps {
        weight_pyrs.push(gaussian_pyramid(map, levels)?);
    }

    let mut raw = Vec::with_capacity(3);
    for c in 0..3 {
        let mut blended: Option<Vec<ImagePlane>> = None;
        for (i, img) in stack.images().iter().enumerate() {
            let lap = laplacian_pyramid(&img.planes()[c], levels)?;
            let weighted: Vec<ImagePlane> = lap
                .iter()
                .zip(&weight_pyrs[i])
                .map(|(l, w)| zip_planes(l, w, |a, b| a * b))
                .collect();
            blended = Some(match blended {
                None => weighted,
                Some(acc) => acc
                    .iter()
                    .zip(&weighted)
                    .map(|(a, b)| zip_planes(a, b, |x, y| x + y))
                    .collect(),
            });
        }
        let blended = blended.expect("stack is nonempty");
        raw.push(collapse_pyramid(&blended)?);
    }
    let raw: [ImagePlane; 3] = raw.try_into().expect("three channels");
    Ok(FusionOutput::from_raw(raw))
}

//! Camera response recovery and radiance map assembly.
//!
//! A camera maps scene irradiance I through an unknown monotone function f to
//! 8-bit codes, `Z = f(I * dt)`. Working in log space, the characteristic
//! curve `h[z] = ln f^{-1}(z)` satisfies `h[Z] = ln I + ln dt` for every
//! observation. [`solve_response`] recovers h per channel from a handful of
//! pixel locations across the stack by weighted least squares with a
//! curvature penalty, anchored at `h[128] = 0`; [`radiance_map`] then merges
//! the whole stack into scene radiance by weighted averaging in log space.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::image::{quantize_unit, ExposureStack, ImageError, ImagePlane, ImageRGB, RadianceMap, ValueRange};

/// Default curvature penalty weight on the 0..255 code grid.
pub const DEFAULT_LAMBDA: f64 = 50.0;
/// Default number of sampled pixel locations.
pub const DEFAULT_SAMPLE_COUNT: usize = 70;

#[derive(Debug, Clone, PartialEq)]
pub enum CrfError {
    /// Response curves carry exactly 256 entries.
    CurveLength { got: usize },
    /// NaN or +infinity in a curve (-infinity is allowed and means "maps to
    /// zero irradiance").
    CurveValue { index: usize, value: f64 },
    /// Curve decreases between `index - 1` and `index`.
    NotMonotone { index: usize },
    /// Curve is not anchored at `h[128] = 0`.
    NotAnchored { value: f64 },
    /// Response recovery needs at least two exposures.
    TooFewExposures { got: usize },
    /// All exposure times are equal; the system is singular.
    IdenticalExposures,
    /// The curvature penalty must be finite and >= 0.
    BadLambda { value: f64 },
    /// A sample plan must hold at least one location.
    EmptyPlan,
    /// Plan location `index` lies outside the stack's pixel grid.
    PlanOutOfRange { index: usize },
    /// Fewer usable equations than unknowns.
    Underdetermined { rows: usize, cols: usize },
    /// The least-squares factorization did not converge.
    SolveFailed,
    /// Merged radiance exceeded the representable range.
    Range(ImageError),
}

impl fmt::Display for CrfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrfError::CurveLength { got } => write!(f, "curve has {got} entries, expected 256"),
            CrfError::CurveValue { index, value } => {
                write!(f, "curve entry {index} = {value} is not usable")
            }
            CrfError::NotMonotone { index } => {
                write!(f, "curve decreases at code {index}")
            }
            CrfError::NotAnchored { value } => {
                write!(f, "curve has h[128] = {value}, expected 0")
            }
            CrfError::TooFewExposures { got } => {
                write!(f, "{got} exposure(s), response recovery needs at least 2")
            }
            CrfError::IdenticalExposures => {
                f.write_str("all exposure times are equal; system is singular")
            }
            CrfError::BadLambda { value } => {
                write!(f, "smoothness weight {value} must be finite and >= 0")
            }
            CrfError::EmptyPlan => f.write_str("sample plan is empty"),
            CrfError::PlanOutOfRange { index } => {
                write!(f, "sample location {index} outside the image")
            }
            CrfError::Underdetermined { rows, cols } => {
                write!(f, "{rows} equations for {cols} unknowns")
            }
            CrfError::SolveFailed => f.write_str("least-squares solve failed"),
            CrfError::Range(e) => write!(f, "merged radiance out of range: {e}"),
        }
    }
}

/// Triangular hat: full confidence mid-range, none at the clipped endpoints.
pub fn weight_hat(z: u8) -> f64 {
    if z <= 127 {
        f64::from(z)
    } else {
        f64::from(255 - z)
    }
}

/// Precomputed per-code weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    w: [f64; 256],
}

impl WeightTable {
    /// The triangular hat of [`weight_hat`].
    pub fn hat() -> Self {
        let mut w = [0.0; 256];
        for (z, entry) in w.iter_mut().enumerate() {
            *entry = weight_hat(z as u8);
        }
        WeightTable { w }
    }

    pub fn get(&self, z: u8) -> f64 {
        self.w[usize::from(z)]
    }

    pub fn values(&self) -> &[f64; 256] {
        &self.w
    }
}

/// Log-domain inverse response, one entry per 8-bit code.
///
/// Non-decreasing and anchored (`h[128] = 0`). Entries may be `-inf` (code
/// maps to zero irradiance, e.g. code 0 of an ideal linear camera) but never
/// NaN or `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    h: Vec<f64>,
}

impl ResponseCurve {
    pub fn new(h: Vec<f64>) -> Result<Self, CrfError> {
        if h.len() != 256 {
            return Err(CrfError::CurveLength { got: h.len() });
        }
        for (index, &value) in h.iter().enumerate() {
            if value.is_nan() || value == f64::INFINITY {
                return Err(CrfError::CurveValue { index, value });
            }
        }
        for index in 1..256 {
            if h[index] < h[index - 1] {
                return Err(CrfError::NotMonotone { index });
            }
        }
        if h[128] != 0.0 {
            return Err(CrfError::NotAnchored { value: h[128] });
        }
        Ok(ResponseCurve { h })
    }

    /// Curve of an ideal linear camera: `h[z] = ln(z/128)`.
    pub fn linear() -> Self {
        let h = (0..256).map(|z| libm::log(z as f64 / 128.0)).collect();
        ResponseCurve { h }
    }

    pub fn value(&self, z: u8) -> f64 {
        self.h[usize::from(z)]
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }
}

/// Pixel locations (flat row-major indices) used by the response solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    locations: Vec<usize>,
}

impl SamplePlan {
    pub fn from_locations(locations: Vec<usize>) -> Result<Self, CrfError> {
        if locations.is_empty() {
            return Err(CrfError::EmptyPlan);
        }
        Ok(SamplePlan { locations })
    }

    /// Deterministic histogram-stratified selection: the mid-exposure pixels
    /// are ordered by gray level and `count` quantile positions are taken, so
    /// the samples spread over the intensity range actually present.
    pub fn stratified(stack: &ExposureStack, count: usize) -> Result<Self, CrfError> {
        if count == 0 {
            return Err(CrfError::EmptyPlan);
        }
        let mid = &stack.images()[stack.len() / 2];
        let luma = mid.luma_mean();
        let mut order: Vec<usize> = (0..luma.data().len()).collect();
        order.sort_by(|&a, &b| {
            luma.data()[a].total_cmp(&luma.data()[b]).then(a.cmp(&b))
        });
        let n = order.len();
        let locations = (0..count)
            .map(|k| order[((k as f64 + 0.5) / count as f64 * n as f64) as usize % n])
            .collect();
        Ok(SamplePlan { locations })
    }

    pub fn locations(&self) -> &[usize] {
        &self.locations
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

/// Per-channel solve telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    /// Whether the raw least-squares solution was already non-decreasing.
    pub monotone_before_projection: bool,
    /// RMS distance moved by the isotonic projection (0 when none needed).
    pub projection_rms: f64,
}

/// Recovered curves plus diagnostics, R, G, B order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSolution {
    pub curves: [ResponseCurve; 3],
    pub diagnostics: [SolveDiagnostics; 3],
}

/// Pool-adjacent-violators projection onto non-decreasing sequences.
fn isotonic_non_decreasing(y: &[f64]) -> Vec<f64> {
    let mut means: Vec<f64> = Vec::with_capacity(y.len());
    let mut counts: Vec<usize> = Vec::with_capacity(y.len());
    for &v in y {
        means.push(v);
        counts.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let (mb, cb) = (means.pop().expect("nonempty"), counts.pop().expect("nonempty"));
            let last = means.len() - 1;
            let ca = counts[last];
            means[last] = (means[last] * ca as f64 + mb * cb as f64) / (ca + cb) as f64;
            counts[last] = ca + cb;
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (m, c) in means.iter().zip(&counts) {
        for _ in 0..*c {
            out.push(*m);
        }
    }
    out
}

/// Recovers the response curve of each channel by weighted least squares.
///
/// Unknowns are the 256 curve values plus one log irradiance per usable
/// sample location. Rows: one per observation (weighted by [`weight_hat`]),
/// 254 curvature rows scaled by `sqrt(lambda * w[z])`, and the anchor
/// `h[128] = 0`. A non-monotone solution is flagged and projected.
pub fn solve_response(
    stack: &ExposureStack,
    plan: &SamplePlan,
    lambda: f64,
) -> Result<ResponseSolution, CrfError> {
    let j = stack.len();
    if j < 2 {
        return Err(CrfError::TooFewExposures { got: j });
    }
    let times = stack.exposure_times();
    if times.iter().all(|&t| t == times[0]) {
        return Err(CrfError::IdenticalExposures);
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(CrfError::BadLambda { value: lambda });
    }
    let pixel_count = stack.width() * stack.height();
    if let Some(&bad) = plan.locations().iter().find(|&&loc| loc >= pixel_count) {
        return Err(CrfError::PlanOutOfRange { index: bad });
    }

    let weights = WeightTable::hat();
    let log_times: Vec<f64> = times.iter().map(|&t| libm::log(t)).collect();

    let mut curves = Vec::with_capacity(3);
    let mut diagnostics = Vec::with_capacity(3);
    for c in 0..3 {
        // Codes per (location, exposure); locations where every exposure is
        // clipped contribute nothing and drop out of the system.
        let codes: Vec<Vec<u8>> = plan
            .locations()
            .iter()
            .map(|&loc| {
                stack
                    .images()
                    .iter()
                    .map(|img| quantize_unit(img.planes()[c].data()[loc]))
                    .collect()
            })
            .collect();
        let alive: Vec<&Vec<u8>> = codes
            .iter()
            .filter(|zs| zs.iter().any(|&z| weights.get(z) > 0.0))
            .collect();
        let data_rows: usize = alive
            .iter()
            .map(|zs| zs.iter().filter(|&&z| weights.get(z) > 0.0).count())
            .sum();

        let rows = data_rows + 254 + 1;
        let cols = 256 + alive.len();
        if alive.is_empty() || rows < cols {
            return Err(CrfError::Underdetermined { rows, cols });
        }

        let mut a = DMatrix::<f64>::zeros(rows, cols);
        let mut b = DVector::<f64>::zeros(rows);
        let mut row = 0;
        for (n, zs) in alive.iter().enumerate() {
            for (jj, &z) in zs.iter().enumerate() {
                let w = weights.get(z);
                if w > 0.0 {
                    a[(row, usize::from(z))] = w;
                    a[(row, 256 + n)] = -w;
                    b[row] = w * log_times[jj];
                    row += 1;
                }
            }
        }
        for z in 1..=254usize {
            let s = libm::sqrt(lambda * weights.get(z as u8));
            a[(row, z - 1)] = s;
            a[(row, z)] = -2.0 * s;
            a[(row, z + 1)] = s;
            row += 1;
        }
        a[(row, 128)] = 1.0;

        let svd = a.svd(true, true);
        let x = svd.solve(&b, 1e-12).map_err(|_| CrfError::SolveFailed)?;
        let anchor = x[128];
        let h: Vec<f64> = (0..256).map(|z| x[z] - anchor).collect();

        let monotone = (1..256).all(|z| h[z] >= h[z - 1]);
        let (h, rms) = if monotone {
            (h, 0.0)
        } else {
            let projected = isotonic_non_decreasing(&h);
            let shift = projected[128];
            let projected: Vec<f64> = projected.iter().map(|v| v - shift).collect();
            let sq: f64 = projected.iter().zip(&h).map(|(p, r)| (p - r) * (p - r)).sum();
            (projected, libm::sqrt(sq / 256.0))
        };
        curves.push(ResponseCurve::new(h)?);
        diagnostics.push(SolveDiagnostics {
            monotone_before_projection: monotone,
            projection_rms: rms,
        });
    }

    Ok(ResponseSolution {
        curves: curves.try_into().expect("three channels"),
        diagnostics: diagnostics.try_into().expect("three channels"),
    })
}

/// Radiance merge result: the map plus how many pixels had no usable
/// (unclipped) observation in any exposure and fell back to the single
/// least-clipped code.
#[derive(Debug, Clone)]
pub struct MergeResult {
    pub map: RadianceMap,
    pub fallback_pixels: usize,
}

/// Merges the stack into scene radiance: per pixel and channel, the
/// hat-weighted mean over exposures of `h[Z] - ln dt`, exponentiated.
pub fn radiance_map(
    stack: &ExposureStack,
    curves: &[ResponseCurve; 3],
) -> Result<MergeResult, CrfError> {
    let weights = WeightTable::hat();
    let (w, h) = (stack.width(), stack.height());
    let log_times: Vec<f64> = stack.exposure_times().iter().map(|&t| libm::log(t)).collect();
    let mut channels = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    let mut fallback_pixels = 0usize;
    for i in 0..w * h {
        let mut pixel_fell_back = false;
        for (c, out) in channels.iter_mut().enumerate() {
            let mut num = 0.0;
            let mut den = 0.0;
            for (jj, img) in stack.images().iter().enumerate() {
                let z = quantize_unit(img.planes()[c].data()[i]);
                let wz = weights.get(z);
                if wz > 0.0 {
                    num += wz * (curves[c].value(z) - log_times[jj]);
                    den += wz;
                }
            }
            let log_i = if den > 0.0 {
                num / den
            } else {
                // Every exposure clipped: trust the code closest to mid-range.
                pixel_fell_back = true;
                let mut best = 0usize;
                let mut best_dist = f64::INFINITY;
                for (jj, img) in stack.images().iter().enumerate() {
                    let z = quantize_unit(img.planes()[c].data()[i]);
                    let dist = (f64::from(z) - 127.5).abs();
                    if dist < best_dist {
                        best_dist = dist;
                        best = jj;
                    }
                }
                let z = quantize_unit(stack.images()[best].planes()[c].data()[i]);
                curves[c].value(z) - log_times[best]
            };
            out.push(libm::exp(log_i));
        }
        if pixel_fell_back {
            fallback_pixels += 1;
        }
    }
    let [r, g, b] = channels;
    let plane = |d| ImagePlane::new(w, h, d).expect("stack dimensions are nonzero");
    let rgb = ImageRGB::new(plane(r), plane(g), plane(b), ValueRange::Linear)
        .map_err(CrfError::Range)?;
    let map = RadianceMap::new(rgb).map_err(CrfError::Range)?;
    Ok(MergeResult { map, fallback_pixels })
}

/// Film response used when simulating exposures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CameraModel {
    /// `f(x) = x`.
    Linear,
    /// `f(x) = x^(1/g)` (display-style gamma encoding).
    Gamma(f64),
}

impl CameraModel {
    fn apply(&self, x: f64) -> f64 {
        match *self {
            CameraModel::Linear => x,
            CameraModel::Gamma(g) => libm::pow(x, 1.0 / g),
        }
    }
}

/// Simulates one sensor code: `Z = quantize(clamp(f(I * dt)))`.
pub fn exposure_from_irradiance(irradiance: f64, dt: f64, camera: CameraModel) -> u8 {
    let response = camera.apply(irradiance * dt);
    quantize_unit(response.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hat_weight_values() {
        assert_eq!(weight_hat(0), 0.0);
        assert_eq!(weight_hat(255), 0.0);
        assert_eq!(weight_hat(100), 100.0);
        assert_eq!(weight_hat(127), 127.0);
        assert_eq!(weight_hat(200), 55.0);
    }

    #[test]
    fn hat_table_is_symmetric_and_nonnegative() {
        let table = WeightTable::hat();
        for z in 0..=255u8 {
            assert!(table.get(z) >= 0.0);
            assert_eq!(table.get(z), table.get(255 - z));
        }
    }

    #[test]
    fn curve_validation() {
        assert!(matches!(
            ResponseCurve::new(alloc::vec![0.0; 10]),
            Err(CrfError::CurveLength { got: 10 })
        ));
        let mut h: Vec<f64> = (0..256).map(|z| (z as f64 - 128.0) / 64.0).collect();
        assert!(ResponseCurve::new(h.clone()).is_ok());
        h[40] = f64::NAN;
        assert!(matches!(
            ResponseCurve::new(h.clone()),
            Err(CrfError::CurveValue { index: 40, .. })
        ));
        h[40] = 10.0; // jumps above its successors
        assert!(matches!(ResponseCurve::new(h.clone()), Err(CrfError::NotMonotone { index: 41 })));
        h[40] = (40.0 - 128.0) / 64.0;
        h[128] = 0.001; // still monotone, no longer anchored
        assert!(matches!(
            ResponseCurve::new(h),
            Err(CrfError::NotAnchored { value }) if value == 0.001
        ));
    }

    #[test]
    fn linear_curve_shape() {
        let curve = ResponseCurve::linear();
        assert_eq!(curve.value(128), 0.0);
        assert_eq!(curve.value(0), f64::NEG_INFINITY);
        assert!((curve.value(255) - libm::log(255.0 / 128.0)).abs() < 1e-15);
    }

    #[test]
    fn exposure_simulation_examples() {
        assert_eq!(exposure_from_irradiance(0.5, 1.0, CameraModel::Linear), 128);
        assert_eq!(exposure_from_irradiance(3.0, 1.0, CameraModel::Linear), 255);
        assert_eq!(exposure_from_irradiance(0.25, 4.0, CameraModel::Linear), 255);
        assert_eq!(exposure_from_irradiance(0.0, 8.0, CameraModel::Linear), 0);
        assert_eq!(exposure_from_irradiance(0.0, 1.0, CameraModel::Gamma(2.2)), 0);
        let z = exposure_from_irradiance(0.5, 1.0, CameraModel::Gamma(2.2));
        assert_eq!(z, quantize_unit(libm::pow(0.5, 1.0 / 2.2)));
    }

    #[test]
    fn isotonic_projection_pools_violators() {
        let y = [1.0, 3.0, 2.0, 4.0];
        assert_eq!(isotonic_non_decreasing(&y), alloc::vec![1.0, 2.5, 2.5, 4.0]);
        let sorted = [1.0, 2.0, 3.0];
        assert_eq!(isotonic_non_decreasing(&sorted), sorted.to_vec());
    }

    /// Renders a random irradiance field through `camera` at each exposure.
    fn simulate_stack(
        irradiance: &ImagePlane,
        times: &[f64],
        camera: CameraModel,
    ) -> ExposureStack {
        let images = times
            .iter()
            .map(|&t| {
                let plane = irradiance.map(|i| {
                    f64::from(exposure_from_irradiance(i, t, camera)) / 255.0
                });
                ImageRGB::from_plane(plane, ValueRange::Unit).unwrap()
            })
            .collect();
        ExposureStack::new(images, times.to_vec()).unwrap()
    }

    fn log_uniform_field(w: usize, h: usize, lo: f64, hi: f64, seed: u64) -> ImagePlane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (llo, lhi) = (libm::log(lo), libm::log(hi));
        ImagePlane::from_fn(w, h, |_, _| libm::exp(rng.gen_range(llo..lhi))).unwrap()
    }

    #[test]
    fn recovers_linear_camera_response() {
        let field = log_uniform_field(60, 60, 0.002, 1.0, 90);
        let stack = simulate_stack(&field, &[0.25, 1.0, 4.0], CameraModel::Linear);
        let plan = SamplePlan::stratified(&stack, DEFAULT_SAMPLE_COUNT).unwrap();
        let solution = solve_response(&stack, &plan, DEFAULT_LAMBDA).unwrap();
        for c in 0..3 {
            let curve = &solution.curves[c];
            let mut worst = 0.0f64;
            for z in 20..=235u8 {
                let truth = libm::log(f64::from(z) / 128.0);
                worst = worst.max((curve.value(z) - truth).abs());
            }
            assert!(worst <= 0.05, "channel {c}: worst error {worst}");
            assert!(solution.diagnostics[c].projection_rms <= 0.02);
        }
    }

    #[test]
    fn recovers_gamma_camera_response() {
        let field = log_uniform_field(60, 60, 0.0005, 1.0, 91);
        let stack = simulate_stack(&field, &[0.25, 1.0, 4.0], CameraModel::Gamma(2.2));
        let plan = SamplePlan::stratified(&stack, DEFAULT_SAMPLE_COUNT).unwrap();
        let solution = solve_response(&stack, &plan, DEFAULT_LAMBDA).unwrap();
        // f(x) = x^(1/2.2) quantized over [0,1]: f^{-1}(z) = (z/255)^2.2, so
        // anchored truth is 2.2*(ln(z/255) - ln(128/255)).
        for c in 0..3 {
            let curve = &solution.curves[c];
            let mut worst = 0.0f64;
            for z in 20..=235u8 {
                let truth = 2.2 * (libm::log(f64::from(z) / 255.0) - libm::log(128.0 / 255.0));
                worst = worst.max((curve.value(z) - truth).abs());
            }
            assert!(worst <= 0.08, "channel {c}: worst error {worst}");
            assert!(solution.diagnostics[c].projection_rms <= 0.02);
        }
    }

    #[test]
    fn code_log_consistency_on_simulated_camera() {
        // For unclipped simulated codes, h_true(Z) tracks ln I + ln dt up to
        // the shared anchoring constant, within quantization slack.
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let truth = ResponseCurve::linear();
        let offset = libm::log(255.0 / 128.0); // anchor constant of z/255 vs z/128
        for _ in 0..2000 {
            let i: f64 = rng.gen_range(0.05..0.9);
            let t: f64 = [0.25, 1.0, 4.0][rng.gen_range(0..3)];
            let z = exposure_from_irradiance(i, t, CameraModel::Linear);
            if !(20..=235).contains(&z) {
                continue;
            }
            let lhs = truth.value(z);
            let rhs = libm::log(i) + libm::log(t) + offset;
            assert!((lhs - rhs).abs() <= 0.03, "z={z}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn single_exposure_is_rejected() {
        let field = log_uniform_field(8, 8, 0.1, 1.0, 93);
        let stack = simulate_stack(&field, &[1.0], CameraModel::Linear);
        let plan = SamplePlan::stratified(&stack, 16).unwrap();
        assert!(matches!(
            solve_response(&stack, &plan, DEFAULT_LAMBDA),
            Err(CrfError::TooFewExposures { got: 1 })
        ));
    }

    #[test]
    fn identical_exposures_are_rejected() {
        let field = log_uniform_field(8, 8, 0.1, 1.0, 94);
        let stack = simulate_stack(&field, &[2.0, 2.0, 2.0], CameraModel::Linear);
        let plan = SamplePlan::stratified(&stack, 16).unwrap();
        assert!(matches!(
            solve_response(&stack, &plan, DEFAULT_LAMBDA),
            Err(CrfError::IdenticalExposures)
        ));
    }

    #[test]
    fn saturated_plan_is_underdetermined() {
        // Every sampled pixel clipped in every exposure: nothing to fit.
        let white = ImagePlane::filled(8, 8, 1.0).unwrap();
        let img = ImageRGB::from_plane(white, ValueRange::Unit).unwrap();
        let stack =
            ExposureStack::new(alloc::vec![img.clone(), img], alloc::vec![1.0, 2.0]).unwrap();
        let plan = SamplePlan::stratified(&stack, 16).unwrap();
        assert!(matches!(
            solve_response(&stack, &plan, DEFAULT_LAMBDA),
            Err(CrfError::Underdetermined { .. })
        ));
    }

    #[test]
    fn plan_bounds_are_checked() {
        let field = log_uniform_field(4, 4, 0.1, 1.0, 95);
        let stack = simulate_stack(&field, &[1.0, 2.0], CameraModel::Linear);
        let plan = SamplePlan::from_locations(alloc::vec![3, 99]).unwrap();
        assert!(matches!(
            solve_response(&stack, &plan, DEFAULT_LAMBDA),
            Err(CrfError::PlanOutOfRange { index: 99 })
        ));
    }

    #[test]
    fn stratified_plan_is_deterministic_and_spread() {
        let field = log_uniform_field(32, 32, 0.01, 1.0, 96);
        let stack = simulate_stack(&field, &[0.5, 1.0, 2.0], CameraModel::Linear);
        let a = SamplePlan::stratified(&stack, 50).unwrap();
        let b = SamplePlan::stratified(&stack, 50).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        // quantile selection: sampled gray levels must not all collapse
        let luma = stack.images()[1].luma_mean();
        let lo = a.locations().iter().map(|&l| luma.data()[l]).fold(f64::MAX, f64::min);
        let hi = a.locations().iter().map(|&l| luma.data()[l]).fold(f64::MIN, f64::max);
        assert!(hi - lo > 0.2, "samples span {lo}..{hi}");
    }

    #[test]
    fn radiance_of_single_linear_image() {
        let plane = ImagePlane::from_fn(16, 16, |x, y| (y * 16 + x) as f64 / 255.0).unwrap();
        let img = ImageRGB::from_plane(plane, ValueRange::Unit).unwrap();
        let stack = ExposureStack::new(alloc::vec![img], alloc::vec![1.0]).unwrap();
        let curves = [ResponseCurve::linear(), ResponseCurve::linear(), ResponseCurve::linear()];
        let merged = radiance_map(&stack, &curves).unwrap();
        for (i, &v) in merged.map.rgb().planes()[0].data().iter().enumerate() {
            let want = i as f64 / 128.0;
            if i == 0 {
                assert_eq!(v, 0.0); // code 0 falls back to exp(-inf)
            } else {
                assert!((v - want).abs() <= want * 1e-12, "code {i}: {v} vs {want}");
            }
        }
        // codes 0 and 255 both have zero hat weight -> fallback pixels
        assert_eq!(merged.fallback_pixels, 2);
    }

    #[test]
    fn consistent_pair_matches_single_exposure() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        let field = ImagePlane::from_fn(20, 20, |_, _| rng.gen_range(0.15..0.48)).unwrap();
        let pair = simulate_stack(&field, &[1.0, 2.0], CameraModel::Linear);
        let single = simulate_stack(&field, &[1.0], CameraModel::Linear);
        let curves = [ResponseCurve::linear(), ResponseCurve::linear(), ResponseCurve::linear()];
        let merged = radiance_map(&pair, &curves).unwrap();
        let alone = radiance_map(&single, &curves).unwrap();
        assert_eq!(merged.fallback_pixels, 0);
        for c in 0..3 {
            let m = merged.map.rgb().planes()[c].data();
            let s = alone.map.rgb().planes()[c].data();
            for i in 0..m.len() {
                assert!((m[i] - s[i]).abs() / s[i] <= 0.02, "pixel {i}: {} vs {}", m[i], s[i]);
            }
        }
    }

    #[test]
    fn all_clipped_pixel_takes_fallback() {
        let mut data = alloc::vec![0.5; 9];
        data[4] = 1.0;
        let plane = ImagePlane::new(3, 3, data).unwrap();
        let img = ImageRGB::from_plane(plane, ValueRange::Unit).unwrap();
        let stack =
            ExposureStack::new(alloc::vec![img.clone(), img], alloc::vec![1.0, 2.0]).unwrap();
        let curves = [ResponseCurve::linear(), ResponseCurve::linear(), ResponseCurve::linear()];
        let merged = radiance_map(&stack, &curves).unwrap();
        assert_eq!(merged.fallback_pixels, 1);
        // fallback uses the least-clipped exposure (both are 255; first wins)
        let want = libm::exp(libm::log(255.0 / 128.0) - libm::log(1.0));
        let got = merged.map.rgb().planes()[0].data()[4];
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn radiance_scaling_equivariance() {
        let field = log_uniform_field(24, 24, 0.01, 1.0, 98);
        let times = [0.25, 1.0, 4.0];
        let stack = simulate_stack(&field, &times, CameraModel::Linear);
        let scaled_times: Vec<f64> = times.iter().map(|&t| t * 8.0).collect();
        let scaled = ExposureStack::new(stack.images().to_vec(), scaled_times).unwrap();
        let curves = [ResponseCurve::linear(), ResponseCurve::linear(), ResponseCurve::linear()];
        let base = radiance_map(&stack, &curves).unwrap();
        let shifted = radiance_map(&scaled, &curves).unwrap();
        for c in 0..3 {
            let a = base.map.rgb().planes()[c].data();
            let b = shifted.map.rgb().planes()[c].data();
            for i in 0..a.len() {
                if a[i] == 0.0 {
                    assert_eq!(b[i], 0.0);
                } else {
                    let rel = (b[i] * 8.0 - a[i]).abs() / a[i];
                    assert!(rel <= 1e-12, "pixel {i}: {} vs {}", b[i] * 8.0, a[i]);
                }
            }
        }
    }
}

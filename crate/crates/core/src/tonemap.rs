//! Global tone mapping from open-range radiance down to display range.
//!
//! The operator works on luminance: scale the scene so its log-average lands
//! on a chosen middle-gray key, then compress with `L/(1+L)`, which maps
//! [0, inf) onto [0, 1). Each channel is multiplied by the per-pixel
//! luminance ratio so chromaticity survives the compression.

use core::fmt;

use crate::image::{ImagePlane, ImageRGB, RadianceMap, ValueRange};

/// Rec. 709 luma weights.
const LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TonemapError {
    /// The key must be a positive finite number.
    BadKey { value: f64 },
    /// The log-average floor must be a positive finite number.
    BadEpsilon { value: f64 },
}

impl fmt::Display for TonemapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TonemapError::BadKey { value } => {
                write!(f, "key {value} must be finite and > 0")
            }
            TonemapError::BadEpsilon { value } => {
                write!(f, "epsilon {value} must be finite and > 0")
            }
        }
    }
}

/// Tone curve controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TonemapParams {
    /// Middle-gray key the log-average luminance is mapped to.
    pub key: f64,
    /// Floor inside the log to keep zero-luminance pixels finite.
    pub epsilon: f64,
}

impl Default for TonemapParams {
    fn default() -> Self {
        TonemapParams { key: 0.18, epsilon: 1e-6 }
    }
}

impl TonemapParams {
    pub fn validate(&self) -> Result<(), TonemapError> {
        if !(self.key.is_finite() && self.key > 0.0) {
            return Err(TonemapError::BadKey { value: self.key });
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(TonemapError::BadEpsilon { value: self.epsilon });
        }
        Ok(())
    }
}

/// Rec. 709 luminance of one pixel.
fn luminance(r: f64, g: f64, b: f64) -> f64 {
    LUMA[0] * r + LUMA[1] * g + LUMA[2] * b
}

/// Geometric-style average `exp(mean(ln(eps + L)))` over all pixels.
pub fn log_average_luminance(map: &RadianceMap, epsilon: f64) -> f64 {
    let planes = map.rgb().planes();
    let n = planes[0].data().len();
    let mut acc = 0.0;
    for i in 0..n {
        let l = luminance(planes[0].data()[i], planes[1].data()[i], planes[2].data()[i]);
        acc += libm::log(epsilon + l);
    }
    libm::exp(acc / n as f64)
}

/// Display value for one scene luminance given a fixed scene log-average.
///
/// This is the scalar core of [`tonemap_global`], exposed so the curve's
/// shape can be inspected (it is strictly increasing in `l` and never
/// reaches 1).
pub fn display_luminance(l: f64, log_avg: f64, key: f64) -> f64 {
    let scaled = key * l / log_avg;
    scaled / (1.0 + scaled)
}

/// Compresses a radiance map to a displayable unit-range image.
pub fn tonemap_global(map: &RadianceMap, params: &TonemapParams) -> Result<ImageRGB, TonemapError> {
    params.validate()?;
    let log_avg = log_average_luminance(map, params.epsilon);
    let planes = map.rgb().planes();
    let (w, h) = (map.rgb().width(), map.rgb().height());
    let n = planes[0].data().len();
    let mut out = [
        alloc::vec::Vec::with_capacity(n),
        alloc::vec::Vec::with_capacity(n),
        alloc::vec::Vec::with_capacity(n),
    ];
    for i in 0..n {
        let rgb = [planes[0].data()[i], planes[1].data()[i], planes[2].data()[i]];
        let l = luminance(rgb[0], rgb[1], rgb[2]);
        if l <= 0.0 {
            // no luminance to redistribute: black output pixel
            for ch in out.iter_mut() {
                ch.push(0.0);
            }
            continue;
        }
        let ratio = display_luminance(l, log_avg, params.key) / l;
        for (c, ch) in out.iter_mut().enumerate() {
            ch.push((rgb[c] * ratio).clamp(0.0, 1.0));
        }
    }
    let [r, g, b] = out;
    let plane = |d| ImagePlane::new(w, h, d).expect("radiance map has nonzero extent");
    Ok(ImageRGB::new(plane(r), plane(g), plane(b), ValueRange::Unit)
        .expect("clamped values are unit range"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map_from(rgb: Vec<[f64; 3]>, w: usize, h: usize) -> RadianceMap {
        let plane = |c: usize| {
            ImagePlane::new(w, h, rgb.iter().map(|p| p[c]).collect()).unwrap()
        };
        RadianceMap::new(
            ImageRGB::new(plane(0), plane(1), plane(2), ValueRange::Linear).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(TonemapParams::default().validate().is_ok());
        assert_eq!(TonemapParams::default().key, 0.18);
        assert_eq!(TonemapParams::default().epsilon, 1e-6);
        assert!(matches!(
            TonemapParams { key: 0.0, ..Default::default() }.validate(),
            Err(TonemapError::BadKey { .. })
        ));
        assert!(matches!(
            TonemapParams { key: f64::NAN, ..Default::default() }.validate(),
            Err(TonemapError::BadKey { .. })
        ));
        assert!(matches!(
            TonemapParams { epsilon: -1.0, ..Default::default() }.validate(),
            Err(TonemapError::BadEpsilon { .. })
        ));
    }

    #[test]
    fn luma_weights() {
        assert!((luminance(1.0, 1.0, 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(luminance(1.0, 0.0, 0.0), 0.2126);
        assert_eq!(luminance(0.0, 1.0, 0.0), 0.7152);
        assert_eq!(luminance(0.0, 0.0, 1.0), 0.0722);
    }

    #[test]
    fn log_average_of_constant_field() {
        let map = map_from(vec![[0.5, 0.5, 0.5]; 12], 4, 3);
        let avg = log_average_luminance(&map, 1e-6);
        assert!((avg - (1e-6 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn black_maps_to_black() {
        let map = map_from(vec![[0.0, 0.0, 0.0]; 4], 2, 2);
        let out = tonemap_global(&map, &TonemapParams::default()).unwrap();
        for c in 0..3 {
            assert!(out.planes()[c].data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn unit_scaled_luminance_displays_at_half() {
        // a pixel whose scaled luminance is exactly 1 lands at 1/(1+1)
        assert_eq!(display_luminance(1.0, 0.18, 0.18), 0.5);
    }

    #[test]
    fn display_curve_is_monotone_and_bounded() {
        let log_avg = 0.37;
        let key = 0.18;
        let mut prev = -1.0;
        for k in 0..400 {
            let l = k as f64 * 0.05;
            let d = display_luminance(l, log_avg, key);
            assert!(d > prev, "curve must increase: l={l}");
            assert!((0.0..1.0).contains(&d));
            prev = d;
        }
    }

    #[test]
    fn output_is_unit_range_and_hue_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let pixels: Vec<[f64; 3]> = (0..400)
            .map(|_| {
                let scale = libm::exp(rng.gen_range(-6.0..6.0));
                [scale * rng.gen::<f64>(), scale * rng.gen::<f64>(), scale * rng.gen::<f64>()]
            })
            .collect();
        let map = map_from(pixels.clone(), 20, 20);
        let out = tonemap_global(&map, &TonemapParams::default()).unwrap();
        assert_eq!(out.range(), ValueRange::Unit);
        for (i, px) in pixels.iter().enumerate() {
            let got = [
                out.planes()[0].data()[i],
                out.planes()[1].data()[i],
                out.planes()[2].data()[i],
            ];
            // channel ratios survive whenever no channel clamped
            if got.iter().all(|&v| v < 1.0) && px[0] > 0.0 && px[1] > 0.0 {
                let want = px[1] / px[0];
                if got[0] > 1e-300 {
                    let have = got[1] / got[0];
                    assert!(
                        (have - want).abs() <= want.abs() * 1e-9 + 1e-12,
                        "pixel {i}: ratio {have} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn dynamic_range_never_expands() {
        // ratio of display luminances is bounded by ratio of scene luminances
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let log_avg = 0.8;
        for _ in 0..500 {
            let a = libm::exp(rng.gen_range(-8.0..8.0));
            let b = libm::exp(rng.gen_range(-8.0..8.0));
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let d_lo = display_luminance(lo, log_avg, 0.18);
            let d_hi = display_luminance(hi, log_avg, 0.18);
            assert!(d_hi >= d_lo);
            assert!(d_hi / d_lo <= hi / lo * (1.0 + 1e-12));
        }
    }

    #[test]
    fn brighter_scene_pixel_never_displays_darker() {
        let pixels = vec![
            [0.01, 0.01, 0.01],
            [0.1, 0.1, 0.1],
            [1.0, 1.0, 1.0],
            [10.0, 10.0, 10.0],
            [1000.0, 1000.0, 1000.0],
            [0.0, 0.0, 0.0],
        ];
        let map = map_from(pixels, 3, 2);
        let out = tonemap_global(&map, &TonemapParams::default()).unwrap();
        let r = out.planes()[0].data();
        assert!(r[5] < r[0] && r[0] < r[1] && r[1] < r[2] && r[2] < r[3] && r[3] < r[4]);
        assert!(r[4] < 1.0, "compression never reaches 1 before clamp");
    }
}

//! Full-reference image quality metrics: mean squared error, peak
//! signal-to-noise ratio, and mean structural similarity.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::image::ImageRGB;

/// Side of the structural-similarity window.
pub const SSIM_WINDOW: usize = 11;
/// Standard deviation of the window's Gaussian taper.
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
/// Dynamic range the stability constants are relative to.
const SSIM_L: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
    /// Images must fit at least one full window.
    TooSmallForWindow { width: usize, height: usize, window: usize },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::ShapeMismatch { a, b } => {
                write!(f, "image shapes differ: {}x{} vs {}x{}", a.0, a.1, b.0, b.1)
            }
            MetricsError::TooSmallForWindow { width, height, window } => {
                write!(f, "{width}x{height} image smaller than the {window}x{window} window")
            }
        }
    }
}

/// Value scale differences are measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Values compared as stored, peak 1.0.
    Unit,
    /// Values mapped to 0..255 first, peak 255.
    Byte,
}

impl Scale {
    fn factor(self) -> f64 {
        match self {
            Scale::Unit => 1.0,
            Scale::Byte => 255.0,
        }
    }

    pub fn peak(self) -> f64 {
        self.factor()
    }
}

fn check_shapes(a: &ImageRGB, b: &ImageRGB) -> Result<(), MetricsError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MetricsError::ShapeMismatch {
            a: (a.width(), a.height()),
            b: (b.width(), b.height()),
        });
    }
    Ok(())
}

/// Mean squared error over every pixel of every channel.
pub fn immse(a: &ImageRGB, b: &ImageRGB, scale: Scale) -> Result<f64, MetricsError> {
    check_shapes(a, b)?;
    let s = scale.factor();
    let mut acc = 0.0;
    let mut count = 0usize;
    for c in 0..3 {
        let pa = a.planes()[c].data();
        let pb = b.planes()[c].data();
        for i in 0..pa.len() {
            let d = pa[i] * s - pb[i] * s;
            acc += d * d;
        }
        count += pa.len();
    }
    Ok(acc / count as f64)
}

/// Decibel ratio of `peak^2` to a mean squared error; infinite when the
/// error is zero.
pub fn psnr_db(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * libm::log10(peak * peak / mse)
    }
}

/// PSNR between two images with the peak implied by `scale`.
pub fn psnr(a: &ImageRGB, b: &ImageRGB, scale: Scale) -> Result<f64, MetricsError> {
    Ok(psnr_db(immse(a, b, scale)?, scale.peak()))
}

/// Gaussian taper, normalized to unit sum.
fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        *v = libm::exp(-(i as f64 - mid) * (i as f64 - mid) / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
        sum += *v;
    }
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

/// Windowed means at every position where the full window fits: a separable
/// valid-mode convolution, horizontal then vertical.
fn window_means(src: &[f64], w: usize, h: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - (SSIM_WINDOW - 1);
    let oh = h - (SSIM_WINDOW - 1);
    let mut horiz = Vec::with_capacity(ow * h);
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * row[x + k];
            }
            horiz.push(acc);
        }
    }
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * horiz[(y + k) * ow + x];
            }
            out.push(acc);
        }
    }
    out
}

fn ssim_plane(x: &[f64], y: &[f64], w: usize, h: usize, kernel: &[f64; SSIM_WINDOW]) -> f64 {
    let products: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let xx: Vec<f64> = x.iter().map(|a| a * a).collect();
    let yy: Vec<f64> = y.iter().map(|a| a * a).collect();
    let mx = window_means(x, w, h, kernel);
    let my = window_means(y, w, h, kernel);
    let mxx = window_means(&xx, w, h, kernel);
    let myy = window_means(&yy, w, h, kernel);
    let mxy = window_means(&products, w, h, kernel);

    let c1 = (SSIM_K1 * SSIM_L) * (SSIM_K1 * SSIM_L);
    let c2 = (SSIM_K2 * SSIM_L) * (SSIM_K2 * SSIM_L);
    let mut acc = 0.0;
    for i in 0..mx.len() {
        let vx = mxx[i] - mx[i] * mx[i];
        let vy = myy[i] - my[i] * my[i];
        let cov = mxy[i] - mx[i] * my[i];
        let num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
        let den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
        acc += num / den;
    }
    acc / mx.len() as f64
}

/// Mean structural similarity: Gaussian-weighted local statistics on an
/// 11x11 window, averaged over every valid position and the three channels.
pub fn ssim(a: &ImageRGB, b: &ImageRGB) -> Result<f64, MetricsError> {
    check_shapes(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(MetricsError::TooSmallForWindow { width: w, height: h, window: SSIM_WINDOW });
    }
    let kernel = gaussian_kernel();
    let mut acc = 0.0;
    for c in 0..3 {
        acc += ssim_plane(a.planes()[c].data(), b.planes()[c].data(), w, h, &kernel);
    }
    Ok(acc / 3.0)
}

/// One labeled row of quality figures.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub name: String,
    pub psnr_db: f64,
    pub immse: f64,
    pub ssim: f64,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "name,psnr_db,immse,ssim";

    /// Computes all three figures on the unit scale.
    pub fn evaluate(name: &str, reference: &ImageRGB, test: &ImageRGB) -> Result<Self, MetricsError> {
        let mse = immse(reference, test, Scale::Unit)?;
        Ok(MetricReport {
            name: String::from(name),
            psnr_db: psnr_db(mse, Scale::Unit.peak()),
            immse: mse,
            ssim: ssim(reference, test)?,
        })
    }

    pub fn csv_row(&self) -> String {
        let mut row = String::new();
        fmt::write(
            &mut row,
            format_args!("{},{},{},{}", self.name, self.psnr_db, self.immse, self.ssim),
        )
        .expect("writing to a String cannot fail");
        row
    }
}

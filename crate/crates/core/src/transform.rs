//! Orthonormal 2-D DCT: type-II forward, type-III inverse.
//!
//! The basis is the real orthogonal cosine matrix (row 0 constant `1/sqrt(n)`,
//! row k scaled by `sqrt(2/n)`), so the transform preserves energy and the
//! inverse is the plain transpose. Planes can be transformed whole
//! ([`CoeffLayout::FullFrame`]) or as independent `b`-sized tiles after edge
//! replication padding ([`CoeffLayout::Block`]).
//!
//! Power-of-two lengths from 16 up run through a recursive split
//! (Lee's decimation) instead of the dense matrix product; both routes agree
//! to near machine precision and the dense basis stays available via
//! [`DctPlan::basis`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::image::ImagePlane;

#[derive(Debug, Clone, PartialEq)]
pub enum TransformError {
    /// Transform length or plane dimension of zero.
    ZeroLength,
    /// Block layouts support b in {4, 8, 16} only.
    UnsupportedBlockSize(usize),
    /// The grid's layout does not match the requested inverse.
    LayoutMismatch,
    /// Coefficient buffer does not cover the padded plane.
    CoeffCount { expected: usize, got: usize },
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformError::ZeroLength => f.write_str("transform length must be at least 1"),
            TransformError::UnsupportedBlockSize(b) => {
                write!(f, "block size {b} unsupported, expected 4, 8 or 16")
            }
            TransformError::LayoutMismatch => f.write_str("coefficient layout mismatch"),
            TransformError::CoeffCount { expected, got } => {
                write!(f, "{got} coefficients, padded plane needs {expected}")
            }
        }
    }
}

/// Row-major orthonormal DCT basis: `v[0][i] = 1/sqrt(n)`,
/// `v[k][i] = sqrt(2/n) * cos(pi*(2i+1)*k / (2n))` for `k >= 1`.
pub fn dct_matrix(n: usize) -> Result<Vec<f64>, TransformError> {
    if n == 0 {
        return Err(TransformError::ZeroLength);
    }
    let nf = n as f64;
    let dc = 1.0 / libm::sqrt(nf);
    let ac = libm::sqrt(2.0 / nf);
    let mut basis = Vec::with_capacity(n * n);
    basis.resize(n, dc);
    for k in 1..n {
        for i in 0..n {
            basis.push(ac * libm::cos(PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)));
        }
    }
    Ok(basis)
}

/// Reusable 1-D transform of a fixed length; immutable, share freely.
#[derive(Debug, Clone)]
pub struct DctPlan {
    n: usize,
    basis: Vec<f64>,
    /// Orthonormal row scales applied around the recursive path.
    scale: Vec<f64>,
    /// Per-level secant tables for the recursive path; empty = dense route.
    secants: Vec<Vec<f64>>,
}

impl DctPlan {
    pub fn new(n: usize) -> Result<Self, TransformError> {
        let basis = dct_matrix(n)?;
        let nf = n as f64;
        let mut scale = vec![libm::sqrt(2.0 / nf); n];
        scale[0] = 1.0 / libm::sqrt(nf);
        let mut secants = Vec::new();
        // The butterfly route also keeps constant inputs exact: mirror-pair
        // differences vanish bitwise, so every AC output is a true zero.
        if n >= 2 && n.is_power_of_two() {
            let mut m = n;
            while m >= 2 {
                let table = (0..m / 2)
                    .map(|i| 0.5 / libm::cos(PI * (2 * i + 1) as f64 / (2.0 * m as f64)))
                    .collect();
                secants.push(table);
                m /= 2;
            }
        }
        Ok(DctPlan { n, basis, scale, secants })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // length is always >= 1
    }

    /// The dense n×n basis, row-major.
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    /// Forward transform; `input` and `out` must both have the plan's length.
    pub fn forward_into(&self, input: &[f64], out: &mut [f64]) {
        assert_eq!(input.len(), self.n);
        assert_eq!(out.len(), self.n);
        if self.secants.is_empty() {
            for k in 0..self.n {
                let row = &self.basis[k * self.n..(k + 1) * self.n];
                out[k] = dot(row, input);
            }
        } else {
            out.copy_from_slice(input);
            let mut tmp = vec![0.0; self.n];
            lee_forward(out, &mut tmp, &self.secants, 0);
            for k in 0..self.n {
                out[k] *= self.scale[k];
            }
        }
    }

    /// Inverse (transpose) transform; buffer lengths as in [`Self::forward_into`].
    pub fn inverse_into(&self, input: &[f64], out: &mut [f64]) {
        assert_eq!(input.len(), self.n);
        assert_eq!(out.len(), self.n);
        if self.secants.is_empty() {
            out.fill(0.0);
            for k in 0..self.n {
                let c = input[k];
                if c == 0.0 {
                    continue;
                }
                let row = &self.basis[k * self.n..(k + 1) * self.n];
                for i in 0..self.n {
                    out[i] += c * row[i];
                }
            }
        } else {
            for k in 0..self.n {
                out[k] = input[k] * self.scale[k];
            }
            let mut tmp = vec![0.0; self.n];
            lee_adjoint(out, &mut tmp, &self.secants, 0);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Unnormalized DCT-II by recursive halving. `buf` holds the input and is
/// replaced by the spectrum; `tmp` is scratch of at least the same length.
fn lee_forward(buf: &mut [f64], tmp: &mut [f64], secants: &[Vec<f64>], depth: usize) {
    let n = buf.len();
    if n == 1 {
        return;
    }
    let half = n / 2;
    let sec = &secants[depth];
    for i in 0..half {
        let a = buf[i];
        let b = buf[n - 1 - i];
        tmp[i] = a + b;
        tmp[half + i] = (a - b) * sec[i];
    }
    buf[..n].copy_from_slice(&tmp[..n]);
    {
        let (g, h) = buf.split_at_mut(half);
        lee_forward(g, tmp, secants, depth + 1);
        lee_forward(h, tmp, secants, depth + 1);
    }
    // Even outputs come from the sum half, odd ones telescope the difference
    // half: F[2k+1] = H[k] + H[k+1], with the tail term standing alone.
    for k in 0..half {
        tmp[2 * k] = buf[k];
        tmp[2 * k + 1] = if k + 1 < half {
            buf[half + k] + buf[half + k + 1]
        } else {
            buf[half + k]
        };
    }
    buf[..n].copy_from_slice(&tmp[..n]);
}

/// Adjoint (transpose) of [`lee_forward`], which is the unnormalized DCT-III.
fn lee_adjoint(buf: &mut [f64], tmp: &mut [f64], secants: &[Vec<f64>], depth: usize) {
    let n = buf.len();
    if n == 1 {
        return;
    }
    let half = n / 2;
    for k in 0..half {
        tmp[k] = buf[2 * k];
        tmp[half + k] = if k == 0 { buf[1] } else { buf[2 * k + 1] + buf[2 * k - 1] };
    }
    buf[..n].copy_from_slice(&tmp[..n]);
    {
        let (g, h) = buf.split_at_mut(half);
        lee_adjoint(g, tmp, secants, depth + 1);
        lee_adjoint(h, tmp, secants, depth + 1);
    }
    let sec = &secants[depth];
    for i in 0..half {
        let gp = buf[i];
        let hp = buf[half + i] * sec[i];
        tmp[i] = gp + hp;
        tmp[n - 1 - i] = gp - hp;
    }
    buf[..n].copy_from_slice(&tmp[..n]);
}

/// How a coefficient grid tiles its source plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffLayout {
    /// One transform spanning the whole plane.
    FullFrame,
    /// Independent tiles of the given size over the edge-padded plane.
    Block(usize),
}

const SUPPORTED_BLOCKS: [usize; 3] = [4, 8, 16];

/// Transform-domain counterpart of an [`ImagePlane`].
///
/// `width`/`height` are the *source* plane dimensions; for block layouts the
/// coefficients cover the padded plane, row-major, with each tile's (0,0)
/// entry holding that tile's DC term.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffGrid {
    width: usize,
    height: usize,
    layout: CoeffLayout,
    coeffs: Vec<f64>,
}

fn padded_extent(n: usize, layout: CoeffLayout) -> usize {
    match layout {
        CoeffLayout::FullFrame => n,
        CoeffLayout::Block(b) => n.div_ceil(b) * b,
    }
}

impl CoeffGrid {
    pub fn new(
        width: usize,
        height: usize,
        layout: CoeffLayout,
        coeffs: Vec<f64>,
    ) -> Result<Self, TransformError> {
        if width == 0 || height == 0 {
            return Err(TransformError::ZeroLength);
        }
        if let CoeffLayout::Block(b) = layout {
            if !SUPPORTED_BLOCKS.contains(&b) {
                return Err(TransformError::UnsupportedBlockSize(b));
            }
        }
        let expected = padded_extent(width, layout) * padded_extent(height, layout);
        if coeffs.len() != expected {
            return Err(TransformError::CoeffCount { expected, got: coeffs.len() });
        }
        Ok(CoeffGrid { width, height, layout, coeffs })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn layout(&self) -> CoeffLayout {
        self.layout
    }

    pub fn padded_width(&self) -> usize {
        padded_extent(self.width, self.layout)
    }

    pub fn padded_height(&self) -> usize {
        padded_extent(self.height, self.layout)
    }

    /// Row-major coefficients over the padded plane.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }
}

fn rows_pass(data: &[f64], w: usize, h: usize, plan: &DctPlan, forward: bool, out: &mut [f64]) {
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        let dst = &mut out[y * w..(y + 1) * w];
        if forward {
            plan.forward_into(row, dst);
        } else {
            plan.inverse_into(row, dst);
        }
    }
}

fn cols_pass(data: &[f64], w: usize, h: usize, plan: &DctPlan, forward: bool, out: &mut [f64]) {
    let mut col_in = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col_in[y] = data[y * w + x];
        }
        if forward {
            plan.forward_into(&col_in, &mut col_out);
        } else {
            plan.inverse_into(&col_in, &mut col_out);
        }
        for y in 0..h {
            out[y * w + x] = col_out[y];
        }
    }
}

fn transform_2d(data: &[f64], w: usize, h: usize, plans: (&DctPlan, &DctPlan), forward: bool) -> Vec<f64> {
    let (plan_w, plan_h) = plans;
    let mut mid = vec![0.0; w * h];
    rows_pass(data, w, h, plan_w, forward, &mut mid);
    let mut out = vec![0.0; w * h];
    cols_pass(&mid, w, h, plan_h, forward, &mut out);
    out
}

/// Full-frame forward transform: `C = V_h · X · V_wᵀ`.
pub fn dct2(plane: &ImagePlane) -> CoeffGrid {
    let (w, h) = (plane.width(), plane.height());
    let plan_w = DctPlan::new(w).expect("plane width >= 1");
    let plan_h = DctPlan::new(h).expect("plane height >= 1");
    let coeffs = transform_2d(plane.data(), w, h, (&plan_w, &plan_h), true);
    CoeffGrid { width: w, height: h, layout: CoeffLayout::FullFrame, coeffs }
}

/// Inverse of [`dct2`]: `X = V_hᵀ · C · V_w`.
pub fn idct2(grid: &CoeffGrid) -> Result<ImagePlane, TransformError> {
    if grid.layout != CoeffLayout::FullFrame {
        return Err(TransformError::LayoutMismatch);
    }
    let (w, h) = (grid.width, grid.height);
    let plan_w = DctPlan::new(w)?;
    let plan_h = DctPlan::new(h)?;
    let data = transform_2d(&grid.coeffs, w, h, (&plan_w, &plan_h), false);
    Ok(ImagePlane::new(w, h, data).expect("grid dimensions are nonzero"))
}

/// Pads a plane to multiples of `b` by replicating the last row and column.
fn pad_replicate(plane: &ImagePlane, pw: usize, ph: usize) -> Vec<f64> {
    let (w, h) = (plane.width(), plane.height());
    let src = plane.data();
    let mut out = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        let sy = y.min(h - 1);
        let row = &src[sy * w..(sy + 1) * w];
        out.extend_from_slice(row);
        for _ in w..pw {
            out.push(row[w - 1]);
        }
    }
    out
}

fn block_pass(data: &mut Vec<f64>, pw: usize, ph: usize, b: usize, forward: bool) {
    let plan = DctPlan::new(b).expect("supported block sizes are nonzero");
    let mut tile = vec![0.0; b * b];
    for ty in (0..ph).step_by(b) {
        for tx in (0..pw).step_by(b) {
            for y in 0..b {
                let row = (ty + y) * pw + tx;
                tile[y * b..(y + 1) * b].copy_from_slice(&data[row..row + b]);
            }
            let done = transform_2d(&tile, b, b, (&plan, &plan), forward);
            for y in 0..b {
                let row = (ty + y) * pw + tx;
                data[row..row + b].copy_from_slice(&done[y * b..(y + 1) * b]);
            }
        }
    }
}

/// Independent per-tile transform after edge replication padding.
pub fn block_dct2(plane: &ImagePlane, b: usize) -> Result<CoeffGrid, TransformError> {
    if !SUPPORTED_BLOCKS.contains(&b) {
        return Err(TransformError::UnsupportedBlockSize(b));
    }
    let layout = CoeffLayout::Block(b);
    let pw = padded_extent(plane.width(), layout);
    let ph = padded_extent(plane.height(), layout);
    let mut data = pad_replicate(plane, pw, ph);
    block_pass(&mut data, pw, ph, b, true);
    Ok(CoeffGrid { width: plane.width(), height: plane.height(), layout, coeffs: data })
}

/// Inverse of [`block_dct2`]; crops the padding back off.
pub fn block_idct2(grid: &CoeffGrid) -> Result<ImagePlane, TransformError> {
    let b = match grid.layout {
        CoeffLayout::Block(b) => b,
        CoeffLayout::FullFrame => return Err(TransformError::LayoutMismatch),
    };
    let (pw, ph) = (grid.padded_width(), grid.padded_height());
    let mut data = grid.coeffs.clone();
    block_pass(&mut data, pw, ph, b, false);
    let (w, h) = (grid.width, grid.height);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        out.extend_from_slice(&data[y * pw..y * pw + w]);
    }
    Ok(ImagePlane::new(w, h, out).expect("grid dimensions are nonzero"))
}

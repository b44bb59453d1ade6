//! Regenerates the bundled sample images under assets/.
//!
//! Everything is synthesized from a fixed-seed LCG and plain arithmetic
//! (no library transcendentals), so the outputs are bit-identical on any
//! IEEE-754 platform. Two photograph-like scenes exercise the coefficient
//! statistics; a three-exposure bracketed stack (gamma-2.2 camera, times
//! 0.25/1/4) exercises the response and merge pipeline.

use std::fs;
use std::path::PathBuf;

use hdrfuse_core::crf::{exposure_from_irradiance, CameraModel};
use hdrfuse_core::image::{ImagePlane, ImageRGB, ValueRange};
use hdrfuse_core::ppm::save_ppm;

struct Lcg(u64);

impl Lcg {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0
    }

    /// Uniform in [0, 1).
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Coarse random lattice sampled with bilinear interpolation: cheap value
/// noise with photograph-like local correlation.
struct ValueNoise {
    cells_x: usize,
    lattice: Vec<f64>,
    cell: f64,
}

impl ValueNoise {
    fn new(width: usize, height: usize, cell: usize, seed: u64) -> Self {
        let cells_x = width / cell + 2;
        let cells_y = height / cell + 2;
        let mut rng = Lcg(seed);
        let lattice = (0..cells_x * cells_y).map(|_| rng.next_f64()).collect();
        ValueNoise { cells_x, lattice, cell: cell as f64 }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        let fx = x as f64 / self.cell;
        let fy = y as f64 / self.cell;
        let ix = fx as usize;
        let iy = fy as usize;
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let g = |cx: usize, cy: usize| self.lattice[cy * self.cells_x + cx];
        let top = g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx;
        let bot = g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bot * ty
    }
}

/// Smooth rational bump: 1 at the center, ~1/(1 + k d^2) falloff.
fn bump(x: f64, y: f64, cx: f64, cy: f64, k: f64) -> f64 {
    let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    1.0 / (1.0 + k * d2)
}

/// Dusk landscape: gradient sky with a sun glow, textured rolling ground,
/// a sharp horizon and a dark rock.
fn photo_a(width: usize, height: usize) -> ImageRGB {
    let coarse = ValueNoise::new(width, height, 16, 11);
    let fine = ValueNoise::new(width, height, 3, 12);
    let mut grain = Lcg(13);
    let horizon = (height * 5 / 8) as f64;
    let mut rgb = [Vec::new(), Vec::new(), Vec::new()];
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64, y as f64);
            let sun = 0.35 * bump(fx, fy, width as f64 * 0.72, horizon * 0.35, 0.004);
            let luma;
            let tint;
            if fy < horizon {
                let t = fy / horizon;
                luma = 0.72 - 0.22 * t + sun + 0.02 * fine.at(x, y);
                tint = [0.02, 0.0, 0.06]; // cool sky
            } else {
                let dunes = 0.22 * coarse.at(x, y) + 0.05 * fine.at(x, y);
                let rock = 0.30 * bump(fx, fy, width as f64 * 0.3, horizon + 14.0, 0.02);
                luma = 0.34 + dunes + 0.5 * sun - rock;
                tint = [0.05, 0.01, -0.04]; // warm ground
            }
            let speckle = 0.015 * (grain.next_f64() - 0.5);
            for c in 0..3 {
                rgb[c].push((luma + tint[c] + speckle).clamp(0.0, 1.0));
            }
        }
    }
    image_from(rgb, width, height)
}

/// Interior still life: flat panelled wall regions, a bright window, boxes
/// with hard edges, light surface grain.
fn photo_b(width: usize, height: usize) -> ImageRGB {
    let panels = ValueNoise::new(width, height, 24, 21);
    let fine = ValueNoise::new(width, height, 4, 22);
    let mut grain = Lcg(23);
    let mut rgb = [Vec::new(), Vec::new(), Vec::new()];
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64, y as f64);
            // quantized panel levels make piecewise-constant regions
            let level = (panels.at(x, y) * 4.0) as usize as f64 * 0.14 + 0.18;
            let window = if (18..46).contains(&x) && (12..40).contains(&y) { 0.55 } else { 0.0 };
            let box_a = if fx + 2.0 * fy > 200.0 && fx > 60.0 { 0.18 } else { 0.0 };
            let shade = 0.12 * bump(fx, fy, width as f64 * 0.8, height as f64 * 0.9, 0.001);
            let luma = level + window + box_a - shade + 0.03 * fine.at(x, y)
                + 0.012 * (grain.next_f64() - 0.5);
            let tint = [0.03, 0.01, -0.02];
            for c in 0..3 {
                rgb[c].push((luma + tint[c]).clamp(0.0, 1.0));
            }
        }
    }
    image_from(rgb, width, height)
}

/// Scene irradiance for the bracketed stack: several decades of dynamic
/// range, from deep shadow under the arch to an intense lamp.
fn stack_irradiance(width: usize, height: usize) -> [ImagePlane; 3] {
    let coarse = ValueNoise::new(width, height, 12, 31);
    let fine = ValueNoise::new(width, height, 3, 32);
    let mut planes = [Vec::new(), Vec::new(), Vec::new()];
    let tints = [1.06, 1.0, 0.9];
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64, y as f64);
            let base = 0.25 + 0.55 * coarse.at(x, y) + 0.08 * fine.at(x, y);
            let lamp = 1.4 * bump(fx, fy, width as f64 * 0.25, height as f64 * 0.3, 0.02);
            let shadow = 0.85 * bump(fx, fy, width as f64 * 0.7, height as f64 * 0.75, 0.006);
            let level = (base - shadow).clamp(0.015, 1.0);
            // cubing stretches the mid-tones over ~3 decades
            let irr = 2.0 * level * level * level + lamp;
            for c in 0..3 {
                planes[c].push(irr * tints[c]);
            }
        }
    }
    planes.map(|data| ImagePlane::new(width, height, data).expect("fixed extent"))
}

fn image_from(rgb: [Vec<f64>; 3], width: usize, height: usize) -> ImageRGB {
    let [r, g, b] = rgb;
    let plane = |d| ImagePlane::new(width, height, d).expect("fixed extent");
    ImageRGB::new(plane(r), plane(g), plane(b), ValueRange::Unit).expect("values clamped")
}

fn expose(irradiance: &[ImagePlane; 3], dt: f64) -> ImageRGB {
    let planes = irradiance
        .clone()
        .map(|p| p.map(|i| f64::from(exposure_from_irradiance(i, dt, CameraModel::Gamma(2.2))) / 255.0));
    let [r, g, b] = planes;
    ImageRGB::new(r, g, b, ValueRange::Unit).expect("codes are unit range")
}

fn main() {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets");
    fs::create_dir_all(&assets).expect("create assets dir");
    let save = |name: &str, image: &ImageRGB| {
        let path = assets.join(name);
        fs::write(&path, save_ppm(image).expect("unit images save")).expect("write asset");
        println!("wrote {}", path.display());
    };

    save("photo-a.ppm", &photo_a(128, 96));
    save("photo-b.ppm", &photo_b(128, 96));

    let scene = stack_irradiance(96, 72);
    let times = [0.25, 1.0, 4.0];
    let names = ["stack-low.ppm", "stack-mid.ppm", "stack-high.ppm"];
    for (name, &dt) in names.iter().zip(&times) {
        save(name, &expose(&scene, dt));
    }
    let manifest: String = names
        .iter()
        .zip(&times)
        .map(|(name, dt)| format!("{name} {dt}\n"))
        .collect();
    fs::write(assets.join("stack.txt"), manifest).expect("write manifest");
    println!("wrote {}", assets.join("stack.txt").display());
}

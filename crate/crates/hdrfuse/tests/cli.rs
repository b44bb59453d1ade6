//! End-to-end checks of the hdrfuse binary: real processes, real files,
//! pinned exit codes (0 ok, 2 I/O-parse, 3 shape, 4 underdetermined).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hdrfuse_core::crf::{exposure_from_irradiance, CameraModel, ResponseCurve};
use hdrfuse_core::image::{ImagePlane, ImageRGB, RadianceMap, ValueRange};
use hdrfuse_core::ppm::{load_ppm, save_ppm};
use hdrfuse_core::rgbe::{read_hdr, write_hdr};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdrfuse"))
}

fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is text")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process not signalled")
}

struct Lcg(u64);

impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn gray_image(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> ImageRGB {
    let plane = ImagePlane::from_fn(w, h, f).unwrap();
    ImageRGB::from_plane(plane, ValueRange::Unit).unwrap()
}

fn save_asset(dir: &Path, name: &str, image: &ImageRGB) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, save_ppm(image).unwrap()).unwrap();
    path
}

#[test]
fn fuse_dct_matches_mean_on_bundled_stack() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = assets().join("stack.txt");
    let manifest = manifest.to_str().unwrap();
    let dct = dir.path().join("dct.ppm");
    let mean = dir.path().join("mean.ppm");
    let line = run_ok(&["fuse", manifest, "--method", "dct", "--out", dct.to_str().unwrap()]);
    assert!(line.starts_with("dct,3,96,72,"), "summary line: {line}");
    run_ok(&["fuse", manifest, "--method", "mean", "--out", mean.to_str().unwrap()]);
    let a = fs::read(&dct).unwrap();
    let b = fs::read(&mean).unwrap();
    assert_eq!(a.len(), b.len());
    // transform averaging is the pixel mean up to float dust; after
    // quantization the images agree to the byte
    assert!(a.iter().zip(&b).all(|(x, y)| x.abs_diff(*y) <= 1));

    // block layout agrees too
    let blocked = dir.path().join("dct8.ppm");
    run_ok(&[
        "fuse", manifest, "--method", "dct", "--block", "8", "--out",
        blocked.to_str().unwrap(),
    ]);
    let c = fs::read(&blocked).unwrap();
    assert!(a.iter().zip(&c).all(|(x, y)| x.abs_diff(*y) <= 1));
}

#[test]
fn fusing_a_single_image_returns_it() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Lcg(77);
    let image = gray_image(40, 30, |_, _| rng.next_f64());
    let input = save_asset(dir.path(), "only.ppm", &image);
    let manifest = dir.path().join("m.txt");
    fs::write(&manifest, "only.ppm 1\n").unwrap();
    let original = fs::read(&input).unwrap();
    for method in ["mean", "dct", "mertens"] {
        let out = dir.path().join(format!("{method}.ppm"));
        run_ok(&[
            "fuse",
            manifest.to_str().unwrap(),
            "--method",
            method,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(fs::read(&out).unwrap(), original, "method {method}");
    }
}

#[test]
fn manifest_with_missing_image_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.txt");
    fs::write(&manifest, "ghost.ppm 1\n").unwrap();
    let out = run(&[
        "fuse",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("x.ppm").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ghost.ppm"));
}

#[test]
fn mismatched_stack_dimensions_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Lcg(78);
    save_asset(dir.path(), "a.ppm", &gray_image(20, 20, |_, _| rng.next_f64()));
    save_asset(dir.path(), "b.ppm", &gray_image(21, 20, |_, _| rng.next_f64()));
    let manifest = dir.path().join("m.txt");
    fs::write(&manifest, "a.ppm 1\nb.ppm 2\n").unwrap();
    let out = run(&[
        "fuse",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("x.ppm").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("b.ppm"));
}

#[test]
fn response_on_single_exposure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Lcg(79);
    save_asset(dir.path(), "one.ppm", &gray_image(16, 16, |_, _| rng.next_f64()));
    let manifest = dir.path().join("m.txt");
    fs::write(&manifest, "one.ppm 1\n").unwrap();
    let out = run(&[
        "response",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("c.txt").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 4);
}

#[test]
fn response_accepts_zero_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("c.txt");
    run_ok(&[
        "response",
        assets().join("stack.txt").to_str().unwrap(),
        "--lambda",
        "0",
        "--out",
        curve.to_str().unwrap(),
    ]);
    assert_eq!(fs::read_to_string(&curve).unwrap().lines().count(), 256);
}

#[test]
fn response_curve_approximates_linear_camera() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Lcg(80);
    let field = ImagePlane::from_fn(60, 60, |_, _| {
        // log-uniform irradiance over about three decades
        let u = rng.next_f64();
        0.002 * (u * 500.0f64.ln()).exp()
    })
    .unwrap();
    for (name, dt) in [("low.ppm", 0.25), ("mid.ppm", 1.0), ("high.ppm", 4.0)] {
        let shot = field.map(|i| {
            f64::from(exposure_from_irradiance(i, dt, CameraModel::Linear)) / 255.0
        });
        save_asset(dir.path(), name, &ImageRGB::from_plane(shot, ValueRange::Unit).unwrap());
    }
    let manifest = dir.path().join("m.txt");
    fs::write(&manifest, "low.ppm 0.25\nmid.ppm 1\nhigh.ppm 4\n").unwrap();
    let curve_path = dir.path().join("c.txt");
    run_ok(&[
        "response",
        manifest.to_str().unwrap(),
        "--samples",
        "150",
        "--out",
        curve_path.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&curve_path).unwrap();
    let curves = hdrfuse::curvefile::parse_curves(&text, &curve_path).unwrap();
    for z in (20..=235usize).step_by(5) {
        let want = (z as f64 / 128.0).ln();
        let got = curves[0].values()[z];
        assert!((got - want).abs() <= 0.05, "code {z}: {got} vs {want}");
    }
}

#[test]
fn merge_with_identity_curve_recovers_codes() {
    let dir = tempfile::tempdir().unwrap();
    let image = gray_image(16, 16, |x, y| (y * 16 + x) as f64 / 255.0);
    save_asset(dir.path(), "img.ppm", &image);
    let manifest = dir.path().join("m.txt");
    fs::write(&manifest, "img.ppm 1\n").unwrap();
    let curve_path = dir.path().join("c.txt");
    let linear = [ResponseCurve::linear(), ResponseCurve::linear(), ResponseCurve::linear()];
    fs::write(&curve_path, hdrfuse::curvefile::format_curves(&linear)).unwrap();
    let hdr_path = dir.path().join("scene.hdr");
    let stdout = run_ok(&[
        "merge-hdr",
        manifest.to_str().unwrap(),
        "--curve",
        curve_path.to_str().unwrap(),
        "--out",
        hdr_path.to_str().unwrap(),
    ]);
    // codes 0 and 255 are clipped everywhere in a single image
    assert_eq!(stdout.trim(), "fallback_pixels,2");
    let scene = read_hdr(&fs::read(&hdr_path).unwrap()).unwrap();
    for (i, &v) in scene.rgb().planes()[0].data().iter().enumerate() {
        let want = i as f64 / 128.0;
        assert!((v - want).abs() <= want / 256.0 + 1e-12, "code {i}: {v} vs {want}");
    }
}

#[test]
fn merge_consistent_pair_matches_single_exposure() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Lcg(81);
    let field = ImagePlane::from_fn(24, 24, |_, _| 80.0 / 255.0 + rng.next_f64() * 40.0 / 255.0)
        .unwrap();
    for (name, dt) in [("e1.ppm", 1.0), ("e2.ppm", 2.0)] {
        let shot = field.map(|i| {
            f64::from(exposure_from_irradiance(i, dt, CameraModel::Linear)) / 255.0
        });
        save_asset(dir.path(), name, &ImageRGB::from_plane(shot, ValueRange::Unit).unwrap());
    }
    fs::write(dir.path().join("pair.txt"), "e1.ppm 1\ne2.ppm 2\n").unwrap();
    fs::write(dir.path().join("solo.txt"), "e1.ppm 1\n").unwrap();
    let curve_path = dir.path().join("c.txt");
    let linear = [ResponseCurve::linear(), ResponseCurve::linear(), ResponseCurve::linear()];
    fs::write(&curve_path, hdrfuse::curvefile::format_curves(&linear)).unwrap();
    let mut outputs = Vec::new();
    for manifest in ["pair.txt", "solo.txt"] {
        let out = dir.path().join(format!("{manifest}.hdr"));
        run_ok(&[
            "merge-hdr",
            dir.path().join(manifest).to_str().unwrap(),
            "--curve",
            curve_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        outputs.push(read_hdr(&fs::read(&out).unwrap()).unwrap());
    }
    let pair = outputs[0].rgb().planes()[0].data();
    let solo = outputs[1].rgb().planes()[0].data();
    for i in 0..pair.len() {
        let rel = (pair[i] - solo[i]).abs() / solo[i];
        assert!(rel <= 0.02, "pixel {i}: {} vs {} ({rel})", pair[i], solo[i]);
    }
}

#[test]
fn merge_with_missing_curve_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "merge-hdr",
        assets().join("stack.txt").to_str().unwrap(),
        "--curve",
        dir.path().join("absent.txt").to_str().unwrap(),
        "--out",
        dir.path().join("x.hdr").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn metrics_of_identical_images() {
    let photo = assets().join("photo-a.ppm");
    let photo = photo.to_str().unwrap();
    let row = run_ok(&["metrics", photo, photo, "--name", "self"]);
    assert_eq!(row.trim(), "self,inf,0,1");
}

#[test]
fn metrics_shape_mismatch_exits_3() {
    let out = run(&[
        "metrics",
        assets().join("photo-a.ppm").to_str().unwrap(),
        assets().join("stack-mid.ppm").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn stats_on_constant_image_flags_degenerate_tie() {
    let dir = tempfile::tempdir().unwrap();
    let flat = gray_image(32, 32, |_, _| 0.5);
    let path = save_asset(dir.path(), "flat.ppm", &flat);
    let out = run(&["stats", path.to_str().unwrap(), "--band", "all-ac"]);
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    for line in stdout.lines() {
        assert!(line.ends_with(",laplacian(tie)"), "row: {line}");
    }
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn tonemap_of_black_scene_is_black() {
    let dir = tempfile::tempdir().unwrap();
    let black = RadianceMap::new(
        ImageRGB::from_plane(ImagePlane::filled(12, 9, 0.0).unwrap(), ValueRange::Linear)
            .unwrap(),
    )
    .unwrap();
    let hdr = dir.path().join("black.hdr");
    fs::write(&hdr, write_hdr(&black)).unwrap();
    let out = dir.path().join("black.ppm");
    run_ok(&["tonemap", hdr.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let image = load_ppm(&fs::read(&out).unwrap()).unwrap();
    for plane in image.planes() {
        assert!(plane.data().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = assets().join("stack.txt");
    let manifest = manifest.to_str().unwrap();
    let mut artifacts = Vec::new();
    for round in 0..2 {
        let fused = dir.path().join(format!("f{round}.ppm"));
        let curve = dir.path().join(format!("c{round}.txt"));
        let line =
            run_ok(&["fuse", manifest, "--method", "mertens", "--out", fused.to_str().unwrap()]);
        run_ok(&["response", manifest, "--out", curve.to_str().unwrap()]);
        artifacts.push((fs::read(&fused).unwrap(), fs::read(&curve).unwrap(), line));
    }
    assert_eq!(artifacts[0], artifacts[1]);
}

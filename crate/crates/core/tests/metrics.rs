//! Reference-metric checks against direct oracles.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sess::metrics::{ms_ssim, mse, psnr, psnr_from_mse, ssim};
use sess::Raster;

#[test]
fn ssim_matches_windowed_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (w, h) in [(11, 11), (23, 17), (40, 12)] {
        let x = common::random_gray(&mut rng, w, h);
        let y = common::random_gray(&mut rng, w, h);
        let got = ssim(&x, &y).unwrap();
        let want = common::ssim_oracle(&x, &y);
        assert!((got - want).abs() < 1e-9, "{w}x{h}: {got} vs {want}");
    }
}

#[test]
fn rgb_ssim_uses_luma() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = common::random_gray(&mut rng, 20, 20);
    let y = common::random_gray(&mut rng, 20, 20);
    let spread = |r: &Raster| Raster::new(20, 20, 3, r.samples().iter().flat_map(|&v| [v, v, v]).collect()).unwrap();
    let gray = ssim(&x, &y).unwrap();
    let rgb = ssim(&spread(&x), &spread(&y)).unwrap();
    assert!((gray - rgb).abs() < 1e-9);
}

#[test]
fn psnr_and_mse_are_linked() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let x = common::random_gray(&mut rng, 8, 5);
        let y = common::random_gray(&mut rng, 8, 5);
        let m = mse(&x, &y).unwrap();
        assert_eq!(psnr(&x, &y).unwrap(), psnr_from_mse(m));
        assert!((psnr_from_mse(m) - 10.0 * (65025.0 / m).log10()).abs() < 1e-12);
    }
    assert_eq!(psnr_from_mse(65025.0), 0.0);
}

fn scene(rng: &mut ChaCha8Rng, size: u32) -> Raster {
    use rand::Rng;
    let (cx, cy, r) = (rng.random_range(20.0..70.0), rng.random_range(20.0..70.0), rng.random_range(8.0..25.0));
    let (a, b) = (rng.random_range(0.5..2.5), rng.random_range(0.5..2.5));
    common::gray(size, size, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let base = 60.0 + a * fx + b * fy * 0.5;
        let disc = if (fx - cx).powi(2) + (fy - cy).powi(2) < r * r { 70.0 } else { 0.0 };
        (base + disc).clamp(0.0, 255.0) as u8
    })
}

fn noisy(x: &Raster, sigma: f64, rng: &mut ChaCha8Rng) -> Raster {
    let noise = Normal::new(0.0, sigma).unwrap();
    let data = x
        .samples()
        .iter()
        .map(|&v| (v as f64 + noise.sample(rng)).round().clamp(0.0, 255.0) as u8)
        .collect();
    Raster::new(x.width(), x.height(), 1, data).unwrap()
}

#[test]
fn ms_ssim_decreases_with_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..20 {
        let x = scene(&mut rng, 96);
        let scores: Vec<f64> = [8.0, 32.0, 64.0]
            .iter()
            .map(|&s| ms_ssim(&x, &noisy(&x, s, &mut rng)).unwrap())
            .collect();
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)), "image {i}: {scores:?}");
        assert!(scores[0] > scores[1] && scores[1] > scores[2], "image {i}: {scores:?}");
    }
}

#[test]
fn ms_ssim_constant_pair_is_luminance_term() {
    let x = common::gray(64, 64, |_, _| 100);
    let y = common::gray(64, 64, |_, _| 120);
    let c1 = (0.01f64 * 255.0).powi(2);
    let l = (2.0 * 100.0 * 120.0 + c1) / (100.0f64.powi(2) + 120.0f64.powi(2) + c1);
    // Three scales fit a 64-pixel side; the luminance term enters with the
    // coarsest renormalized weight.
    let w = [0.0448, 0.2856, 0.3001];
    let coarsest = w[2] / w.iter().sum::<f64>();
    assert!((ms_ssim(&x, &y).unwrap() - l.powf(coarsest)).abs() < 1e-12);
    assert!((ssim(&x, &y).unwrap() - l).abs() < 1e-12);
}

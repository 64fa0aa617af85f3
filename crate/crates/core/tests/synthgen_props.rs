use proptest::prelude::*;

use cmfd::imagecore::Image;
use cmfd::ranking::Label;
use cmfd::synthgen::{base_texture, degrade, generate, jpeg_round_trip, rasterize, random_spec, FixtureKind, ForgerySpec, Region};

fn psnr(a: &Image, b: &Image) -> f64 {
    let mse = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.data().len() as f64;
    10.0 * (1.0 / mse).log10()
}

#[test]
fn pasted_area_scales_with_the_square_of_scale() {
    let base = base_texture(256, 256, 4);
    let mut checked = 0;
    for seed in 0..40 {
        let kind = if seed % 2 == 0 { FixtureKind::RotatedScaled } else { FixtureKind::Protocol };
        let Ok(spec) = random_spec(kind, 256, 256, seed) else { continue };
        let lf = generate(&base, &spec).unwrap();
        let src = lf.mc_gt.count(Label::Source) as f64;
        let dst = lf.mt_gt.count() as f64;
        let ratio = dst / src / (spec.scale * spec.scale);
        assert!((ratio - 1.0).abs() <= 0.05, "seed {seed}: scale {} ratio {ratio}", spec.scale);
        checked += 1;
    }
    assert!(checked >= 30);
}

#[test]
fn far_paste_labels_match_rasterized_areas() {
    let base = base_texture(128, 128, 1);
    let region = Region::Polygon {
        vertices: vec![(10.0, 12.0), (40.0, 8.5), (47.0, 30.0), (25.0, 44.0), (6.0, 33.0)],
    };
    let spec = ForgerySpec {
        rotation: 25.0,
        scale: 1.1,
        ..ForgerySpec::translation(region.clone(), 60.0, 55.0, 0)
    };
    let lf = generate(&base, &spec).unwrap();
    let src = rasterize(&region.vertices(), 128, 128);
    let dst = rasterize(&spec.target_vertices(), 128, 128);
    assert_eq!(lf.mc_gt.count(Label::Source), src.count());
    assert_eq!(lf.mc_gt.count(Label::Target), dst.count());
    assert_eq!(lf.m_gt.count(), src.count() + dst.count());
}

#[test]
fn noise_has_the_requested_spread() {
    let img = Image::filled(200, 200, 3, 0.5);
    let noisy = degrade(&img, 0.02, None, 3).unwrap();
    let n = noisy.data().len() as f64;
    let mean = noisy.data().iter().sum::<f64>() / n;
    let std = (noisy.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!((std - 0.02).abs() <= 0.002, "{std}");
    assert_eq!(degrade(&img, 0.0, None, 3).unwrap(), img);
}

#[test]
fn second_jpeg_pass_barely_moves_psnr() {
    let img = base_texture(128, 128, 8);
    let once = jpeg_round_trip(&img, 90).unwrap();
    let twice = jpeg_round_trip(&once, 90).unwrap();
    let (p1, p2) = (psnr(&img, &once), psnr(&img, &twice));
    assert!((p1 - p2).abs() < 1.0, "{p1} dB then {p2} dB");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn masks_are_consistent_and_generation_is_pure(seed in 0u64..10_000) {
        let base = base_texture(160, 160, seed);
        let Ok(spec) = random_spec(FixtureKind::Protocol, 160, 160, seed) else { return Ok(()) };
        let a = generate(&base, &spec).unwrap();
        let b = generate(&base, &spec).unwrap();
        prop_assert_eq!(&a, &b);
        for i in 0..160 {
            for j in 0..160 {
                let l = a.mc_gt.label(i, j);
                prop_assert_eq!(a.m_gt.get(i, j), l != Label::Background);
                prop_assert_eq!(a.mt_gt.get(i, j), l == Label::Target);
            }
        }
    }
}

mod common;

use cmfd::imagecore::Image;
use cmfd::zernike::{extract, make_kernels, DEFAULT_MAX_ORDER};
use common::{blobs, magnitudes, rel_l2, window, D};

#[test]
fn magnitudes_survive_arbitrary_rotation() {
    let base = magnitudes(&window(0.0));
    for deg in [30.0, 60.0, 120.0, 150.0] {
        let e = rel_l2(&magnitudes(&window(deg)), &base);
        assert!(e <= 0.05, "rotation {deg}: relative deviation {e}");
    }
}

#[test]
fn quarter_turns_are_exact() {
    let w0 = window(0.0);
    let base = magnitudes(&w0);
    // Rotate the sampled grid itself, so no resampling is involved.
    let mut w = w0;
    for turn in 1..4 {
        let mut r = vec![0.0; D * D];
        for i in 0..D {
            for j in 0..D {
                r[(D - 1 - j) * D + i] = w[i * D + j];
            }
        }
        w = r;
        let e = rel_l2(&magnitudes(&w), &base);
        assert!(e <= 1e-6, "{turn} quarter turns: {e}");
    }
}

#[test]
fn dense_extraction_matches_window_moments() {
    let n = 2 * D;
    let r = (D / 2) as f64;
    let data: Vec<f64> = (0..n * n)
        .map(|k| 0.5 + 0.4 * blobs((k % n) as f64 - r - 8.0, (k / n) as f64 - r - 8.0))
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    let img = Image::from_vec(n, n, 1, data.clone()).unwrap();
    let ks = make_kernels(DEFAULT_MAX_ORDER, D).unwrap();
    let feats = extract(&img, &ks).unwrap();
    // An interior pixel needs no padding.
    let (ci, cj) = (D, D - 3);
    let half = D / 2;
    let win: Vec<f64> = (0..D)
        .flat_map(|a| (0..D).map(move |b| (a, b)))
        .map(|(a, b)| data[(ci - half + a) * n + cj - half + b])
        .collect();
    let direct = ks.moments(&win);
    let dense = feats.magnitude_map.vector(ci, cj);
    for (m, v) in direct.iter().zip(dense) {
        assert!((m.norm() - v).abs() <= 1e-12 * (1.0 + v.abs()));
    }
    let cplx = feats.complex_map.vector(ci, cj);
    for (k, m) in direct.iter().enumerate() {
        assert!((cplx[2 * k] - m.re).abs() <= 1e-12 && (cplx[2 * k + 1] - m.im).abs() <= 1e-12);
    }
}

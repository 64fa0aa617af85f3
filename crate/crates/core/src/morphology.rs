//! Binary-mask utilities: connected components, small-region cleanup,
//! distance transform and square min filtering.

use std::collections::VecDeque;

/// Labels connected regions of pixels where `mask == value`. Returns a
/// label per pixel (`u32::MAX` for pixels not equal to `value`) and the
/// size of each label.
pub fn label_components(mask: &[bool], h: usize, w: usize, value: bool, eight: bool) -> (Vec<u32>, Vec<usize>) {
    assert_eq!(mask.len(), h * w);
    let mut labels = vec![u32::MAX; h * w];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    const N4: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
    const N8: [(isize, isize); 8] = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)];
    let nbrs: &[(isize, isize)] = if eight { &N8 } else { &N4 };
    for start in 0..h * w {
        if mask[start] != value || labels[start] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        let mut size = 0;
        labels[start] = id;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            size += 1;
            let (i, j) = ((k / w) as isize, (k % w) as isize);
            for &(di, dj) in nbrs {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= h as isize || nj >= w as isize {
                    continue;
                }
                let nk = ni as usize * w + nj as usize;
                if mask[nk] == value && labels[nk] == u32::MAX {
                    labels[nk] = id;
                    queue.push_back(nk);
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Drops 8-connected foreground regions smaller than `min_area`.
pub fn remove_small_regions(mask: &[bool], h: usize, w: usize, min_area: usize) -> Vec<bool> {
    let (labels, sizes) = label_components(mask, h, w, true, true);
    labels
        .iter()
        .map(|&l| l != u32::MAX && sizes[l as usize] >= min_area)
        .collect()
}

/// Pixels of 4-connected background regions that do not touch the border
/// and are smaller than `max_area`.
pub fn small_holes(mask: &[bool], h: usize, w: usize, max_area: usize) -> Vec<bool> {
    let (labels, sizes) = label_components(mask, h, w, false, false);
    let mut touches = vec![false; sizes.len()];
    for i in 0..h {
        for j in 0..w {
            if i == 0 || j == 0 || i == h - 1 || j == w - 1 {
                let l = labels[i * w + j];
                if l != u32::MAX {
                    touches[l as usize] = true;
                }
            }
        }
    }
    labels
        .iter()
        .map(|&l| l != u32::MAX && !touches[l as usize] && sizes[l as usize] < max_area)
        .collect()
}

/// One-dimensional squared distance transform of a sampled function.
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            // z[0] is -inf, so this never underflows k.
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        *o = (q as f64 - p as f64).powi(2) + f[p];
    }
}

/// Euclidean distance from every foreground pixel to the nearest background
/// pixel (0 on background). An all-foreground mask measures distance to the
/// outside of the image.
pub fn distance_to_background(mask: &[bool], h: usize, w: usize) -> Vec<f64> {
    assert_eq!(mask.len(), h * w);
    if mask.iter().all(|&m| m) {
        return (0..h * w)
            .map(|k| {
                let (i, j) = (k / w, k % w);
                (i + 1).min(h - i).min(j + 1).min(w - j) as f64
            })
            .collect();
    }
    const BIG: f64 = 1e12;
    let mut grid: Vec<f64> = mask.iter().map(|&m| if m { BIG } else { 0.0 }).collect();
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for j in 0..w {
        for i in 0..h {
            col[i] = grid[i * w + j];
        }
        edt_1d(&col, &mut col_out);
        for i in 0..h {
            grid[i * w + j] = col_out[i];
        }
    }
    let mut row_out = vec![0.0; w];
    for i in 0..h {
        edt_1d(&grid[i * w..(i + 1) * w], &mut row_out);
        grid[i * w..(i + 1) * w].copy_from_slice(&row_out);
    }
    grid.into_iter().map(f64::sqrt).collect()
}

/// Minimum over the `(2r + 1)^2` square centered at each pixel, clipped to
/// the image.
pub fn min_filter(values: &[f64], h: usize, w: usize, r: usize) -> Vec<f64> {
    assert_eq!(values.len(), h * w);
    let mut tmp = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let lo = j.saturating_sub(r);
            let hi = (j + r).min(w - 1);
            tmp[i * w + j] = values[i * w + lo..=i * w + hi].iter().cloned().fold(f64::INFINITY, f64::min);
        }
    }
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        let lo = i.saturating_sub(r);
        let hi = (i + r).min(h - 1);
        for j in 0..w {
            out[i * w + j] = (lo..=hi).map(|y| tmp[y * w + j]).fold(f64::INFINITY, f64::min);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(rows: &[&str]) -> (Vec<bool>, usize, usize) {
        let h = rows.len();
        let w = rows[0].len();
        (rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect(), h, w)
    }

    #[test]
    fn components_and_cleanup() {
        let (m, h, w) = parse(&["##...", "##..#", ".....", "#...."]);
        let (_, sizes) = label_components(&m, h, w, true, true);
        assert_eq!(sizes, vec![4, 1, 1]);
        let kept = remove_small_regions(&m, h, w, 2);
        assert_eq!(kept.iter().filter(|&&v| v).count(), 4);
        // Diagonal neighbors join under 8-connectivity.
        let (d, h, w) = parse(&["#.", ".#"]);
        assert_eq!(label_components(&d, h, w, true, true).1, vec![2]);
        assert_eq!(label_components(&d, h, w, true, false).1, vec![1, 1]);
    }

    #[test]
    fn holes_exclude_border_regions() {
        let (m, h, w) = parse(&["#####.", "#..#..", "#####.", "......"]);
        let holes = small_holes(&m, h, w, 10);
        assert_eq!(holes.iter().filter(|&&v| v).count(), 2);
        assert!(holes[7] && holes[8]);
        assert_eq!(small_holes(&m, h, w, 2).iter().filter(|&&v| v).count(), 0);
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let (m, h, w) = parse(&["........", ".######.", ".######.", ".###.##.", ".######.", "........"]);
        let d = distance_to_background(&m, h, w);
        for k in 0..h * w {
            let (i, j) = ((k / w) as f64, (k % w) as f64);
            let brute = (0..h * w)
                .filter(|&b| !m[b])
                .map(|b| (((b / w) as f64 - i).powi(2) + ((b % w) as f64 - j).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!((d[k] - brute).abs() < 1e-9, "pixel {k}: {} vs {brute}", d[k]);
        }
    }

    proptest! {
        #[test]
        fn edt_agrees_with_brute_force(bits in proptest::collection::vec(any::<bool>(), 7 * 9)) {
            let (h, w) = (7, 9);
            prop_assume!(bits.iter().any(|&b| !b));
            let d = distance_to_background(&bits, h, w);
            for k in 0..h * w {
                let (i, j) = ((k / w) as f64, (k % w) as f64);
                let brute = (0..h * w)
                    .filter(|&b| !bits[b])
                    .map(|b| (((b / w) as f64 - i).powi(2) + ((b % w) as f64 - j).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min);
                prop_assert!((d[k] - brute).abs() < 1e-9);
            }
        }

        #[test]
        fn min_filter_is_window_minimum(vals in proptest::collection::vec(-5.0f64..5.0, 6 * 5), r in 0usize..3) {
            let (h, w) = (6, 5);
            let out = min_filter(&vals, h, w, r);
            for i in 0..h {
                for j in 0..w {
                    let mut m = f64::INFINITY;
                    for y in i.saturating_sub(r)..=(i + r).min(h - 1) {
                        for x in j.saturating_sub(r)..=(j + r).min(w - 1) {
                            m = m.min(vals[y * w + x]);
                        }
                    }
                    prop_assert_eq!(out[i * w + j], m);
                }
            }
        }
    }
}

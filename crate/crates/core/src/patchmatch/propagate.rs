use super::field::{clamp_offset, OffsetField};

/// Neighbor directions `a` through `h` as `(row step, column step)`:
/// `a, c, e, g` are the direct neighbors, `b, d, f, h` the diagonals.
pub const STENCIL: [(isize, isize); 8] = [
    (-1, 0),  // a
    (-1, 1),  // b
    (0, 1),   // c
    (1, 1),   // d
    (1, 0),   // e
    (1, -1),  // f
    (0, -1),  // g
    (-1, -1), // h
];

/// Directions used for zero-order propagation.
const DIRECT: [usize; 4] = [0, 2, 4, 6];

/// Wrapped index `(k + step) mod len` for every `k`.
fn wrapped(len: usize, step: isize) -> Vec<usize> {
    (0..len).map(|k| (k as isize + step).rem_euclid(len as isize) as usize).collect()
}

/// Builds one candidate from the entries `near` and `far` steps away along
/// `(di, dj)` with circular wrap-around; `combine` maps the two neighbor
/// offsets to the unclamped candidate.
fn shifted_candidate(
    field: &OffsetField,
    (di, dj): (isize, isize),
    far: isize,
    combine: impl Fn((f64, f64), (f64, f64)) -> (f64, f64),
) -> OffsetField {
    let (h, w) = field.dims();
    let (rn, cn) = (wrapped(h, di), wrapped(w, dj));
    let (rf, cf) = (wrapped(h, far * di), wrapped(w, far * dj));
    OffsetField::from_fn(h, w, |i, j| {
        let n = field.get(rn[i], cn[j]);
        let f = field.get(rf[i], cf[j]);
        clamp_offset(h, w, i, j, combine(n, f))
    })
}

/// Zero-order candidates `a, c, e, g` followed by first-order candidates
/// `aa` through `hh`, each realized as whole-map circular shifts and
/// clamped to validity.
pub fn propagate(field: &OffsetField) -> Vec<OffsetField> {
    let mut out = Vec::with_capacity(12);
    for &g in &DIRECT {
        out.push(shifted_candidate(field, STENCIL[g], 1, |n, _| n));
    }
    for &step in &STENCIL {
        out.push(shifted_candidate(field, step, 2, |n, f| (2.0 * n.0 - f.0, 2.0 * n.1 - f.1)));
    }
    out
}

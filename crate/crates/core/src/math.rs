//! Small dense linear algebra used by the plant, the servo discretization and
//! the least-squares solvers. Sizes here never exceed a few dozen.

use alloc::vec::Vec;

/// Longitudinal state vector `[u, w, q, θ, h]`.
pub type Vec5 = [f64; 5];
/// 5×5 row-major matrix.
pub type Mat5 = [[f64; 5]; 5];

pub const ZERO5: Mat5 = [[0.0; 5]; 5];

pub fn mat_vec<const N: usize>(m: &[[f64; N]; N], v: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

pub fn mat_mul<const N: usize>(a: &[[f64; N]; N], b: &[[f64; N]; N]) -> [[f64; N]; N] {
    let mut out = [[0.0; N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..N {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// `a + s·b`
pub fn mat_add_scaled<const N: usize>(a: &[[f64; N]; N], b: &[[f64; N]; N], s: f64) -> [[f64; N]; N] {
    let mut out = *a;
    for (orow, brow) in out.iter_mut().zip(b) {
        for (o, bv) in orow.iter_mut().zip(brow) {
            *o += s * bv;
        }
    }
    out
}

pub fn identity<const N: usize>() -> [[f64; N]; N] {
    let mut out = [[0.0; N]; N];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    out
}

fn norm_one<const N: usize>(m: &[[f64; N]; N]) -> f64 {
    (0..N).map(|j| m.iter().map(|row| row[j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// Accurate to near machine precision for the small, moderately scaled
/// matrices used here (servo state transition over one sample).
pub fn expm<const N: usize>(m: &[[f64; N]; N]) -> [[f64; N]; N] {
    let norm = norm_one(m);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = {
        let mut s = *m;
        for row in s.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        s
    };
    let mut result = identity::<N>();
    let mut term = identity::<N>();
    for k in 1..=18 {
        term = mat_mul(&term, &scaled);
        let inv_k = 1.0 / k as f64;
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v *= inv_k;
            }
        }
        result = mat_add_scaled(&result, &term, 1.0);
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

/// Solves `a·x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is `n×n` row-major. Returns `None` for a numerically singular system.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() <= 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = alloc::vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

pub fn is_finite_mat<const N: usize>(m: &[[f64; N]; N]) -> bool {
    m.iter().flatten().all(|v| v.is_finite())
}

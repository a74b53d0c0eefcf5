//! Row-major matrix products with a fixed accumulation order.
//!
//! Each output element is accumulated over the shared dimension in ascending
//! index order, without fused multiply-add, so results are bit-identical on
//! every IEEE-754 platform regardless of SIMD width.

const ROWS: usize = 6;
const COLS: usize = 64;

macro_rules! dispatch {
    ($(#[$doc:meta])* $name:ident, $imp:ident, $avx:ident) => {
        $(#[$doc])*
        pub fn $name(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
            #[cfg(target_arch = "x86_64")]
            if std::arch::is_x86_feature_detected!("avx2") {
                // SAFETY: the CPU supports AVX2, checked just above.
                return unsafe { $avx(m, k, n, a, b, c) };
            }
            $imp(m, k, n, a, b, c)
        }

        // Same source compiled with wider vectors. Multiplies and adds stay
        // separate instructions, so results match the portable build bit for bit.
        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = "avx2")]
        unsafe fn $avx(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
            $imp(m, k, n, a, b, c)
        }
    };
}

dispatch!(
    /// `c[m×n] += a[m×k] · b[k×n]`
    gemm_nn, gemm_nn_impl, gemm_nn_avx2
);
dispatch!(
    /// `c[m×n] += a[k×m]ᵀ · b[k×n]`
    gemm_tn, gemm_tn_impl, gemm_tn_avx2
);
dispatch!(
    /// `c[m×n] += a[m×k] · b[n×k]ᵀ`
    gemm_nt, gemm_nt_impl, gemm_nt_avx2
);

#[inline(always)]
fn gemm_nn_impl(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    let mut acc = [[0.0f64; COLS]; ROWS];
    for i0 in (0..m).step_by(ROWS) {
        let rows = ROWS.min(m - i0);
        for j0 in (0..n).step_by(COLS) {
            let width = COLS.min(n - j0);
            for row in acc.iter_mut().take(rows) {
                row[..width].fill(0.0);
            }
            for p in 0..k {
                let brow = &b[p * n + j0..p * n + j0 + width];
                for (r, row) in acc.iter_mut().enumerate().take(rows) {
                    let av = a[(i0 + r) * k + p];
                    if av == 0.0 {
                        continue;
                    }
                    for (s, &bv) in row[..width].iter_mut().zip(brow) {
                        *s += av * bv;
                    }
                }
            }
            for (r, row) in acc.iter().enumerate().take(rows) {
                let crow = &mut c[(i0 + r) * n + j0..(i0 + r) * n + j0 + width];
                for (cv, &s) in crow.iter_mut().zip(&row[..width]) {
                    *cv += s;
                }
            }
        }
    }
}

#[inline(always)]
fn gemm_tn_impl(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert_eq!(a.len(), k * m);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    let mut acc = [[0.0f64; COLS]; ROWS];
    for i0 in (0..m).step_by(ROWS) {
        let rows = ROWS.min(m - i0);
        for j0 in (0..n).step_by(COLS) {
            let width = COLS.min(n - j0);
            for row in acc.iter_mut().take(rows) {
                row[..width].fill(0.0);
            }
            for p in 0..k {
                let brow = &b[p * n + j0..p * n + j0 + width];
                let acol = &a[p * m + i0..p * m + i0 + rows];
                for (row, &av) in acc.iter_mut().zip(acol) {
                    if av == 0.0 {
                        continue;
                    }
                    for (s, &bv) in row[..width].iter_mut().zip(brow) {
                        *s += av * bv;
                    }
                }
            }
            for (r, row) in acc.iter().enumerate().take(rows) {
                let crow = &mut c[(i0 + r) * n + j0..(i0 + r) * n + j0 + width];
                for (cv, &s) in crow.iter_mut().zip(&row[..width]) {
                    *cv += s;
                }
            }
        }
    }
}

#[inline(always)]
fn gemm_nt_impl(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert_eq!(b.len(), n * k);
    let mut bt = vec![0.0; k * n];
    const TILE: usize = 32;
    for j0 in (0..n).step_by(TILE) {
        for p0 in (0..k).step_by(TILE) {
            for j in j0..(j0 + TILE).min(n) {
                for p in p0..(p0 + TILE).min(k) {
                    bt[p * n + j] = b[j * k + p];
                }
            }
        }
    }
    gemm_nn_impl(m, k, n, a, &bt, c)
}

/// Dot product with four interleaved partial sums combined in a fixed order.
#[inline(always)]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut s = [0.0f64; 4];
    let chunks = x.len() / 4;
    for q in 0..chunks {
        let i = q * 4;
        s[0] += x[i] * y[i];
        s[1] += x[i + 1] * y[i + 1];
        s[2] += x[i + 2] * y[i + 2];
        s[3] += x[i + 3] * y[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..x.len() {
        tail += x[i] * y[i];
    }
    ((s[0] + s[1]) + (s[2] + s[3])) + tail
}

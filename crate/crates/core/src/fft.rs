//! Thin wrappers over `rustfft` for 1-D and 2-D transforms (unnormalized).

use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn fft(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    plan.process(data);
}

/// Row-major `rows x cols` array.
pub fn fft2(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (pr, pc) = if inverse {
        (
            planner.plan_fft_inverse(cols),
            planner.plan_fft_inverse(rows),
        )
    } else {
        (
            planner.plan_fft_forward(cols),
            planner.plan_fft_forward(rows),
        )
    };
    for row in data.chunks_mut(cols) {
        pr.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = data[r * cols + c];
        }
        pc.process(&mut col);
        for r in 0..rows {
            data[r * cols + c] = col[r];
        }
    }
}

/// Linear (non-circular) 2-D convolution of `a` (`n x n`) with a centered kernel
/// `k` (`(2w+1) x (2w+1)`), returning the central `m x m` block where `n = m + 2w`.
pub fn convolve2_valid(a: &[f64], n: usize, k: &[f64], w: usize) -> Vec<f64> {
    let kw = 2 * w + 1;
    let size = (n + kw).next_power_of_two();
    let mut fa = vec![Complex64::new(0.0, 0.0); size * size];
    let mut fk = vec![Complex64::new(0.0, 0.0); size * size];
    for i in 0..n {
        for j in 0..n {
            fa[i * size + j].re = a[i * n + j];
        }
    }
    for i in 0..kw {
        for j in 0..kw {
            fk[i * size + j].re = k[i * kw + j];
        }
    }
    fft2(&mut fa, size, size, false);
    fft2(&mut fk, size, size, false);
    for (x, y) in fa.iter_mut().zip(&fk) {
        *x *= y;
    }
    fft2(&mut fa, size, size, true);
    let norm = (size * size) as f64;
    let m = n - 2 * w;
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            // full convolution index (i + 2w, j + 2w) is centered on a[i + w][j + w]
            out[i * m + j] = fa[(i + 2 * w) * size + j + 2 * w].re / norm;
        }
    }
    out
}

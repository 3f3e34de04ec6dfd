//! Shared FFT plumbing: planner cache plus 1-D and 2-D transforms.
//!
//! Transforms here are unnormalized (rustfft convention); callers apply
//! whatever normalization their contract states. Arbitrary sizes are
//! supported through rustfft's mixed-radix planner.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| match direction {
        FftDirection::Forward => p.borrow_mut().plan_fft_forward(len),
        FftDirection::Inverse => p.borrow_mut().plan_fft_inverse(len),
    })
}

/// In-place unnormalized 1-D FFT.
pub(crate) fn fft_in_place(buf: &mut [Complex64], direction: FftDirection) {
    if buf.len() < 2 {
        return;
    }
    plan(buf.len(), direction).process(buf);
}

/// Unnormalized 1-D forward FFT of a copy.
pub(crate) fn fft(input: &[Complex64]) -> Vec<Complex64> {
    let mut buf = input.to_vec();
    fft_in_place(&mut buf, FftDirection::Forward);
    buf
}

/// 1-D inverse FFT normalized by 1/n (round-trips with [`fft`]).
pub(crate) fn ifft(input: &[Complex64]) -> Vec<Complex64> {
    let mut buf = input.to_vec();
    fft_in_place(&mut buf, FftDirection::Inverse);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    buf
}

/// In-place unnormalized 2-D FFT of row-major `rows x cols` data.
pub(crate) fn fft2_in_place(
    data: &mut [Complex64],
    rows: usize,
    cols: usize,
    direction: FftDirection,
) {
    assert_eq!(data.len(), rows * cols, "fft2 buffer shape mismatch");
    let row_plan = plan(cols, direction);
    for r in 0..rows {
        row_plan.process(&mut data[r * cols..(r + 1) * cols]);
    }
    let col_plan = plan(rows, direction);
    let mut column = vec![Complex64::default(); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_plan.process(&mut column);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
}

/// Signed DFT bin index: bins above n/2 alias to negative frequencies.
pub(crate) fn signed_bin(index: usize, n: usize) -> i64 {
    let i = index as i64;
    let n = n as i64;
    if 2 * i >= n {
        i - n
    } else {
        i
    }
}

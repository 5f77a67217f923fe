//! Grid <-> Fourier coefficient transforms on the unit circle.
//!
//! Samples live on the uniform grid `zeta_l = exp(2*pi*i*l/g)`. A scalar
//! sequence of samples `x_l = sum_k c_k zeta_l^k` determines the coefficients
//! `c_k` for frequencies in the window `[-ceil(g/2)+1, floor(g/2)]`.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Frequency associated with DFT bin `idx` on a grid of size `g`.
pub fn bin_frequency(idx: usize, g: usize) -> i64 {
    let half = g / 2;
    if idx <= half {
        idx as i64
    } else {
        idx as i64 - g as i64
    }
}

/// DFT bin holding frequency `k` on a grid of size `g`, if representable.
pub fn frequency_bin(k: i64, g: usize) -> Option<usize> {
    let half = (g / 2) as i64;
    let lo = -(g as i64) + half + 1;
    if k > half || k < lo {
        return None;
    }
    Some(k.rem_euclid(g as i64) as usize)
}

/// Grid nodes `exp(2*pi*i*l/g)`.
pub fn grid_nodes(g: usize) -> Vec<Complex64> {
    (0..g)
        .map(|l| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / g as f64))
        .collect()
}

/// Coefficients (indexed by DFT bin) from samples.
pub fn samples_to_bins(samples: &[Complex64]) -> Vec<Complex64> {
    let g = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(g).process(&mut buf);
    let scale = 1.0 / g as f64;
    for x in &mut buf {
        *x *= scale;
    }
    buf
}

/// Samples from coefficients indexed by DFT bin.
pub fn bins_to_samples(bins: &[Complex64]) -> Vec<Complex64> {
    let mut buf = bins.to_vec();
    FftPlanner::new()
        .plan_fft_inverse(bins.len())
        .process(&mut buf);
    buf
}

//! 16 kHz -> 10 kHz polyphase windowed-sinc resampler.
//!
//! Output sample `n` sits at `t_n = n / 10000` s and is
//! `y[n] = sum_j x[j] h(t_n - j / 16000)` with
//!
//! ```text
//! h(t) = (2 fc / 16000) sinc(2 fc t) I0(beta sqrt(1 - (t/T)^2)) / I0(beta),  |t| <= T
//! fc = 4750 Hz, T = 2 ms, beta = 8
//! ```
//!
//! On the common 80 kHz grid `t_n - j/16000 = (8n - 5j) / 80000`, so the
//! kernel is tabulated at the 321 integer offsets `d` in `[-160, 160]`; the
//! five polyphase branches are the residues of `d` modulo 5. Samples outside
//! the signal are zero.

use std::f64::consts::PI;

pub const CUTOFF_HZ: f64 = 4750.0;
pub const HALF_WIDTH_SECS: f64 = 0.002;
pub const KAISER_BETA: f64 = 8.0;
const UP: usize = 5;
const DOWN: usize = 8;
const GRID_HZ: f64 = 80_000.0;
const HALF_TAPS: i64 = (HALF_WIDTH_SECS * GRID_HZ) as i64;

/// Modified Bessel function of the first kind, order zero (power series).
pub(crate) fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kernel(d: i64) -> f64 {
    let t = d as f64 / GRID_HZ;
    let u = 2.0 * CUTOFF_HZ * t;
    let sinc = if u == 0.0 { 1.0 } else { (PI * u).sin() / (PI * u) };
    let r = t / HALF_WIDTH_SECS;
    let win = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / bessel_i0(KAISER_BETA);
    2.0 * CUTOFF_HZ / 16_000.0 * sinc * win
}

pub fn resample_16k_to_10k(x: &[f64]) -> Vec<f64> {
    let table: Vec<f64> = (-HALF_TAPS..=HALF_TAPS).map(kernel).collect();
    let n_out = (x.len() * UP).div_ceil(DOWN);
    let len = x.len() as i64;
    (0..n_out as i64)
        .map(|n| {
            let pos = DOWN as i64 * n;
            // j with |pos - 5 j| <= HALF_TAPS
            let j_lo = (pos - HALF_TAPS + UP as i64 - 1).div_euclid(UP as i64).max(0);
            let j_hi = (pos + HALF_TAPS).div_euclid(UP as i64).min(len - 1);
            let mut acc = 0.0;
            let mut j = j_lo;
            while j <= j_hi {
                let d = pos - UP as i64 * j;
                acc += x[j as usize] * table[(d + HALF_TAPS) as usize];
                j += 1;
            }
            acc
        })
        .collect()
}

//! Cross-correlation time alignment of a degraded signal to its reference.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dsp::{AudioSignal, SAMPLE_RATE};
use crate::error::Result;

pub const MAX_LAG_SECS: f64 = 0.1;

/// Lag `L` (samples, `|L| <= max_lag`) maximising `sum_n x[n] y[n + L]`.
pub fn estimate_lag(reference: &[f64], degraded: &[f64], max_lag: usize) -> isize {
    let n = (reference.len() + degraded.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lift = |v: &[f64]| {
        let mut b: Vec<Complex64> = v.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        b.resize(n, Complex64::new(0.0, 0.0));
        b
    };
    let mut a = lift(reference);
    let mut b = lift(degraded);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p = p.conj() * q;
    }
    inv.process(&mut a);
    let at = |lag: isize| {
        let idx = if lag >= 0 { lag as usize } else { n - (-lag) as usize };
        a[idx].re
    };
    let max_lag = max_lag as isize;
    (-max_lag..=max_lag)
        .max_by(|&l1, &l2| at(l1).total_cmp(&at(l2)).then(l2.abs().cmp(&l1.abs())))
        .unwrap_or(0)
}

/// Shifts `degraded` by the estimated lag (search limited to 100 ms) and
/// trims both signals to their overlap.
pub fn align(reference: &AudioSignal, degraded: &AudioSignal) -> Result<(AudioSignal, AudioSignal)> {
    let max_lag = (MAX_LAG_SECS * SAMPLE_RATE as f64) as usize;
    let lag = estimate_lag(reference.samples(), degraded.samples(), max_lag);
    let (r, d) = (reference.samples(), degraded.samples());
    let (r, d) = if lag >= 0 {
        let d = &d[(lag as usize).min(d.len())..];
        (r, d)
    } else {
        let r = &r[((-lag) as usize).min(r.len())..];
        (r, d)
    };
    let n = r.len().min(d.len());
    Ok((
        AudioSignal::new(r[..n].to_vec(), SAMPLE_RATE)?,
        AudioSignal::new(d[..n].to_vec(), SAMPLE_RATE)?,
    ))
}

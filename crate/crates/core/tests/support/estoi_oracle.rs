//! Brute-force ESTOI used as an independent reference: direct kernel
//! evaluation for resampling, direct DFT, explicit loops everywhere.

use std::f64::consts::PI;

const FS_IN: f64 = 16_000.0;
const FS: f64 = 10_000.0;
const N_FRAME: usize = 256;
const HOP: usize = 128;
const NFFT: usize = 512;
const BANDS: usize = 15;
const SEG: usize = 30;
const DYN_RANGE: f64 = 40.0;
const EPS: f64 = f64::EPSILON;

/// `I0(x)` by composite Simpson quadrature of `(1/pi) int_0^pi exp(x cos t) dt`.
fn i0(x: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |t: f64| (x * t.cos()).exp();
    let mut s = f(0.0) + f(PI);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 / PI
}

/// Kaiser-windowed sinc low-pass at 4750 Hz, 2 ms half-width, beta 8.
fn kernel(t: f64, i0_beta: f64) -> f64 {
    let half = 0.002;
    if t.abs() > half + 1e-15 {
        return 0.0;
    }
    let fc = 4750.0;
    let arg = 2.0 * fc * t;
    let sinc = if arg.abs() < 1e-300 { 1.0 } else { (PI * arg).sin() / (PI * arg) };
    let r = (t / half).min(1.0);
    let win = i0(8.0 * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
    2.0 * fc / FS_IN * sinc * win
}

pub fn resample(x: &[f64]) -> Vec<f64> {
    let i0_beta = i0(8.0);
    let n_out = (x.len() * 5 + 7) / 8;
    let mut cache = std::collections::HashMap::new();
    (0..n_out)
        .map(|n| {
            let t_n = n as f64 / FS;
            let centre = (t_n * FS_IN).round() as i64;
            let mut acc = 0.0;
            for j in (centre - 40).max(0)..=(centre + 40).min(x.len() as i64 - 1) {
                // Offset on the 80 kHz grid, kept integral to avoid drift.
                let d = 8 * n as i64 - 5 * j;
                let h = *cache
                    .entry(d)
                    .or_insert_with(|| kernel(d as f64 / 80_000.0, i0_beta));
                acc += x[j as usize] * h;
            }
            acc
        })
        .collect()
}

fn hann() -> Vec<f64> {
    // Symmetric Hann of N+2 points with both zero ends removed.
    let m = N_FRAME + 2;
    (1..m - 1)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (m - 1) as f64).cos()))
        .collect()
}

fn starts(len: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut s = 0;
    while len > N_FRAME && s < len - N_FRAME {
        v.push(s);
        s += HOP;
    }
    v
}

fn drop_silence(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w = hann();
    let st = starts(x.len());
    let mut levels = Vec::new();
    for &s in &st {
        let mut e = 0.0;
        for i in 0..N_FRAME {
            e += (w[i] * x[s + i]) * (w[i] * x[s + i]);
        }
        levels.push(20.0 * (e.sqrt() + EPS).log10());
    }
    let top = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let keep: Vec<usize> = (0..st.len()).filter(|&i| levels[i] > top - DYN_RANGE).collect();
    if keep.is_empty() {
        return (vec![], vec![]);
    }
    let len = (keep.len() - 1) * HOP + N_FRAME;
    let (mut xo, mut yo) = (vec![0.0; len], vec![0.0; len]);
    for (j, &i) in keep.iter().enumerate() {
        for n in 0..N_FRAME {
            xo[j * HOP + n] += w[n] * x[st[i] + n];
            yo[j * HOP + n] += w[n] * y[st[i] + n];
        }
    }
    (xo, yo)
}

fn band_edges() -> Vec<(usize, usize)> {
    let df = FS / NFFT as f64;
    (0..BANDS)
        .map(|k| {
            let centre = 150.0 * 2f64.powf(k as f64 / 3.0);
            let lo = centre * 2f64.powf(-1.0 / 6.0);
            let hi = centre * 2f64.powf(1.0 / 6.0);
            ((lo / df).round() as usize, (hi / df).round() as usize)
        })
        .collect()
}

fn envelopes(x: &[f64]) -> Vec<[f64; BANDS]> {
    let w = hann();
    let edges = band_edges();
    let table: Vec<(f64, f64)> = (0..NFFT)
        .map(|p| {
            let a = -2.0 * PI * p as f64 / NFFT as f64;
            (a.cos(), a.sin())
        })
        .collect();
    starts(x.len())
        .into_iter()
        .map(|s| {
            let mut power = vec![0.0; NFFT / 2 + 1];
            for (k, p) in power.iter_mut().enumerate() {
                let (mut re, mut im) = (0.0, 0.0);
                for n in 0..N_FRAME {
                    let (c, sn) = table[(k * n) % NFFT];
                    re += w[n] * x[s + n] * c;
                    im += w[n] * x[s + n] * sn;
                }
                *p = re * re + im * im;
            }
            let mut env = [0.0; BANDS];
            for (b, &(lo, hi)) in edges.iter().enumerate() {
                env[b] = power[lo..hi].iter().sum::<f64>().sqrt();
            }
            env
        })
        .collect()
}

fn normalise(seg: &mut [[f64; BANDS]]) {
    for b in 0..BANDS {
        let mean: f64 = seg.iter().map(|f| f[b]).sum::<f64>() / SEG as f64;
        let mut norm = 0.0;
        for f in seg.iter() {
            norm += (f[b] - mean) * (f[b] - mean);
        }
        let norm = norm.sqrt() + EPS;
        for f in seg.iter_mut() {
            f[b] = (f[b] - mean) / norm;
        }
    }
    for f in seg.iter_mut() {
        let mean: f64 = f.iter().sum::<f64>() / BANDS as f64;
        let norm = f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt() + EPS;
        for v in f.iter_mut() {
            *v = (*v - mean) / norm;
        }
    }
}

/// ESTOI of `y` against `x`, both 16 kHz; `None` when too short.
pub fn estoi_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    let (x, y) = drop_silence(&resample(&x[..n]), &resample(&y[..n]));
    let (ex, ey) = (envelopes(&x), envelopes(&y));
    if ex.len() < SEG {
        return None;
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for m in SEG..=ex.len() {
        let mut a = ex[m - SEG..m].to_vec();
        let mut b = ey[m - SEG..m].to_vec();
        normalise(&mut a);
        normalise(&mut b);
        for t in 0..SEG {
            for k in 0..BANDS {
                total += a[t][k] * b[t][k];
            }
        }
        count += SEG;
    }
    Some(total / count as f64)
}

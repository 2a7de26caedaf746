//! Small trace-level helpers: analytic-signal envelope, sub-sample peak
//! picking, RMS.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Magnitude of the analytic signal (Hilbert envelope).
pub fn envelope(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    // zero-pad to limit circular wrap of late energy into early samples
    let len = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    fwd.process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let w = if k == 0 || k == len / 2 {
            1.0
        } else if k < len / 2 {
            2.0
        } else {
            0.0
        };
        *c *= w;
    }
    inv.process(&mut buf);
    buf[..n].iter().map(|c| c.norm() / len as f64).collect()
}

/// Index of the largest value refined by a three-point parabola, in samples.
pub fn peak_position(x: &[f64]) -> Option<f64> {
    let (k, _) = x
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if k == 0 || k + 1 == x.len() {
        return Some(k as f64);
    }
    let (a, b, c) = (x[k - 1], x[k], x[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 {
        0.5 * (a - c) / denom
    } else {
        0.0
    };
    Some(k as f64 + shift)
}

/// Time of the envelope maximum, in seconds.
pub fn envelope_peak_time(x: &[f64], dt: f64) -> Option<f64> {
    peak_position(&envelope(x)).map(|p| p * dt)
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_of_tone_is_flat() {
        let x: Vec<f64> = (0..512).map(|k| (0.3 * k as f64).cos()).collect();
        let e = envelope(&x);
        for v in &e[64..448] {
            assert!((v - 1.0).abs() < 0.02, "{v}");
        }
    }

    #[test]
    fn peak_of_sampled_parabola_is_exact() {
        let x: Vec<f64> = (0..10).map(|k| -(k as f64 - 4.3).powi(2)).collect();
        assert!((peak_position(&x).unwrap() - 4.3).abs() < 1e-12);
    }

    #[test]
    fn rms_of_constant() {
        assert_eq!(rms(&[2.0; 8]), 2.0);
        assert_eq!(rms(&[]), 0.0);
    }
}

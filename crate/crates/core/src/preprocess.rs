//! B-scan conditioning: direct-coupling removal, SVD clutter suppression,
//! Kaiser-window band-pass filtering, time-zero alignment, plus the
//! normalization and resizing helpers used to prepare network inputs.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdtd::{AScan, BScan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandpassParams {
    pub f_lo: f64,
    pub f_hi: f64,
    pub taps: usize,
    pub beta: f64,
}

impl Default for BandpassParams {
    fn default() -> Self {
        Self {
            f_lo: 0.7e9,
            f_hi: 2.3e9,
            taps: 101,
            beta: 6.0,
        }
    }
}

/// Steps applied to one of the two processed outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessingPath {
    pub coupling_removal: bool,
    /// Number of dominant singular components removed; 0 disables the step.
    pub svd_rank: usize,
    pub bandpass: Option<BandpassParams>,
    /// Threshold fraction for time-zero alignment.
    pub time_zero: Option<f64>,
    /// Output image size `(rows, cols)` for network inputs.
    pub resize: Option<(usize, usize)>,
}

impl Default for ProcessingPath {
    fn default() -> Self {
        Self {
            coupling_removal: true,
            svd_rank: 0,
            bandpass: None,
            time_zero: None,
            resize: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessProfile {
    pub name: String,
    pub for_network: ProcessingPath,
    pub for_migration: ProcessingPath,
}

impl Default for PreprocessProfile {
    fn default() -> Self {
        Self {
            name: "default".into(),
            for_network: ProcessingPath {
                resize: Some((128, 128)),
                ..Default::default()
            },
            for_migration: ProcessingPath {
                coupling_removal: true,
                svd_rank: 1,
                bandpass: Some(BandpassParams::default()),
                time_zero: Some(0.05),
                resize: None,
            },
        }
    }
}

impl PreprocessProfile {
    pub fn validate(&self) -> Result<()> {
        for path in [&self.for_network, &self.for_migration] {
            if let Some(f) = path.time_zero {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::Parameter(format!(
                        "time-zero threshold must lie in (0, 1), got {f}"
                    )));
                }
            }
            if let Some(bp) = path.bandpass {
                if bp.taps % 2 == 0 || !(bp.f_lo > 0.0 && bp.f_lo < bp.f_hi) {
                    return Err(Error::Parameter("band-pass needs odd taps and 0 < f_lo < f_hi".into()));
                }
            }
            if let Some((h, w)) = path.resize {
                if h == 0 || w == 0 {
                    return Err(Error::Parameter("resize target must be non-empty".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_reference(b: &BScan, reference: &AScan) -> Result<()> {
    if reference.len() != b.n_samples() {
        return Err(Error::Shape(format!(
            "reference has {} samples, B-scan has {}",
            reference.len(),
            b.n_samples()
        )));
    }
    if (reference.dt - b.dt).abs() > 1e-9 * b.dt {
        return Err(Error::Shape(format!(
            "reference dt {} differs from B-scan dt {}",
            reference.dt, b.dt
        )));
    }
    Ok(())
}

/// Subtracts the empty-scene trace from every trace.
pub fn coupling_removal(b: &BScan, reference: &AScan) -> Result<BScan> {
    check_reference(b, reference)?;
    let r = ArrayView1::from(&reference.samples);
    let mut out = b.traces.clone();
    for mut row in out.rows_mut() {
        row -= &r;
    }
    Ok(b.with_traces(out))
}

/// Removes the `k` dominant singular components of the trace matrix.
pub fn svd_clutter_removal(b: &BScan, k: usize) -> Result<BScan> {
    if k == 0 {
        return Ok(b.clone());
    }
    let (m, n) = b.traces.dim();
    if k >= m.min(n) {
        return Err(Error::Parameter(format!(
            "rank {k} must be below min(n_traces, n_samples) = {}",
            m.min(n)
        )));
    }
    let a = DMatrix::from_fn(m, n, |i, j| b.traces[[i, j]]);
    let svd = a.clone().svd(true, true);
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let mut residual = a;
    for &c in &order[..k] {
        let s = svd.singular_values[c];
        residual -= u.column(c) * vt.row(c) * s;
    }
    Ok(b.with_traces(Array2::from_shape_fn((m, n), |(i, j)| residual[(i, j)])))
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

pub fn kaiser_window(taps: usize, beta: f64) -> Vec<f64> {
    if taps == 1 {
        return vec![1.0];
    }
    let half = (taps - 1) as f64 / 2.0;
    let norm = bessel_i0(beta);
    (0..taps)
        .map(|i| {
            let r = (i as f64 - half) / half;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm
        })
        .collect()
}

/// Linear-phase Kaiser-windowed band-pass taps for sample interval `dt`.
pub fn kaiser_bandpass_taps(f_lo: f64, f_hi: f64, taps: usize, beta: f64, dt: f64) -> Result<Vec<f64>> {
    let nyquist = 0.5 / dt;
    if !(f_lo > 0.0 && f_lo < f_hi && f_hi < nyquist) {
        return Err(Error::Parameter(format!(
            "band [{f_lo}, {f_hi}] Hz must satisfy 0 < f_lo < f_hi < Nyquist ({nyquist} Hz)"
        )));
    }
    if taps % 2 == 0 {
        return Err(Error::Parameter(format!("tap count must be odd, got {taps}")));
    }
    let (lo, hi) = (f_lo * dt, f_hi * dt);
    let half = (taps / 2) as isize;
    let window = kaiser_window(taps, beta);
    let lowpass = |fc: f64, n: f64| {
        if n == 0.0 {
            2.0 * fc
        } else {
            (2.0 * PI * fc * n).sin() / (PI * n)
        }
    };
    Ok((0..taps)
        .map(|i| {
            let n = (i as isize - half) as f64;
            window[i] * (lowpass(hi, n) - lowpass(lo, n))
        })
        .collect())
}

/// Centred convolution, output length equal to the input.
fn convolve_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    let half = h.len() / 2;
    let n = x.len();
    (0..n)
        .map(|i| {
            h.iter()
                .enumerate()
                .filter_map(|(k, &hk)| {
                    let j = i as isize + half as isize - k as isize;
                    (j >= 0 && (j as usize) < n).then(|| hk * x[j as usize])
                })
                .sum()
        })
        .collect()
}

/// Index into `0..n` by repeated mirroring about the end samples.
fn mirror(k: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = k.rem_euclid(period);
    (if m < n as isize { m } else { period - m }) as usize
}

/// Zero-phase filtering: forward and backward passes of a symmetric FIR over
/// an odd-extended copy of the trace.
pub fn filtfilt(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = h.len() as isize;
    let (first, last) = (x[0], x[n - 1]);
    let extended: Vec<f64> = (-pad..n as isize + pad)
        .map(|k| {
            if k < 0 {
                2.0 * first - x[mirror(-k, n)]
            } else if k >= n as isize {
                2.0 * last - x[mirror(2 * (n as isize - 1) - k, n)]
            } else {
                x[k as usize]
            }
        })
        .collect();
    let forward = convolve_same(&extended, h);
    let mut backward: Vec<f64> = forward.into_iter().rev().collect();
    backward = convolve_same(&backward, h);
    backward.reverse();
    backward[pad as usize..pad as usize + n].to_vec()
}

/// Zero-phase Kaiser band-pass applied to every trace.
pub fn bandpass_fir(b: &BScan, f_lo: f64, f_hi: f64, taps: usize, beta: f64) -> Result<BScan> {
    let h = kaiser_bandpass_taps(f_lo, f_hi, taps, beta, b.dt)?;
    let mut out = Array2::zeros(b.traces.dim());
    for (mut dst, src) in out.rows_mut().into_iter().zip(b.traces.rows()) {
        let y = filtfilt(&src.to_vec(), &h);
        dst.assign(&Array1::from(y));
    }
    Ok(b.with_traces(out))
}

pub fn bandpass_with(b: &BScan, p: &BandpassParams) -> Result<BScan> {
    bandpass_fir(b, p.f_lo, p.f_hi, p.taps, p.beta)
}

/// First sample of `reference` whose magnitude exceeds `threshold_frac · max|reference|`.
pub fn first_break(reference: &AScan, threshold_frac: f64) -> Result<usize> {
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(Error::Parameter(format!(
            "threshold fraction must lie in (0, 1), got {threshold_frac}"
        )));
    }
    let peak = reference.peak_abs();
    let threshold = threshold_frac * peak;
    reference
        .samples
        .iter()
        .position(|v| v.abs() > threshold)
        .filter(|_| peak > 0.0)
        .ok_or(Error::Alignment { threshold, peak })
}

/// Shifts each row of `traces` earlier by `shift` samples (later if negative),
/// filling with zeros.
fn shift_rows(traces: &Array2<f64>, shift: isize) -> Array2<f64> {
    let n = traces.ncols() as isize;
    Array2::from_shape_fn(traces.dim(), |(i, j)| {
        let src = j as isize + shift;
        if src >= 0 && src < n {
            traces[[i, src as usize]]
        } else {
            0.0
        }
    })
}

/// Aligns `t = 0` with the first threshold crossing of the raw-time `reference`.
/// The B-scan's existing `t0_offset` counts towards the shift, so repeated
/// application is a no-op.
pub fn time_zero(b: &BScan, reference: &AScan, threshold_frac: f64) -> Result<BScan> {
    check_reference(b, reference)?;
    let crossing = first_break(reference, threshold_frac)?;
    let target = crossing as f64 * b.dt;
    let shift = ((target - b.t0_offset) / b.dt).round() as isize;
    let mut out = b.with_traces(shift_rows(&b.traces, shift));
    out.t0_offset = b.t0_offset + shift as f64 * b.dt;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub global_min: f64,
    pub global_max: f64,
}

impl NormStats {
    pub fn new(global_min: f64, global_max: f64) -> Result<Self> {
        let s = Self {
            global_min,
            global_max,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.global_max > self.global_min) {
            return Err(Error::DegenerateStats {
                min: self.global_min,
                max: self.global_max,
            });
        }
        Ok(())
    }

    /// Min/max over every value produced by `values`.
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self::new(lo, hi)
    }

    pub fn apply(&self, v: f64) -> f64 {
        ((v - self.global_min) / (self.global_max - self.global_min)).clamp(0.0, 1.0)
    }

    pub fn invert(&self, u: f64) -> f64 {
        self.global_min + u * (self.global_max - self.global_min)
    }
}

/// `(x − min)/(max − min)` clipped to `[0, 1]`.
pub fn normalize01<D: ndarray::Dimension>(
    x: &ndarray::Array<f64, D>,
    stats: &NormStats,
) -> Result<ndarray::Array<f64, D>> {
    stats.validate()?;
    Ok(x.mapv(|v| stats.apply(v)))
}

/// Log-scale min-max mapping of a positive scalar onto `[0, 1]`.
pub fn log_minmax(v: f64, v_min: f64, v_max: f64) -> Result<f64> {
    if !(v > 0.0 && v_min > 0.0 && v_max > 0.0) {
        return Err(Error::Domain(format!(
            "log normalization needs positive values (v={v}, bounds [{v_min}, {v_max}])"
        )));
    }
    if !(v_max > v_min) {
        return Err(Error::DegenerateStats {
            min: v_min,
            max: v_max,
        });
    }
    Ok((v.ln() - v_min.ln()) / (v_max.ln() - v_min.ln()))
}

pub fn log_minmax_inverse(u: f64, v_min: f64, v_max: f64) -> f64 {
    (v_min.ln() + u * (v_max.ln() - v_min.ln())).exp()
}

/// Bilinear resampling with corner-aligned sample positions.
pub fn resize_bilinear(img: &Array2<f64>, out_h: usize, out_w: usize) -> Result<Array2<f64>> {
    let (h, w) = img.dim();
    if h == 0 || w == 0 || out_h == 0 || out_w == 0 {
        return Err(Error::Shape("resize needs non-empty input and output".into()));
    }
    let coord = |i: usize, n_out: usize, n_in: usize| -> (usize, usize, f64) {
        if n_out == 1 || n_in == 1 {
            return (0, 0, 0.0);
        }
        let x = i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64;
        let i0 = (x.floor() as usize).min(n_in - 2);
        (i0, i0 + 1, x - i0 as f64)
    };
    Ok(Array2::from_shape_fn((out_h, out_w), |(r, c)| {
        let (r0, r1, fr) = coord(r, out_h, h);
        let (c0, c1, fc) = coord(c, out_w, w);
        let top = img[[r0, c0]] * (1.0 - fc) + img[[r0, c1]] * fc;
        let bottom = img[[r1, c0]] * (1.0 - fc) + img[[r1, c1]] * fc;
        top * (1.0 - fr) + bottom * fr
    }))
}

/// Result of [`apply_path`]: the processed B-scan, and the resized image when
/// the path asks for one.
pub struct Processed {
    pub bscan: BScan,
    pub image: Option<Array2<f64>>,
}

/// Runs one processing path: coupling removal, SVD, band-pass, time zero, resize.
pub fn apply_path(raw: &BScan, reference: &AScan, path: &ProcessingPath) -> Result<Processed> {
    let mut b = raw.clone();
    if path.coupling_removal {
        b = coupling_removal(&b, reference)?;
    }
    if path.svd_rank > 0 {
        b = svd_clutter_removal(&b, path.svd_rank)?;
    }
    if let Some(bp) = &path.bandpass {
        b = bandpass_with(&b, bp)?;
    }
    if let Some(frac) = path.time_zero {
        b = time_zero(&b, reference, frac)?;
    }
    let image = path
        .resize
        .map(|(h, w)| resize_bilinear(&b.traces, h, w))
        .transpose()?;
    Ok(Processed { bscan: b, image })
}

/// Energy of `traces` restricted to the sample window `[t_lo, t_hi)` seconds.
pub fn window_energy(b: &BScan, t_lo: f64, t_hi: f64) -> f64 {
    let lo = ((t_lo / b.dt).ceil().max(0.0) as usize).min(b.n_samples());
    let hi = ((t_hi / b.dt).ceil().max(0.0) as usize).min(b.n_samples());
    b.traces
        .slice(ndarray::s![.., lo..hi])
        .iter()
        .map(|v| v * v)
        .sum()
}

pub fn total_energy(b: &BScan) -> f64 {
    b.traces.iter().map(|v| v * v).sum()
}

/// Mean trace, used by tests and diagnostics.
pub fn mean_trace(b: &BScan) -> Array1<f64> {
    b.traces.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(b.n_samples()))
}

use std::f64::consts::TAU;

use cylgpr::fdtd::{ricker, BScan};
use cylgpr::migrate::{kirchhoff_migrate, velocity_from_permittivity, Contour, MigrationParams};
use cylgpr::scene::GridSpec;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 4e-11;
const N_SAMPLES: usize = 300;

fn circle_contour(radius: f64, n: usize) -> Contour {
    let points: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let a = i as f64 * TAU / n as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect();
    let normals = points.iter().map(|p| [-p[0], -p[1]]).collect();
    Contour::new(points, normals).unwrap()
}

fn bscan(traces: Array2<f64>, contour: &Contour) -> BScan {
    let n = traces.nrows();
    BScan {
        traces,
        dt: DT,
        angles: (0..n).map(|i| i as f64 * TAU / n as f64).collect(),
        trace_positions: contour.points.clone(),
        t0_offset: 0.0,
    }
}

/// Sum of a few 1 GHz Ricker pulses per trace at random delays.
fn band_limited(seed: u64, n_traces: usize) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros((n_traces, N_SAMPLES));
    for mut row in out.rows_mut() {
        for _ in 0..3 {
            let t0 = rng.gen_range(1e-9..9e-9);
            let a = rng.gen_range(-1.0..1.0);
            for (k, v) in row.iter_mut().enumerate() {
                *v += a * ricker(k as f64 * DT, 1e9, t0);
            }
        }
    }
    out
}

fn params(spec: GridSpec) -> MigrationParams {
    MigrationParams {
        eps_medium: 6.0,
        image_spec: spec,
    }
}

#[test]
fn impulse_maps_to_its_travel_time_arc() {
    let contour = circle_contour(0.2, 60);
    let spec = GridSpec::centered([0.0, 0.0], 0.7, 128);
    let v = velocity_from_permittivity(6.0).unwrap();
    for (station, k_star) in [(7usize, 61usize), (33, 45), (50, 80)] {
        let mut traces = Array2::zeros((60, N_SAMPLES));
        traces[[station, k_star]] = 1.0;
        let img = kirchhoff_migrate(&bscan(traces, &contour), &contour, &params(spec)).unwrap();
        let (ix, iy) = img.argmax();
        let p = spec.cell_center(ix, iy);
        let q = contour.points[station];
        let radius = v * k_star as f64 * DT;
        let miss = ((p[0] - q[0]).hypot(p[1] - q[1]) - radius).abs();
        assert!(miss <= spec.spacing, "station {station}: {miss} m off the arc");
    }
}

#[test]
fn migration_superposes() {
    let contour = circle_contour(0.2, 60);
    let spec = GridSpec::centered([0.0, 0.0], 0.7, 128);
    let (a, b) = (band_limited(1, 60), band_limited(2, 60));
    let ia = kirchhoff_migrate(&bscan(a.clone(), &contour), &contour, &params(spec)).unwrap();
    let ib = kirchhoff_migrate(&bscan(b.clone(), &contour), &contour, &params(spec)).unwrap();
    let iab = kirchhoff_migrate(&bscan(&a + &b, &contour), &contour, &params(spec)).unwrap();
    let scale = iab.intensity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for ((x, y), z) in ia.intensity.iter().zip(ib.intensity.iter()).zip(iab.intensity.iter()) {
        assert!((x + y - z).abs() <= 1e-10 * scale);
    }
}

fn rolled(traces: &Array2<f64>, m: usize) -> Array2<f64> {
    let n = traces.nrows();
    Array2::from_shape_fn(traces.dim(), |(i, k)| traces[[(i + n - m) % n, k]])
}

fn bilinear(img: &Array2<f64>, spec: &GridSpec, p: [f64; 2]) -> f64 {
    let x = (p[0] - spec.origin[0]) / spec.spacing;
    let y = (p[1] - spec.origin[1]) / spec.spacing;
    let (i, j) = (x.floor() as usize, y.floor() as usize);
    let (fx, fy) = (x - i as f64, y - j as f64);
    img[[i, j]] * (1.0 - fx) * (1.0 - fy)
        + img[[i + 1, j]] * fx * (1.0 - fy)
        + img[[i, j + 1]] * (1.0 - fx) * fy
        + img[[i + 1, j + 1]] * fx * fy
}

#[test]
fn quarter_turn_rotates_image_exactly() {
    let contour = circle_contour(0.2, 60);
    let spec = GridSpec::centered([0.0, 0.0], 0.5, 128);
    let g = band_limited(3, 60);
    let base = kirchhoff_migrate(&bscan(g.clone(), &contour), &contour, &params(spec)).unwrap();
    let turned = kirchhoff_migrate(&bscan(rolled(&g, 15), &contour), &contour, &params(spec)).unwrap();
    let scale = base.intensity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for ((ix, iy), &v) in base.intensity.indexed_iter() {
        // (x, y) -> (-y, x) on a grid symmetric about the origin
        let w = turned.intensity[[spec.nx - 1 - iy, ix]];
        assert!((v - w).abs() <= 1e-9 * scale, "({ix},{iy}): {v} vs {w}");
    }
}

#[test]
fn station_rotation_rotates_image() {
    let contour = circle_contour(0.2, 60);
    let spec = GridSpec::centered([0.0, 0.0], 0.5, 128);
    let g = band_limited(4, 60);
    let m = 4;
    // the unrotated image is interpolated from a finer grid
    let fine = GridSpec::centered([0.0, 0.0], 0.5, 512);
    let base = kirchhoff_migrate(&bscan(g.clone(), &contour), &contour, &params(fine)).unwrap();
    let turned = kirchhoff_migrate(&bscan(rolled(&g, m), &contour), &contour, &params(spec)).unwrap();
    let angle = m as f64 * TAU / 60.0;
    let (mut err, mut norm) = (0.0, 0.0);
    for ((ix, iy), &w) in turned.intensity.indexed_iter() {
        let p = spec.cell_center(ix, iy);
        if p[0].hypot(p[1]) > 0.17 {
            continue;
        }
        let back = [
            p[0] * angle.cos() + p[1] * angle.sin(),
            -p[0] * angle.sin() + p[1] * angle.cos(),
        ];
        let expected = bilinear(&base.intensity, &fine, back);
        err += (w - expected).powi(2);
        norm += w * w;
    }
    let rel = (err / norm).sqrt();
    assert!(rel < 0.02, "relative RMS {rel}");
}

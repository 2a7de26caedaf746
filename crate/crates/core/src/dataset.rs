//! Synthetic dataset generation: one directory per sample plus a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::pipeline::{estimate_permittivity, prepare_migration, simulate_scene};
use crate::preprocess::{apply_path, NormStats};
use crate::scene::{defect_mask, sample_scene, GridSpec};
use crate::store::{
    write_ascan, write_bscan, write_grid, write_image, write_json, DatasetManifest, DatasetStats, Grid, GridShapes, Labels,
    SampleEntry, SampleFiles, MANIFEST_FILE, MANIFEST_SCHEMA_VERSION,
};

pub const SAMPLES_DIR: &str = "samples";

/// Largest failed fraction for which a run still counts as successful.
pub const MAX_FAILURE_FRACTION: f64 = 0.10;

pub fn sample_id(seed: u64) -> String {
    format!("s{seed:06}")
}

fn file_set(id: &str) -> SampleFiles {
    let dir = PathBuf::from(SAMPLES_DIR).join(id);
    SampleFiles {
        reference_ascan: dir.join("reference_ascan.f32g"),
        raw_bscan: dir.join("raw_bscan.f32g"),
        network_bscan: dir.join("network_bscan.f32g"),
        migration_bscan: dir.join("migration_bscan.f32g"),
        migrated_image: dir.join("migrated_image.f32g"),
        defect_mask: dir.join("defect_mask.f32g"),
    }
}

/// Grid shapes every sample of a run with `cfg` must have.
pub fn expected_shapes(cfg: &RunConfig) -> GridShapes {
    let n_samples = (cfg.sim.duration / cfg.sim.output_dt()).floor() as usize + 1;
    let bscan = [cfg.scan.n_traces, n_samples];
    let (ih, iw) = GridSpec::imaging_window([0.0, 0.0]).shape();
    GridShapes {
        reference_ascan: [1, n_samples],
        raw_bscan: bscan,
        network_bscan: cfg.preprocess.for_network.resize.map(|(h, w)| [h, w]).unwrap_or(bscan),
        migration_bscan: bscan,
        migrated_image: [ih, iw],
        defect_mask: [ih, iw],
    }
}

/// Generated sample plus the arrays needed for dataset statistics.
struct Generated {
    entry: SampleEntry,
    network: Array2<f64>,
    image: Array2<f64>,
}

fn generate_sample(seed: u64, cfg: &RunConfig, root: &Path) -> Result<Generated> {
    let id = sample_id(seed);
    let scene = sample_scene(seed, &cfg.scene)?;
    let sim = simulate_scene(&scene, &cfg.sim, &cfg.scan)?;
    let network_path = apply_path(&sim.raw, &sim.reference, &cfg.preprocess.for_network)?;
    let network = network_path.image.unwrap_or_else(|| network_path.bscan.traces.clone());
    let input = prepare_migration(&sim.raw, &sim.reference, &scene.outer_shape, &cfg.preprocess.for_migration)?;
    let estimate = estimate_permittivity(&scene, &input, &cfg.aft)?;
    let image = estimate.ssim.image.clone().expect("sweep keeps the selected image");
    let mask = defect_mask(&scene, &input.image_spec);

    let files = file_set(&id);
    let dir = root.join(SAMPLES_DIR).join(&id);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let profile = cfg.preprocess.name.as_str();
    write_ascan(root.join(&files.reference_ascan), &sim.reference)?;
    write_bscan(root.join(&files.raw_bscan), &sim.raw, None)?;
    write_grid(root.join(&files.network_bscan), &Grid::from_array2(&network))?;
    write_bscan(root.join(&files.migration_bscan), &input.bscan, Some(profile))?;
    write_image(root.join(&files.migrated_image), &image)?;
    write_grid(root.join(&files.defect_mask), &Grid::from_mask(&mask))?;

    let entry = SampleEntry {
        id,
        seed,
        labels: Labels {
            eps_defect: scene.defect_eps,
            eps_medium_ssim: estimate.ssim.eps_selected,
            eps_medium_entropy: estimate.entropy.eps_selected,
            eps_rms: estimate.eps_rms,
        },
        scene,
        files,
        preprocess_profile: profile.to_owned(),
        ssim_curve: estimate.ssim.score_curve,
        entropy_curve: estimate.entropy.score_curve,
    };
    Ok(Generated {
        entry,
        network,
        image: image.intensity,
    })
}

#[derive(Debug)]
pub struct GenerationOutcome {
    pub manifest: DatasetManifest,
    pub manifest_path: PathBuf,
    pub failures: Vec<(u64, Error)>,
}

impl GenerationOutcome {
    pub fn failure_fraction(&self) -> f64 {
        let total = self.manifest.samples.len() + self.failures.len();
        if total == 0 {
            0.0
        } else {
            self.failures.len() as f64 / total as f64
        }
    }

    pub fn succeeded(&self) -> bool {
        !self.manifest.samples.is_empty() && self.failure_fraction() <= MAX_FAILURE_FRACTION
    }
}

/// Generates samples for seeds `seed0..seed0 + n` under `root` and writes the
/// manifest. Failing samples are reported, not fatal.
pub fn generate_dataset(cfg: &RunConfig, n: usize, seed0: u64, root: &Path) -> Result<GenerationOutcome> {
    cfg.validate()?;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let results: Vec<(u64, Result<Generated>)> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let seed = seed0 + k;
            (seed, generate_sample(seed, cfg, root))
        })
        .collect();
    let mut generated = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(g) => generated.push(g),
            Err(e) => failures.push((seed, e)),
        }
    }
    let grid_stats = |f: fn(&Generated) -> &Array2<f64>| {
        NormStats::from_values(generated.iter().flat_map(|g| f(g).iter().copied())).ok()
    };
    let stats = DatasetStats {
        network_bscan: grid_stats(|g| &g.network),
        migrated_image: grid_stats(|g| &g.image),
        eps_defect: NormStats::new(cfg.scene.defect_eps.min, cfg.scene.defect_eps.max).ok(),
        eps_medium: NormStats::new(cfg.aft.sweep.eps_min, cfg.aft.sweep.eps_max).ok(),
    };
    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        shapes: expected_shapes(cfg),
        sweep: cfg.aft.sweep,
        stats,
        samples: generated.into_iter().map(|g| g.entry).collect(),
    };
    manifest.validate(root)?;
    let manifest_path = root.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest)?;
    Ok(GenerationOutcome {
        manifest,
        manifest_path,
        failures,
    })
}

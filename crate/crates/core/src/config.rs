//! Run configuration loaded from one JSON file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdtd::{ScanConfig, SimConfig};
use crate::pipeline::AftConfig;
use crate::preprocess::PreprocessProfile;
use crate::scene::SceneRanges;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneRanges,
    pub sim: SimConfig,
    pub scan: ScanConfig,
    pub preprocess: PreprocessProfile,
    pub aft: AftConfig,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.sim.validate()?;
        self.scan.validate()?;
        self.preprocess.validate()?;
        self.aft.sweep.validate()?;
        if !(self.aft.ssim.k1 > 0.0 && self.aft.ssim.k2 > 0.0 && self.aft.ssim.dynamic_range > 0.0) {
            return Err(Error::Parameter("SSIM constants must be positive".into()));
        }
        if self.aft.ring_thickness_px == 0 {
            return Err(Error::Parameter("ring thickness must be at least 1 pixel".into()));
        }
        Ok(())
    }

    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Manifest(format!("invalid run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn partial_and_invalid_configs() {
        let cfg = RunConfig::from_json(r#"{"scan": {"n_traces": 30}, "sim": {"duration": 5e-9}}"#).unwrap();
        assert_eq!(cfg.scan.n_traces, 30);
        assert_eq!(cfg.sim.duration, 5e-9);
        assert_eq!(cfg.sim.spacing, SimConfig::default().spacing);
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"sim": {"courant_factor": 1.5}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"aft": {"sweep": {"eps_min": 5, "eps_max": 4, "step": 1}}}"#).is_err());
    }

    proptest! {
        #[test]
        fn parser_never_panics(text in "\\PC{0,200}") {
            let _ = RunConfig::from_json(&text);
        }

        #[test]
        fn parser_never_panics_on_json_shapes(
            n in any::<i64>(), x in any::<f64>(), key in "[a-z_]{1,12}",
        ) {
            for text in [
                format!(r#"{{"scan": {{"n_traces": {n}}}}}"#),
                format!(r#"{{"sim": {{"spacing": {x:e}}}}}"#),
                format!(r#"{{"aft": {{"sweep": {{"eps_min": {x:e}, "eps_max": 1, "step": {x:e}}}}}}}"#),
                format!(r#"{{"{key}": {n}}}"#),
            ] {
                let _ = RunConfig::from_json(&text);
            }
        }
    }
}

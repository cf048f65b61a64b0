use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundarygen::{CanvasSpec, CarveSpec, LabelMapSpec};
use crate::error::{Error, Result};
use crate::noiselib::NoiseStackSpec;
use crate::promptgen::PromptDefaults;
use crate::scene::SceneParams;
use crate::shapegen::ShapeSamplingSpec;

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
pub struct Interval<T: Copy> {
    pub lo: T,
    pub hi: T,
}

impl<T: Copy> Interval<T> {
    pub const fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }
}

impl<T: Copy> From<[T; 2]> for Interval<T> {
    fn from([lo, hi]: [T; 2]) -> Self {
        Self { lo, hi }
    }
}

impl<T: Copy> From<Interval<T>> for [T; 2] {
    fn from(i: Interval<T>) -> Self {
        [i.lo, i.hi]
    }
}

impl<T: Copy + fmt::Display> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Interval<f64> {
    /// Uniform draw; a degenerate interval returns `lo` without touching the RNG.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.lo >= self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_within(&self, lo: f64, hi: f64) -> bool {
        self.lo <= self.hi && self.lo >= lo && self.hi <= hi
    }
}

impl Interval<u32> {
    pub fn sample(&self, rng: &mut impl Rng) -> u32 {
        if self.lo >= self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

/// Complete generation configuration. Every field has a default, so an empty
/// JSON object is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub image_width: u32,
    pub image_height: u32,
    pub epoch_size: u64,
    /// Probability that a sample comes from the boundary-aware generator.
    pub module_mix: f64,
    pub master_seed: u64,
    pub shape: ShapeSamplingSpec,
    pub scene: SceneParams,
    pub noise: NoiseStackSpec,
    pub label_map: LabelMapSpec,
    pub carve: CarveSpec,
    pub canvas: CanvasSpec,
    pub prompts: PromptDefaults,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            image_width: 1024,
            image_height: 1024,
            epoch_size: 10_000,
            module_mix: 0.5,
            master_seed: 0,
            shape: ShapeSamplingSpec::default(),
            scene: SceneParams::default(),
            noise: NoiseStackSpec::default(),
            label_map: LabelMapSpec::default(),
            carve: CarveSpec::default(),
            canvas: CanvasSpec::default(),
            prompts: PromptDefaults::default(),
        }
    }
}

impl GenConfig {
    /// Default config at a different resolution.
    pub fn with_size(width: u32, height: u32) -> Self {
        Self {
            image_width: width,
            image_height: height,
            ..Self::default()
        }
    }

    pub fn width(&self) -> usize {
        self.image_width as usize
    }

    pub fn height(&self) -> usize {
        self.image_height as usize
    }

    pub fn validate(&self) -> Result<()> {
        const S: &str = "GenConfig";
        if self.image_width < 16 || self.image_height < 16 {
            return Err(Error::validation(S, "image_width", "images must be at least 16x16"));
        }
        if self.image_width > 16_384 || self.image_height > 16_384 {
            return Err(Error::validation(S, "image_width", "images must be at most 16384x16384"));
        }
        if self.epoch_size < 1 {
            return Err(Error::validation(S, "epoch_size", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.module_mix) {
            return Err(Error::validation(S, "module_mix", format!("{} must lie in [0, 1]", self.module_mix)));
        }
        self.shape.validate()?;
        let min_dim = self.image_width.min(self.image_height) as f64;
        if self.shape.radius_range.hi * min_dim < 4.0 {
            return Err(Error::validation(
                "ShapeSamplingSpec",
                "radius_range",
                format!("upper radius {} x {min_dim} px is below 4 px", self.shape.radius_range.hi),
            ));
        }
        self.scene.validate()?;
        self.noise.validate()?;
        self.label_map.validate()?;
        self.carve.validate()?;
        self.canvas.validate()?;
        self.prompts.validate()?;
        Ok(())
    }

    /// Lowercase hex SHA-256 of the canonical JSON serialization (struct field
    /// order, no whitespace).
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Parses a JSON document, applies defaults and validates. Blank input
    /// yields the defaults.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: GenConfig = if s.trim().is_empty() {
            GenConfig::default()
        } else {
            serde_json::from_str(s)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads and validates a JSON config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<GenConfig> {
    let text = std::fs::read_to_string(path)?;
    GenConfig::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        for doc in ["", "  \n", "{}"] {
            let cfg = GenConfig::from_json_str(doc).unwrap();
            assert_eq!((cfg.image_width, cfg.image_height), (1024, 1024));
            assert_eq!(cfg.epoch_size, 10_000);
            assert_eq!(cfg.module_mix, 0.5);
        }
    }

    #[test]
    fn partial_document_keeps_other_defaults() {
        let cfg = GenConfig::from_json_str(r#"{"image_width": 256, "canvas": {"delta_range": [0.05, 0.06]}}"#).unwrap();
        assert_eq!(cfg.image_width, 256);
        assert_eq!(cfg.image_height, 1024);
        assert_eq!(cfg.canvas.delta_range, Interval::new(0.05, 0.06));
        assert_eq!(cfg.canvas.limit1_range, Interval::new(0.1, 0.9));
    }

    #[test]
    fn limit1_bound_violation_names_canvas_spec() {
        let err = GenConfig::from_json_str(r#"{"canvas": {"limit1_range": [0.1, 0.95]}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("CanvasSpec") && msg.contains("limit1_range"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = GenConfig::from_json_str(r#"{"image_widht": 5}"#).unwrap_err();
        assert!(err.to_string().contains("image_widht"));
        let err = GenConfig::from_json_str(r#"{"noise": {"sigma": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("sigma"));
    }

    #[test]
    fn round_trip() {
        let mut cfg = GenConfig::with_size(200, 120);
        cfg.master_seed = u64::MAX;
        cfg.noise.count_range = Interval::new(0, 2);
        let text = cfg.to_json_string();
        let back = GenConfig::from_json_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn hash_tracks_content() {
        let a = GenConfig::default();
        let mut b = a.clone();
        b.master_seed = 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn other_validation_errors() {
        assert!(GenConfig::from_json_str(r#"{"module_mix": 1.5}"#).is_err());
        assert!(GenConfig::from_json_str(r#"{"epoch_size": 0}"#).is_err());
        assert!(GenConfig::from_json_str(r#"{"label_map": {"cluster_count_range": [1, 5]}}"#).is_err());
        assert!(GenConfig::from_json_str(r#"{"image_width": 8}"#).is_err());
        assert!(matches!(GenConfig::from_json_str("{"), Err(Error::ConfigParse(_))));
    }
}

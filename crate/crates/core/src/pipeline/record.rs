use std::ops::Range;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::seed::{derive_seed, validation_seed};
use super::{GenConfig, StageTimings};
use crate::boundarygen::{compose_boundary_scene_timed, BoundarySceneMeta, BoundarySpecs};
use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, LabelMap, ScalarImage};
use crate::par::{map_range, Execution};
use crate::promptgen::{sample_prompts, PromptSet};
use crate::scene::{compose_shape_scene_timed, ShapeSceneMeta};
use crate::SampleRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModuleKind {
    Shape,
    Boundary,
}

impl ModuleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Shape => "shape",
            Self::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "module", rename_all = "lowercase")]
pub enum ModuleMeta {
    Shape(ShapeSceneMeta),
    Boundary(BoundarySceneMeta),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub master_seed: u64,
    pub sample_index: u64,
    pub split: Split,
    /// Seed of the per-sample RNG, derived from `(master_seed, sample_index)`.
    pub seed: u64,
    pub config_hash: String,
    pub scene: ModuleMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample_index: u64,
    pub module_kind: ModuleKind,
    pub image: ScalarImage,
    /// Disjoint instances; label `k` is instance `k - 1`.
    pub instances: LabelMap,
    /// 0-based index of the prompting target.
    pub target_index: usize,
    pub prompts: Option<PromptSet>,
    pub meta: SampleMeta,
}

impl SampleRecord {
    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn instance_count(&self) -> usize {
        self.instances.max_label() as usize
    }

    pub fn instance_masks(&self) -> Vec<BinaryMask> {
        self.instances.masks()
    }

    pub fn target_mask(&self) -> BinaryMask {
        self.instances.mask_of(self.target_index as u32 + 1)
    }
}

/// Training sample `sample_index`; a pure function of `(cfg, sample_index)`.
pub fn generate_sample(cfg: &GenConfig, sample_index: u64) -> Result<SampleRecord> {
    generate_sample_timed(cfg, sample_index, &mut StageTimings::default())
}

pub fn generate_sample_timed(cfg: &GenConfig, sample_index: u64, timings: &mut StageTimings) -> Result<SampleRecord> {
    let seed = derive_seed(cfg.master_seed, sample_index);
    generate_with_seed(cfg, sample_index, seed, Split::Train, timings)
}

/// Sample `sample_index` of the validation stream.
pub fn generate_validation_sample(cfg: &GenConfig, sample_index: u64) -> Result<SampleRecord> {
    let seed = validation_seed(cfg.master_seed, sample_index);
    generate_with_seed(cfg, sample_index, seed, Split::Validation, &mut StageTimings::default())
}

/// Rebuilds a record from its metadata. Fails with a config mismatch if `cfg`
/// is not the config the record was generated with.
pub fn regenerate(cfg: &GenConfig, meta: &SampleMeta) -> Result<SampleRecord> {
    let hash = cfg.config_hash();
    if hash != meta.config_hash {
        return Err(Error::ConfigMismatch { dir: Default::default(), existing: meta.config_hash.clone(), current: hash });
    }
    let mut cfg = cfg.clone();
    cfg.master_seed = meta.master_seed;
    generate_with_seed(&cfg, meta.sample_index, meta.seed, meta.split, &mut StageTimings::default())
}

pub fn generate_with_seed(cfg: &GenConfig, sample_index: u64, seed: u64, split: Split, timings: &mut StageTimings) -> Result<SampleRecord> {
    build(cfg, sample_index, seed, split, timings).map_err(|e| Error::Sample {
        master_seed: cfg.master_seed,
        sample_index,
        source: Box::new(e),
    })
}

fn build(cfg: &GenConfig, sample_index: u64, seed: u64, split: Split, timings: &mut StageTimings) -> Result<SampleRecord> {
    let (w, h) = (cfg.width(), cfg.height());
    let mut rng = SampleRng::seed_from_u64(seed);
    let module_kind = if rng.random_bool(cfg.module_mix) { ModuleKind::Boundary } else { ModuleKind::Shape };

    let (image, instances, scene) = match module_kind {
        ModuleKind::Shape => {
            let s = compose_shape_scene_timed(&mut rng, &cfg.scene, &cfg.shape, &cfg.noise, w, h, timings)?;
            (s.image, s.instances, ModuleMeta::Shape(s.meta))
        }
        ModuleKind::Boundary => {
            let specs = BoundarySpecs { label_map: cfg.label_map.clone(), carve: cfg.carve.clone(), canvas: cfg.canvas.clone() };
            let s = compose_boundary_scene_timed(&mut rng, &specs, &cfg.noise, w, h, timings)?;
            (s.image, s.instances, ModuleMeta::Boundary(s.meta))
        }
    };

    let count = instances.max_label() as usize;
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    let target_index = rng.random_range(0..count);

    let prompts = if cfg.prompts.enabled {
        let config = cfg.prompts.configs[rng.random_range(0..cfg.prompts.configs.len())];
        let dilation = cfg.prompts.dilation(w, h);
        let target = instances.mask_of(target_index as u32 + 1);
        Some(timings.time("prompts", || sample_prompts(&target, config, &mut rng, dilation))?)
    } else {
        None
    };

    Ok(SampleRecord {
        sample_index,
        module_kind,
        image,
        instances,
        target_index,
        prompts,
        meta: SampleMeta {
            master_seed: cfg.master_seed,
            sample_index,
            split,
            seed,
            config_hash: cfg.config_hash(),
            scene,
        },
    })
}

/// Generates a contiguous index range, in index order.
pub fn generate_batch(cfg: &GenConfig, indices: Range<u64>, exec: Execution) -> Result<Vec<SampleRecord>> {
    let start = indices.start;
    let n = indices.end.saturating_sub(start) as usize;
    map_range(n, exec, |k| generate_sample(cfg, start + k as u64)).into_iter().collect()
}

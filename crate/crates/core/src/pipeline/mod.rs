//! Configuration, deterministic per-index sample generation, and shard export.

mod config;
mod export;
mod record;
mod seed;

use std::time::{Duration, Instant};

use serde::Serialize;

pub use config::{load_config, GenConfig, Interval};
pub use export::{
    export_shard, quantize_u16, read_image_png, read_manifest, read_mask_png, verify_shard, FileEntry, SampleSidecar, ShardManifest,
    MANIFEST_FORMAT, MANIFEST_NAME,
};
pub use record::{
    generate_batch, generate_sample, generate_sample_timed, generate_validation_sample, generate_with_seed, regenerate, ModuleKind,
    ModuleMeta, SampleMeta, SampleRecord, Split,
};
pub use seed::{derive_seed, validation_seed, VALIDATION_SEED_OFFSET};

/// Accumulated wall time per named generation stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageTimings {
    stages: Vec<(&'static str, Duration)>,
}

impl StageTimings {
    pub fn time<T>(&mut self, name: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.add(name, start.elapsed());
        out
    }

    pub fn add(&mut self, name: &'static str, d: Duration) {
        match self.stages.iter_mut().find(|(n, _)| *n == name) {
            Some((_, t)) => *t += d,
            None => self.stages.push((name, d)),
        }
    }

    pub fn merge(&mut self, other: &StageTimings) {
        for &(n, d) in &other.stages {
            self.add(n, d);
        }
    }

    /// Stages in first-seen order.
    pub fn stages(&self) -> &[(&'static str, Duration)] {
        &self.stages
    }

    pub fn total(&self) -> Duration {
        self.stages.iter().map(|(_, d)| *d).sum()
    }
}

//! Deterministic generator of synthetic segmentation training samples.
//!
//! Two scene generators feed a common pipeline:
//!
//! * [`scene`] superimposes random closed Bezier shapes ([`shapegen`]) on a black
//!   canvas or a circular phantom, modulating contrast per shape and texturing the
//!   result with the stochastic models in [`noiselib`].
//! * [`boundarygen`] builds a multi-cluster label map, erodes a random subset of
//!   clusters to carve thin shared boundaries, and paints the resulting binary mask
//!   from a randomly ranged canvas.
//!
//! [`promptgen`] places positive and negative clicks on a target instance,
//! [`pipeline`] ties everything to a master seed and exports shards, and [`stream`]
//! serves samples over a small length-prefixed TCP protocol. [`metrics`] holds the
//! Dice coefficient and the paired t-test used to evaluate predictions.
//!
//! Every generator is a pure function of its inputs and an explicitly passed RNG,
//! so samples can be produced in parallel (feature `parallel`, on by default).

pub mod boundarygen;
pub mod error;
pub mod imgcore;
pub mod metrics;
pub mod noiselib;
pub mod par;
pub mod pipeline;
pub mod promptgen;
pub mod scene;
pub mod shapegen;
pub mod stream;

pub use error::{Error, Result};
pub use imgcore::{BinaryMask, LabelMap, Point, PointF, ScalarImage, StructuringElement};
pub use pipeline::{derive_seed, generate_sample, GenConfig, SampleRecord};

/// RNG used by every generator. ChaCha8 gives a stream that is stable across
/// platforms and crate releases, which the export checksums depend on.
pub type SampleRng = rand_chacha::ChaCha8Rng;

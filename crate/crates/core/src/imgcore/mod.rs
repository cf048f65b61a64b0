//! Raster primitives shared by the generators: image and mask containers,
//! binary morphology, Gaussian blur, polygon fill and a few geometric queries.
//!
//! Pixel `(row i, col j)` has its geometric center at `(x, y) = (j + 0.5, i + 0.5)`.
//! Integer [`Point`]s address pixels by index (`x` = column, `y` = row).

mod blur;
mod components;
mod image;
mod morph;
mod raster;

pub use blur::{blur_1d, gaussian_blur, gaussian_kernel, reflect_index};
pub use components::connected_components;
pub use image::{BinaryMask, LabelMap, Point, PointF, ScalarImage};
pub use morph::{dilate, erode, StructuringElement};
pub use raster::{centroid, fill_polygon};

//! Optic nerve head analysis downstream of OCT segmentation.
//!
//! The crate covers the numeric half of an ODD / papilledema / healthy
//! discrimination pipeline:
//!
//! * [`volume`]: voxel grids, the `.meta` + `.raw` file pair, B-scan resampling.
//! * [`compensation`]: per-A-scan adaptive attenuation compensation.
//! * [`metrics`]: Drusen Score and Prelamina Swelling Score from 9-class labels.
//! * [`forest`]: a CART random forest over the two scores.
//! * [`evaluation`]: Dice/Jaccard, one-vs-all ROC AUC, subject-grouped splits and
//!   k-fold cross-validation.
//! * [`phantom`]: synthetic ONH label volumes with closed-form tissue volumes and
//!   an attenuation forward model.
//! * [`simulation`]: the three-cluster score simulation used by `repro`.

pub mod compensation;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod forest;
pub mod metrics;
pub mod phantom;
pub mod seed;
pub mod simulation;
pub mod volume;

pub use error::{Error, Result};
pub use features::{Diagnosis, EyeFeatures};
pub use forest::{ForestModel, ForestParams};
pub use volume::{IntensityVolume, LabelVolume, TissueClass, Volume, VoxelSpacing};

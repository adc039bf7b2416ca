//! Set-embedding seismic data ingestion at desk scale.
//!
//! The crate covers the full pipeline: procedural velocity models, a 2D
//! acoustic finite-difference forward solver, geometry-aware trace storage
//! with spatial context queries, a permutation-invariant set-embedding
//! network trained with Adam on (context, velocity-block) pairs, image
//! metrics, and block-wise stitching of predictions into full models.

pub mod error;
pub mod grid;
pub mod io;
pub mod pipeline;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod seed;
pub mod stitch;
pub mod survey;
pub mod train;
pub mod velocity;
pub mod wavesim;

pub use error::{Error, Result};
pub use grid::Grid;
pub use metrics::MetricReport;
pub use model::{SesdiParams, SesdiSpec};
pub use survey::{Context, GeometryAwareTrace, Survey};
pub use velocity::VelocityModel;
pub use wavesim::{ShotRecord, ShotSpec, SimConfig};

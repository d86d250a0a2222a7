//! Take-on dataset construction, pose-based dribble features and
//! dribble-success models.

pub mod config;
pub mod explain;
pub mod features;
pub mod features2d;
pub mod features3d;
pub mod ingest;
pub mod kinematics;
pub mod model;
pub mod pitch;
pub mod preprocess;
pub mod segment;
pub mod skeleton;
pub mod synth;
pub mod types;

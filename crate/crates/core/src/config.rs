//! Pipeline configuration. Every section falls back to its defaults, so a
//! config file only needs the keys it overrides.

use serde::{Deserialize, Serialize};

use crate::pitch::Pitch;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub pitch: Pitch,
    pub preprocess: PreprocessConfig,
    pub segment: SegmentConfig,
    pub kinematics: KinematicsConfig,
    pub pressure: PressureConfig,
    pub touch: TouchConfig,
    pub ball_control: BallControlConfig,
    pub model: ModelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub smoothing_window_frames: usize,
    pub max_fill_gap_frames: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            smoothing_window_frames: 5,
            max_fill_gap_frames: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Summed centroid displacement over the window.
    PathLength,
    /// Straight-line distance between first and last centroid.
    Displacement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub min_distance_m: f64,
    pub min_duration_s: f64,
    pub min_mean_ball_speed: f64,
    pub max_ball_speed: f64,
    pub distance_mode: DistanceMode,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            min_distance_m: 2.0,
            min_duration_s: 2.0,
            min_mean_ball_speed: 1.5,
            max_ball_speed: 11.0,
            distance_mode: DistanceMode::PathLength,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicsConfig {
    pub a_thresh_mps2: f64,
    pub min_heading_speed: f64,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        KinematicsConfig {
            a_thresh_mps2: 3.0,
            min_heading_speed: 0.1,
        }
    }
}

/// Direction-dependent pressure zone around the attacker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureConfig {
    pub d_front_m: f64,
    pub d_back_m: f64,
    pub q: f64,
    pub z_exp: f64,
}

impl Default for PressureConfig {
    fn default() -> Self {
        PressureConfig {
            d_front_m: 9.0,
            d_back_m: 3.0,
            q: 1.75,
            z_exp: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TouchConfig {
    pub threshold_m: f64,
    pub refractory_s: f64,
}

impl Default for TouchConfig {
    fn default() -> Self {
        TouchConfig {
            threshold_m: 0.15,
            refractory_s: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallControlConfig {
    pub alpha: f64,
    pub pressure_floor: f64,
}

impl Default for BallControlConfig {
    fn default() -> Self {
        BallControlConfig {
            alpha: 0.1,
            pressure_floor: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// L2 strength; `None` means `1 / N_train`.
    pub lambda: Option<f64>,
    pub max_epochs: usize,
    pub tol: f64,
    pub seed: u64,
    pub cv_folds: usize,
    pub threshold: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            lambda: None,
            max_epochs: 1000,
            tol: 1e-6,
            seed: 0,
            cv_folds: 5,
            threshold: 0.5,
        }
    }
}

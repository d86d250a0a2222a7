//! Speed and acceleration summaries and the jerk-based turn detector.

use thiserror::Error;

use crate::config::KinematicsConfig;
use crate::pitch::angle_between_headings;
use crate::preprocess::SmoothedTrack;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("empty window")]
    EmptyWindow,
    #[error("player is stationary at sample {index}")]
    Stationary { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanMax {
    pub mean: f64,
    pub max: f64,
}

impl MeanMax {
    /// Time-average and maximum of uniformly sampled values.
    pub fn of(values: &[f64]) -> Option<MeanMax> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(MeanMax { mean, max })
    }
}

/// Mean and peak planar speed.
pub fn speed_stats(track: &SmoothedTrack) -> Result<MeanMax, KinematicsError> {
    MeanMax::of(&track.planar_speeds()).ok_or(KinematicsError::EmptyWindow)
}

/// Mean and peak planar acceleration magnitude.
pub fn accel_stats(track: &SmoothedTrack) -> Result<MeanMax, KinematicsError> {
    let acc: Vec<f64> = (0..track.len()).map(|i| track.planar_acceleration(i)).collect();
    MeanMax::of(&acc).ok_or(KinematicsError::EmptyWindow)
}

/// Movement direction in degrees, `(-180, 180]`.
pub fn heading(track: &SmoothedTrack, i: usize, min_speed: f64) -> Result<f64, KinematicsError> {
    let v = track.velocity2(i);
    if v.norm() <= min_speed {
        return Err(KinematicsError::Stationary { index: i });
    }
    let deg = v.y.atan2(v.x).to_degrees();
    Ok(if deg <= -180.0 { deg + 360.0 } else { deg })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurnEvent {
    pub start_index: usize,
    pub end_index: usize,
    /// Seconds from the first sample of the track.
    pub t_start: f64,
    pub t_end: f64,
    /// Heading change in degrees, `[0, 180]`.
    pub delta_deg: f64,
}

/// Turns are runs where the acceleration magnitude exceeds the threshold. A
/// turn starts at the first sample of the run with rising acceleration and
/// ends at the last sample with falling acceleration.
pub fn detect_turns(track: &SmoothedTrack, cfg: &KinematicsConfig) -> Vec<TurnEvent> {
    let n = track.len();
    let mut turns = Vec::new();
    let mut i = 0;
    while i < n {
        if track.planar_acceleration(i) <= cfg.a_thresh_mps2 {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < n && track.planar_acceleration(i) > cfg.a_thresh_mps2 {
            i += 1;
        }
        let run = run_start..i;
        let start = run.clone().find(|&k| track.planar_acceleration_rate(k) > 0.0);
        let end = run.clone().rev().find(|&k| track.planar_acceleration_rate(k) < 0.0);
        let (Some(s), Some(e)) = (start, end) else { continue };
        if s >= e {
            continue;
        }
        let (Ok(h0), Ok(h1)) = (
            heading(track, s, cfg.min_heading_speed),
            heading(track, e, cfg.min_heading_speed),
        ) else {
            continue;
        };
        turns.push(TurnEvent {
            start_index: s,
            end_index: e,
            t_start: s as f64 * track.dt,
            t_end: e as f64 * track.dt,
            delta_deg: angle_between_headings(h0, h1),
        });
    }
    turns
}

/// Largest heading change over the detected turns, 0 without turns.
pub fn max_direction_change(turns: &[TurnEvent]) -> f64 {
    turns.iter().map(|t| t.delta_deg).fold(0.0, f64::max)
}

/// Largest heading change between consecutive samples where both headings are defined.
pub fn max_frame_heading_change(track: &SmoothedTrack, min_speed: f64) -> f64 {
    let headings: Vec<Option<f64>> = (0..track.len())
        .map(|i| heading(track, i, min_speed).ok())
        .collect();
    headings
        .windows(2)
        .filter_map(|w| Some(angle_between_headings(w[0]?, w[1]?)))
        .fold(0.0, f64::max)
}

//! Take-on filtering, primary defenders and labels.
//!
//! Each TAKE_ON is cut to its window, reflected so the attacker plays toward
//! `+x`, gap-filled and smoothed, then checked against the four dataset rules
//! in order. Passing events become [`PreparedDribble`]s carrying everything
//! feature extraction needs.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Config, DistanceMode, SegmentConfig};
use crate::features2d::dist_to_goal;
use crate::ingest::{link_event_to_frames, take_on_window, Direction, MatchBundle};
use crate::pitch::{dist2d, Pitch, Vec2, Vec3};
use crate::preprocess::{
    differentiate_planar, differentiate_spatial, fill_points2, fill_points3, fill_poses,
    PreprocessError, SmoothedTrack,
};
use crate::skeleton::Pose;
use crate::types::{DribbleSegment, Event, Frame, PlayerId, CADENCE_TOL, FRAME_DT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Attacker covered too little ground or the window is too short.
    Rule1DistanceDuration,
    /// Mean ball speed at or below the minimum.
    Rule2SlowBall,
    /// Ball speed peak at or above the maximum.
    Rule3BallSpeedSpike,
    /// Attacker did not end closer to goal than they started.
    Rule4NoProgress,
    MissingQualifier,
    EmptyWindow,
    Discontinuous,
    MissingTrack,
    GapTooLong,
    InsufficientKnots,
    TrackTooShort,
    NoOpponents,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Rule1DistanceDuration => "rule1_distance_duration",
            RejectReason::Rule2SlowBall => "rule2_slow_ball",
            RejectReason::Rule3BallSpeedSpike => "rule3_ball_speed_spike",
            RejectReason::Rule4NoProgress => "rule4_no_progress",
            RejectReason::MissingQualifier => "missing_qualifier",
            RejectReason::EmptyWindow => "empty_window",
            RejectReason::Discontinuous => "discontinuous",
            RejectReason::MissingTrack => "missing_track",
            RejectReason::GapTooLong => "gap_too_long",
            RejectReason::InsufficientKnots => "insufficient_knots",
            RejectReason::TrackTooShort => "track_too_short",
            RejectReason::NoOpponents => "no_opponents",
        }
    }

    /// Number of the dataset rule, `None` for data problems.
    pub fn rule(self) -> Option<u8> {
        match self {
            RejectReason::Rule1DistanceDuration => Some(1),
            RejectReason::Rule2SlowBall => Some(2),
            RejectReason::Rule3BallSpeedSpike => Some(3),
            RejectReason::Rule4NoProgress => Some(4),
            _ => None,
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<PreprocessError> for RejectReason {
    fn from(e: PreprocessError) -> Self {
        match e {
            PreprocessError::GapTooLong { .. } => RejectReason::GapTooLong,
            PreprocessError::InsufficientKnots { .. } => RejectReason::InsufficientKnots,
            PreprocessError::NoValidSamples => RejectReason::MissingTrack,
            PreprocessError::TrackTooShort { .. } => RejectReason::TrackTooShort,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SegmentError {
    #[error("event {0} has no success qualifier")]
    MissingQualifier(u64),
    #[error("no opponent on the pitch at the final frame")]
    NoOpponents,
}

pub fn label_success(event: &Event) -> Result<bool, SegmentError> {
    event.success.ok_or(SegmentError::MissingQualifier(event.event_id))
}

/// Opponent nearest to the attacker; ties go to the lowest id.
pub fn assign_primary_defender(
    attacker: Vec2,
    opponents: impl IntoIterator<Item = (PlayerId, Vec2)>,
) -> Result<PlayerId, SegmentError> {
    opponents
        .into_iter()
        .map(|(id, c)| (dist2d(attacker, c), id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
        .ok_or(SegmentError::NoOpponents)
}

pub fn path_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| dist2d(w[0], w[1])).sum()
}

/// Quantities the four rules are evaluated on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleInputs {
    pub distance: f64,
    pub duration: f64,
    pub mean_ball_speed: f64,
    pub max_ball_speed: f64,
    pub start_goal_distance: f64,
    pub end_goal_distance: f64,
}

/// First violated rule, or `None` when the take-on passes.
pub fn first_violation(r: &RuleInputs, cfg: &SegmentConfig) -> Option<RejectReason> {
    if !(r.distance >= cfg.min_distance_m && r.duration >= cfg.min_duration_s - CADENCE_TOL) {
        Some(RejectReason::Rule1DistanceDuration)
    } else if !(r.mean_ball_speed > cfg.min_mean_ball_speed) {
        Some(RejectReason::Rule2SlowBall)
    } else if !(r.max_ball_speed < cfg.max_ball_speed) {
        Some(RejectReason::Rule3BallSpeedSpike)
    } else if !(r.end_goal_distance < r.start_goal_distance) {
        Some(RejectReason::Rule4NoProgress)
    } else {
        None
    }
}

/// Smoothed attacker and ball tracks are enough to evaluate the rules.
pub fn filter_take_on(
    attacker: &[Vec2],
    ball: &SmoothedTrack,
    pitch: &Pitch,
    cfg: &SegmentConfig,
) -> Result<(), RejectReason> {
    let inputs = rule_inputs(attacker, ball, pitch, cfg);
    match first_violation(&inputs, cfg) {
        Some(r) => Err(r),
        None => Ok(()),
    }
}

fn rule_inputs(attacker: &[Vec2], ball: &SmoothedTrack, pitch: &Pitch, cfg: &SegmentConfig) -> RuleInputs {
    let (first, last) = (attacker[0], attacker[attacker.len() - 1]);
    let speeds = ball.speeds();
    RuleInputs {
        distance: match cfg.distance_mode {
            DistanceMode::PathLength => path_length(attacker),
            DistanceMode::Displacement => dist2d(first, last),
        },
        duration: (attacker.len() - 1) as f64 * ball.dt,
        mean_ball_speed: speeds.iter().sum::<f64>() / speeds.len() as f64,
        max_ball_speed: speeds.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        start_goal_distance: dist_to_goal(first, pitch),
        end_goal_distance: dist_to_goal(last, pitch),
    }
}

/// One player's gap-filled window.
#[derive(Debug, Clone)]
pub struct PlayerTrack {
    pub id: PlayerId,
    pub centroids: Vec<Vec2>,
    pub poses: Vec<Pose>,
    pub kinematics: SmoothedTrack,
}

/// A passing take-on with every track the features need, in the attacker's
/// `+x` frame.
#[derive(Debug, Clone)]
pub struct PreparedDribble {
    pub segment: DribbleSegment,
    pub pitch: Pitch,
    pub attacker: PlayerTrack,
    pub defender: PlayerTrack,
    pub ball: Vec<Vec3>,
    pub ball_kinematics: SmoothedTrack,
    /// Raw centroids of the other opponents present in each frame.
    pub other_opponents: Vec<Vec<Vec2>>,
}

impl PreparedDribble {
    pub fn len(&self) -> usize {
        self.ball.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ball.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.ball_kinematics.dt
    }

    /// Centroids of every opponent in frame `k`, primary defender first.
    pub fn opponents_at(&self, k: usize) -> impl Iterator<Item = Vec2> + '_ {
        std::iter::once(self.defender.centroids[k]).chain(self.other_opponents[k].iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventVerdict {
    pub event_id: u64,
    pub passed: bool,
    pub reason: Option<RejectReason>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub verdicts: Vec<EventVerdict>,
    pub total: usize,
    pub successful: usize,
    pub unsuccessful: usize,
}

impl FilterReport {
    pub fn rejections(&self) -> impl Iterator<Item = (u64, RejectReason)> + '_ {
        self.verdicts
            .iter()
            .filter_map(|v| v.reason.map(|r| (v.event_id, r)))
    }

    pub fn merge(&mut self, other: FilterReport) {
        self.verdicts.extend(other.verdicts);
        self.total += other.total;
        self.successful += other.successful;
        self.unsuccessful += other.unsuccessful;
    }

    /// Line-delimited audit: `event_id,verdict,reason`.
    pub fn write_audit<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["event_id", "verdict", "reason"])?;
        for v in &self.verdicts {
            out.write_record([
                v.event_id.to_string().as_str(),
                if v.passed { "pass" } else { "fail" },
                v.reason.map_or("", RejectReason::as_str),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_audit(&self, path: &Path) -> csv::Result<()> {
        self.write_audit(std::fs::File::create(path)?)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub dribbles: Vec<PreparedDribble>,
    pub report: FilterReport,
}

fn contiguous(frames: &[Frame]) -> bool {
    frames
        .windows(2)
        .all(|w| ((w[1].timestamp - w[0].timestamp) - FRAME_DT).abs() <= CADENCE_TOL)
}

struct RawTrack {
    centroids: Vec<Vec2>,
    present: Vec<bool>,
    poses: Vec<Option<Pose>>,
}

fn raw_track(frames: &[Frame], id: PlayerId) -> RawTrack {
    let mut t = RawTrack {
        centroids: Vec::with_capacity(frames.len()),
        present: Vec::with_capacity(frames.len()),
        poses: Vec::with_capacity(frames.len()),
    };
    for f in frames {
        let p = f.player(id);
        t.centroids.push(p.map_or(Vec2::zeros(), |p| p.centroid));
        t.present.push(p.is_some());
        t.poses.push(p.map(|p| p.pose));
    }
    t
}

fn fill_track(raw: &RawTrack, id: PlayerId, cfg: &Config) -> Result<PlayerTrack, RejectReason> {
    let max_gap = cfg.preprocess.max_fill_gap_frames;
    let centroids = fill_points2(&raw.centroids, &raw.present, max_gap)?;
    let poses = fill_poses(&raw.poses, max_gap)?;
    let kinematics = differentiate_planar(&centroids, FRAME_DT, cfg.preprocess.smoothing_window_frames)?;
    Ok(PlayerTrack {
        id,
        centroids,
        poses,
        kinematics,
    })
}

/// Builds one take-on; `events` must be sorted by start time.
pub fn prepare_take_on(
    bundle: &MatchBundle,
    events: &[Event],
    idx: usize,
    cfg: &Config,
) -> Result<PreparedDribble, RejectReason> {
    let event = &events[idx];
    let label = label_success(event).map_err(|_| RejectReason::MissingQualifier)?;
    let (t0, t1) = take_on_window(events, idx);
    let (i0, i1) = link_event_to_frames(t0, t1, &bundle.frames).map_err(|_| RejectReason::EmptyWindow)?;
    let mut frames = bundle.frames[i0..=i1].to_vec();
    if !contiguous(&frames) {
        return Err(RejectReason::Discontinuous);
    }
    let mirrored = matches!(
        bundle.metadata.direction_of(event.team_id, frames[0].timestamp),
        Ok(Direction::MinusX)
    );
    if mirrored {
        frames.iter_mut().for_each(Frame::mirror);
    }
    let pitch = bundle.metadata.pitch;
    let max_gap = cfg.preprocess.max_fill_gap_frames;
    let window = cfg.preprocess.smoothing_window_frames;

    let raw_att = raw_track(&frames, event.player_id);
    let att_centroids = fill_points2(&raw_att.centroids, &raw_att.present, max_gap)?;
    let ball_raw: Vec<Vec3> = frames.iter().map(|f| f.ball.position).collect();
    let ball_valid: Vec<bool> = frames.iter().map(|f| f.ball.valid).collect();
    let ball = fill_points3(&ball_raw, &ball_valid, max_gap)?;

    let duration = (frames.len() - 1) as f64 * FRAME_DT;
    if duration < cfg.segment.min_duration_s - CADENCE_TOL {
        return Err(RejectReason::Rule1DistanceDuration);
    }
    let ball_kinematics = differentiate_spatial(&ball, FRAME_DT, window)?;
    filter_take_on(&att_centroids, &ball_kinematics, &pitch, &cfg.segment)?;

    let last = frames.len() - 1;
    let attacker_end = att_centroids[last];
    let defender_id = assign_primary_defender(
        attacker_end,
        frames[last]
            .players
            .iter()
            .filter(|p| p.team_id != event.team_id)
            .map(|p| (p.player_id, p.centroid)),
    )
    .map_err(|_| RejectReason::NoOpponents)?;

    let attacker = fill_track(&raw_att, event.player_id, cfg)?;
    let defender = fill_track(&raw_track(&frames, defender_id), defender_id, cfg)?;
    let other_opponents = frames
        .iter()
        .map(|f| {
            f.players
                .iter()
                .filter(|p| p.team_id != event.team_id && p.player_id != defender_id)
                .map(|p| p.centroid)
                .collect()
        })
        .collect();

    Ok(PreparedDribble {
        segment: DribbleSegment {
            dribble_id: format!("{}-{}", bundle.metadata.match_id, event.event_id),
            event_id: event.event_id,
            frame_start: frames[0].frame_id,
            frame_end: frames[last].frame_id,
            attacker_id: event.player_id,
            attacker_team: event.team_id,
            defender_id,
            label,
            mirrored,
        },
        pitch,
        attacker,
        defender,
        ball,
        ball_kinematics,
        other_opponents,
    })
}

/// Every passing take-on of a match plus the per-event audit.
pub fn build_dataset(bundle: &MatchBundle, cfg: &Config) -> Dataset {
    let mut events = bundle.events.clone();
    crate::ingest::sort_events(&mut events);
    let take_ons: Vec<usize> = (0..events.len()).filter(|&i| events[i].is_take_on()).collect();
    let results: Vec<(u64, Result<PreparedDribble, RejectReason>)> = take_ons
        .par_iter()
        .map(|&i| (events[i].event_id, prepare_take_on(bundle, &events, i, cfg)))
        .collect();

    let mut ds = Dataset::default();
    for (event_id, r) in results {
        ds.report.total += 1;
        match r {
            Ok(d) => {
                if d.segment.label {
                    ds.report.successful += 1;
                } else {
                    ds.report.unsuccessful += 1;
                }
                ds.report.verdicts.push(EventVerdict { event_id, passed: true, reason: None });
                ds.dribbles.push(d);
            }
            Err(reason) => ds.report.verdicts.push(EventVerdict {
                event_id,
                passed: false,
                reason: Some(reason),
            }),
        }
    }
    ds
}

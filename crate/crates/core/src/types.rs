//! Frames, events and dribble segments.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pitch::{Vec2, Vec3};
use crate::skeleton::Pose;

/// Nominal sampling rate of the tracking feed.
pub const FRAME_RATE: f64 = 25.0;
pub const FRAME_DT: f64 = 1.0 / FRAME_RATE;
/// Tolerance on the spacing of consecutive frames.
pub const CADENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TeamId(pub u32);

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerFrame {
    pub player_id: PlayerId,
    pub team_id: TeamId,
    pub centroid: Vec2,
    pub pose: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallFrame {
    pub position: Vec3,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: u64,
    pub timestamp: f64,
    pub ball: BallFrame,
    pub players: Vec<PlayerFrame>,
}

impl Frame {
    pub fn player(&self, id: PlayerId) -> Option<&PlayerFrame> {
        self.players.iter().find(|p| p.player_id == id)
    }

    /// Point reflection through the pitch centre (`x -> -x`, `y -> -y`).
    pub fn mirror(&mut self) {
        let flip3 = |p: Vec3| Vec3::new(-p.x, -p.y, p.z);
        self.ball.position = flip3(self.ball.position);
        for pl in &mut self.players {
            pl.centroid = -pl.centroid;
            pl.pose = pl.pose.map_positions(flip3);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventKind {
    TakeOn,
    Other(String),
}

impl EventKind {
    pub fn as_str(&self) -> &str {
        match self {
            EventKind::TakeOn => "TAKE_ON",
            EventKind::Other(s) => s,
        }
    }

    pub fn parse(s: &str) -> Self {
        match s {
            "TAKE_ON" => EventKind::TakeOn,
            other => EventKind::Other(other.to_string()),
        }
    }
}

impl Serialize for EventKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EventKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(EventKind::parse(&s))
    }
}

/// An on-the-ball action from the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub event_id: u64,
    #[serde(rename = "type")]
    pub kind: EventKind,
    pub player_id: PlayerId,
    pub team_id: TeamId,
    #[serde(rename = "t_start_s")]
    pub t_start: f64,
    #[serde(rename = "t_end_s")]
    pub t_end: f64,
    pub success: Option<bool>,
}

impl Event {
    pub fn is_take_on(&self) -> bool {
        self.kind == EventKind::TakeOn
    }
}

/// A take-on that passed every filter rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DribbleSegment {
    pub dribble_id: String,
    pub event_id: u64,
    /// Frame ids of the first and last frame in the window (inclusive).
    pub frame_start: u64,
    pub frame_end: u64,
    pub attacker_id: PlayerId,
    pub attacker_team: TeamId,
    pub defender_id: PlayerId,
    pub label: bool,
    /// `true` when the window was point-reflected so the attacker plays toward `+x`.
    pub mirrored: bool,
}

impl DribbleSegment {
    pub fn frame_count(&self) -> usize {
        (self.frame_end - self.frame_start + 1) as usize
    }

    pub fn duration(&self) -> f64 {
        (self.frame_end - self.frame_start) as f64 / FRAME_RATE
    }
}

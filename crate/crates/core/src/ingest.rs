//! Tracking, event and metadata files.
//!
//! Tracking and event files are line-delimited JSON, one record per line.
//! Metadata is a single JSON document. Coordinates are written with three
//! decimals (millimetres).
//!
//! ```text
//! {"frame_id":0,"timestamp_s":0.0,"ball":{"x":1.0,"y":2.0,"z":0.11,"valid":true},
//!  "players":[{"player_id":7,"team_id":1,"cx":0.5,"cy":-3.2,
//!              "joints":{"head":{"x":0.5,"y":-3.2,"z":1.8,"valid":true}, ...}}]}
//! {"event_id":12,"type":"TAKE_ON","player_id":7,"team_id":1,"t_start_s":3.2,"t_end_s":3.6,"success":true}
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::pitch::{Pitch, Vec2, Vec3};
use crate::skeleton::{JointName, Pose, JOINT_COUNT};
use crate::types::{BallFrame, Event, Frame, PlayerFrame, PlayerId, TeamId};

pub const TRACKING_FILE: &str = "tracking.jsonl";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const METADATA_FILE: &str = "meta.json";

/// Slack when matching event timestamps to frame timestamps.
const TIME_EPS: f64 = 1e-6;
/// Joints below this height are rejected as tracking garbage.
const MIN_JOINT_Z: f64 = -0.1;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: timestamp {got} does not increase past {prev}")]
    NonMonotoneTimestamp { line: usize, prev: f64, got: f64 },
    #[error("no frame inside [{t_start}, {t_end}]")]
    EmptyWindow { t_start: f64, t_end: f64 },
    #[error("no playing direction for team {team} at t = {timestamp}")]
    UnknownDirection { team: TeamId, timestamp: f64 },
    #[error("metadata: {0}")]
    Metadata(String),
}

impl IngestError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct WirePoint {
    x: Option<f64>,
    y: Option<f64>,
    z: Option<f64>,
    valid: bool,
}

impl WirePoint {
    fn from_point(p: Vec3, valid: bool) -> Self {
        WirePoint {
            x: Some(round3(p.x)),
            y: Some(round3(p.y)),
            z: Some(round3(p.z)),
            valid,
        }
    }

    /// Position and validity. Invalid points may carry nulls, which read as zero.
    fn to_point(self) -> Result<(Vec3, bool), String> {
        match (self.x, self.y, self.z) {
            (Some(x), Some(y), Some(z)) if x.is_finite() && y.is_finite() && z.is_finite() => {
                Ok((Vec3::new(x, y, z), self.valid))
            }
            _ if !self.valid => Ok((Vec3::zeros(), false)),
            _ => Err("valid point with missing or non-finite coordinate".into()),
        }
    }
}

struct WireJoints<'a>(&'a Pose);

impl Serialize for WireJoints<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(JOINT_COUNT))?;
        for j in JointName::ALL {
            map.serialize_entry(
                j.as_str(),
                &WirePoint::from_point(self.0.joint(j), self.0.is_observed(j)),
            )?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct WirePlayerOut<'a> {
    player_id: PlayerId,
    team_id: TeamId,
    cx: f64,
    cy: f64,
    joints: WireJoints<'a>,
}

#[derive(Serialize)]
struct WireFrameOut<'a> {
    frame_id: u64,
    timestamp_s: f64,
    ball: WirePoint,
    players: Vec<WirePlayerOut<'a>>,
}

#[derive(Deserialize)]
struct WirePlayerIn {
    player_id: PlayerId,
    team_id: TeamId,
    cx: f64,
    cy: f64,
    joints: BTreeMap<String, WirePoint>,
}

#[derive(Deserialize)]
struct WireFrameIn {
    frame_id: u64,
    timestamp_s: f64,
    ball: WirePoint,
    players: Vec<WirePlayerIn>,
}

fn convert_player(p: WirePlayerIn) -> Result<PlayerFrame, String> {
    if !(p.cx.is_finite() && p.cy.is_finite()) {
        return Err(format!("player {}: non-finite centroid", p.player_id));
    }
    let mut pose = Pose::default();
    let mut seen = [false; JOINT_COUNT];
    for (name, wp) in p.joints {
        let joint: JointName = name
            .parse()
            .map_err(|e| format!("player {}: {e}", p.player_id))?;
        let (pos, valid) = wp
            .to_point()
            .map_err(|e| format!("player {} joint {name}: {e}", p.player_id))?;
        if valid && pos.z < MIN_JOINT_Z {
            return Err(format!(
                "player {} joint {name}: z = {} below ground",
                p.player_id, pos.z
            ));
        }
        seen[joint.index()] = true;
        pose.set(joint, pos, valid);
    }
    let missing: Vec<&str> = JointName::ALL
        .iter()
        .filter(|j| !seen[j.index()] && **j != JointName::MidHip)
        .map(|j| j.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(format!(
            "player {}: {} of {JOINT_COUNT} joints, missing {}",
            p.player_id,
            JOINT_COUNT - missing.len() - usize::from(!seen[JointName::MidHip.index()]),
            missing.join(", ")
        ));
    }
    pose.derive_mid_hip();
    Ok(PlayerFrame {
        player_id: p.player_id,
        team_id: p.team_id,
        centroid: Vec2::new(p.cx, p.cy),
        pose,
    })
}

fn convert_frame(w: WireFrameIn) -> Result<Frame, String> {
    if !w.timestamp_s.is_finite() {
        return Err("non-finite timestamp".into());
    }
    let (position, valid) = w.ball.to_point().map_err(|e| format!("ball: {e}"))?;
    let players = w
        .players
        .into_iter()
        .map(convert_player)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Frame {
        frame_id: w.frame_id,
        timestamp: w.timestamp_s,
        ball: BallFrame { position, valid },
        players,
    })
}

fn parse_tracking_line(line: &str) -> Result<Frame, String> {
    let wire: WireFrameIn = serde_json::from_str(line).map_err(|e| e.to_string())?;
    convert_frame(wire)
}

/// Reads tracking records, failing on the first malformed line.
pub fn read_tracking<R: BufRead>(reader: R) -> Result<Vec<Frame>, IngestError> {
    let (frames, errors) = read_tracking_inner(reader, true)?;
    debug_assert!(errors.is_empty());
    Ok(frames)
}

/// Reads tracking records, skipping malformed lines and returning them alongside.
/// Non-monotone timestamps are still fatal.
pub fn read_tracking_lenient<R: BufRead>(
    reader: R,
) -> Result<(Vec<Frame>, Vec<IngestError>), IngestError> {
    read_tracking_inner(reader, false)
}

fn read_tracking_inner<R: BufRead>(
    reader: R,
    strict: bool,
) -> Result<(Vec<Frame>, Vec<IngestError>), IngestError> {
    let mut frames: Vec<Frame> = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| IngestError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let frame = match parse_tracking_line(&line) {
            Ok(f) => f,
            Err(reason) => {
                let err = IngestError::MalformedRecord {
                    line: line_no,
                    reason,
                };
                if strict {
                    return Err(err);
                }
                skipped.push(err);
                continue;
            }
        };
        if let Some(prev) = frames.last() {
            if frame.timestamp <= prev.timestamp {
                return Err(IngestError::NonMonotoneTimestamp {
                    line: line_no,
                    prev: prev.timestamp,
                    got: frame.timestamp,
                });
            }
        }
        frames.push(frame);
    }
    Ok((frames, skipped))
}

pub fn parse_tracking(path: &Path) -> Result<Vec<Frame>, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_tracking(BufReader::new(file))
}

pub fn write_tracking_to<W: Write>(mut w: W, frames: &[Frame]) -> std::io::Result<()> {
    for f in frames {
        let out = WireFrameOut {
            frame_id: f.frame_id,
            timestamp_s: f.timestamp,
            ball: WirePoint::from_point(f.ball.position, f.ball.valid),
            players: f
                .players
                .iter()
                .map(|p| WirePlayerOut {
                    player_id: p.player_id,
                    team_id: p.team_id,
                    cx: round3(p.centroid.x),
                    cy: round3(p.centroid.y),
                    joints: WireJoints(&p.pose),
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &out)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_tracking(path: &Path, frames: &[Frame]) -> Result<(), IngestError> {
    let file = File::create(path).map_err(|e| IngestError::io(path, e))?;
    write_tracking_to(BufWriter::new(file), frames).map_err(|e| IngestError::io(path, e))
}

fn validate_event(e: &Event) -> Result<(), String> {
    if !(e.t_start.is_finite() && e.t_end.is_finite()) {
        return Err("non-finite timestamp".into());
    }
    if e.t_start > e.t_end {
        return Err(format!("t_start {} after t_end {}", e.t_start, e.t_end));
    }
    if e.is_take_on() && e.success.is_none() {
        return Err(format!("TAKE_ON event {} has no success qualifier", e.event_id));
    }
    Ok(())
}

/// Reads events and returns them sorted by start time (ties by id).
pub fn read_events<R: BufRead>(reader: R) -> Result<Vec<Event>, IngestError> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let malformed = |reason: String| IngestError::MalformedRecord { line: i + 1, reason };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        validate_event(&event).map_err(malformed)?;
        events.push(event);
    }
    sort_events(&mut events);
    Ok(events)
}

pub fn sort_events(events: &mut [Event]) {
    events.sort_by(|a, b| {
        a.t_start
            .total_cmp(&b.t_start)
            .then(a.event_id.cmp(&b.event_id))
    });
}

pub fn parse_events(path: &Path) -> Result<Vec<Event>, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_events(BufReader::new(file))
}

pub fn write_events_to<W: Write>(mut w: W, events: &[Event]) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_events(path: &Path, events: &[Event]) -> Result<(), IngestError> {
    let file = File::create(path).map_err(|e| IngestError::io(path, e))?;
    write_events_to(BufWriter::new(file), events).map_err(|e| IngestError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::PlusX => Direction::MinusX,
            Direction::MinusX => Direction::PlusX,
        }
    }
}

/// One half (or extra-time period) and the direction each team attacks in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub period: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub directions: BTreeMap<TeamId, Direction>,
}

impl Period {
    fn contains(&self, t: f64) -> bool {
        t >= self.start_s - TIME_EPS && t <= self.end_s + TIME_EPS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchMetadata {
    pub match_id: String,
    pub teams: Vec<TeamId>,
    #[serde(default)]
    pub pitch: Pitch,
    /// Directions always describe the coordinates currently stored in the bundle.
    pub periods: Vec<Period>,
}

impl MatchMetadata {
    pub fn period_at(&self, t: f64) -> Option<&Period> {
        self.periods.iter().find(|p| p.contains(t))
    }

    pub fn direction_of(&self, team: TeamId, t: f64) -> Result<Direction, IngestError> {
        self.period_at(t)
            .and_then(|p| p.directions.get(&team).copied())
            .ok_or(IngestError::UnknownDirection { team, timestamp: t })
    }

    fn validate(&self) -> Result<(), IngestError> {
        if self.match_id.is_empty() {
            return Err(IngestError::Metadata("empty match_id".into()));
        }
        if Pitch::new(self.pitch.length, self.pitch.width).is_none() {
            return Err(IngestError::Metadata("pitch dimensions must be positive".into()));
        }
        for p in &self.periods {
            if !(p.start_s <= p.end_s) {
                return Err(IngestError::Metadata(format!(
                    "period {} ends before it starts",
                    p.period
                )));
            }
        }
        Ok(())
    }
}

pub fn parse_metadata(path: &Path) -> Result<MatchMetadata, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    let meta: MatchMetadata =
        serde_json::from_str(&text).map_err(|e| IngestError::Metadata(e.to_string()))?;
    meta.validate()?;
    Ok(meta)
}

pub fn write_metadata(path: &Path, meta: &MatchMetadata) -> Result<(), IngestError> {
    let text = serde_json::to_string_pretty(meta).expect("metadata serialises");
    std::fs::write(path, text + "\n").map_err(|e| IngestError::io(path, e))
}

/// Frames, events and metadata of one match.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchBundle {
    pub metadata: MatchMetadata,
    pub frames: Vec<Frame>,
    pub events: Vec<Event>,
}

impl MatchBundle {
    pub fn load(tracking: &Path, events: &Path, metadata: &Path) -> Result<Self, IngestError> {
        Ok(MatchBundle {
            metadata: parse_metadata(metadata)?,
            frames: parse_tracking(tracking)?,
            events: parse_events(events)?,
        })
    }

    pub fn load_dir(dir: &Path) -> Result<Self, IngestError> {
        MatchBundle::load(
            &dir.join(TRACKING_FILE),
            &dir.join(EVENTS_FILE),
            &dir.join(METADATA_FILE),
        )
    }

    pub fn save_dir(&self, dir: &Path) -> Result<(), IngestError> {
        std::fs::create_dir_all(dir).map_err(|e| IngestError::io(dir, e))?;
        write_tracking(&dir.join(TRACKING_FILE), &self.frames)?;
        write_events(&dir.join(EVENTS_FILE), &self.events)?;
        write_metadata(&dir.join(METADATA_FILE), &self.metadata)
    }
}

/// Inclusive range of frame indices covering `[t_start, t_end]`.
pub fn link_event_to_frames(
    t_start: f64,
    t_end: f64,
    frames: &[Frame],
) -> Result<(usize, usize), IngestError> {
    let first = frames.partition_point(|f| f.timestamp < t_start - TIME_EPS);
    let past = frames.partition_point(|f| f.timestamp <= t_end + TIME_EPS);
    if first >= past {
        return Err(IngestError::EmptyWindow { t_start, t_end });
    }
    Ok((first, past - 1))
}

/// Time window of the take-on at `idx`: from the end of the previous event to
/// the start of the next one, falling back to the event's own bounds where a
/// neighbour is missing or overlaps it.
pub fn take_on_window(events: &[Event], idx: usize) -> (f64, f64) {
    let ev = &events[idx];
    let start = idx
        .checked_sub(1)
        .map(|i| events[i].t_end)
        .filter(|t| *t <= ev.t_start)
        .unwrap_or(ev.t_start);
    let end = events
        .get(idx + 1)
        .map(|e| e.t_start)
        .filter(|t| *t >= ev.t_end)
        .unwrap_or(ev.t_end);
    (start, end)
}

/// Point-reflects every frame of one period and flips its recorded directions.
/// Applying it twice restores the bundle.
pub fn mirror_period(bundle: &mut MatchBundle, period_idx: usize) {
    let period = &mut bundle.metadata.periods[period_idx];
    for d in period.directions.values_mut() {
        *d = d.flipped();
    }
    let period = period.clone();
    for f in bundle.frames.iter_mut().filter(|f| period.contains(f.timestamp)) {
        f.mirror();
    }
}

/// Reflects periods as needed so `team` attacks `+x` throughout.
pub fn normalize_attack_direction(
    mut bundle: MatchBundle,
    team: TeamId,
) -> Result<MatchBundle, IngestError> {
    if let Some(f) = bundle
        .frames
        .iter()
        .find(|f| bundle.metadata.period_at(f.timestamp).is_none())
    {
        return Err(IngestError::UnknownDirection {
            team,
            timestamp: f.timestamp,
        });
    }
    for i in 0..bundle.metadata.periods.len() {
        let period = &bundle.metadata.periods[i];
        match period.directions.get(&team) {
            Some(Direction::PlusX) => {}
            Some(Direction::MinusX) => mirror_period(&mut bundle, i),
            None => {
                return Err(IngestError::UnknownDirection {
                    team,
                    timestamp: period.start_s,
                })
            }
        }
    }
    Ok(bundle)
}

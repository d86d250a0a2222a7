//! Synthetic matches with known ground truth.
//!
//! An attacker runs a brake / rotate / re-accelerate cut, the ball rides
//! ahead of the right big toe with a fixed touch cadence, and a primary
//! defender moves at constant velocity with a fixed hip orientation relative
//! to the attacker. Poses come from a rigid parametric skeleton.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features3d::Side;
use crate::ingest::{Direction, MatchBundle, MatchMetadata, Period};
use crate::pitch::{Pitch, Vec2, Vec3};
use crate::skeleton::{JointName, Pose};
use crate::types::{BallFrame, Event, EventKind, Frame, PlayerFrame, PlayerId, TeamId, FRAME_DT};

pub const ATTACKER: PlayerId = PlayerId(7);
pub const DEFENDER: PlayerId = PlayerId(21);
pub const ATTACKING_TEAM: TeamId = TeamId(1);
pub const DEFENDING_TEAM: TeamId = TeamId(2);

/// Frames of idle play inserted between consecutive dribbles of a match.
const PAD_FRAMES: usize = 25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),
}

/// Attacker velocity profile: straight run, brake, rotate at constant speed,
/// re-accelerate, straight run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutProfile {
    pub speed: f64,
    pub heading_deg: f64,
    /// Signed heading change; 0 for a straight dribble.
    pub turn_deg: f64,
    pub accel: f64,
    /// Speed during the rotation as a fraction of `speed`.
    pub cut_speed_ratio: f64,
    pub pre_s: f64,
    pub post_s: f64,
}

#[derive(Debug, Clone, Copy)]
struct Phase {
    t0: f64,
    p0: Vec2,
}

fn unit(deg: f64) -> Vec2 {
    let r = deg.to_radians();
    Vec2::new(r.cos(), r.sin())
}

impl CutProfile {
    fn cut_speed(&self) -> f64 {
        self.speed * self.cut_speed_ratio
    }

    fn brake_s(&self) -> f64 {
        if self.turn_deg == 0.0 {
            0.0
        } else {
            (self.speed - self.cut_speed()) / self.accel
        }
    }

    fn omega(&self) -> f64 {
        self.accel / self.cut_speed()
    }

    fn rotate_s(&self) -> f64 {
        if self.turn_deg == 0.0 {
            0.0
        } else {
            self.turn_deg.abs().to_radians() / self.omega()
        }
    }

    pub fn duration(&self) -> f64 {
        self.pre_s + 2.0 * self.brake_s() + self.rotate_s() + self.post_s
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InfeasibleParams(m.into()));
        if !(self.speed > 0.0) {
            return bad("speed must be positive");
        }
        if self.turn_deg.abs() > 180.0 {
            return bad("turn must be within +-180 degrees");
        }
        if self.turn_deg != 0.0 && !(self.accel > 0.0) {
            return bad("a turn needs a positive acceleration");
        }
        if !(self.cut_speed_ratio > 0.0 && self.cut_speed_ratio <= 1.0) {
            return bad("cut speed ratio must lie in (0, 1]");
        }
        if !(self.pre_s >= 0.0 && self.post_s >= 0.0) {
            return bad("phase durations must be non-negative");
        }
        Ok(())
    }

    /// Position relative to the start and velocity at time `t`.
    pub fn state(&self, t: f64) -> (Vec2, Vec2) {
        let v = self.speed;
        let vc = self.cut_speed();
        let h0 = self.heading_deg;
        let h1 = h0 + self.turn_deg;
        let (f0, f1) = (unit(h0), unit(h1));
        let tb = self.brake_s();
        let tr = self.rotate_s();
        let sign = self.turn_deg.signum();
        let w = self.omega();
        let a = self.accel;

        let brake = Phase { t0: self.pre_s, p0: f0 * (v * self.pre_s) };
        let rotate = Phase { t0: brake.t0 + tb, p0: brake.p0 + f0 * (v * tb - 0.5 * a * tb * tb) };
        let arc = |tau: f64| {
            let (hs, he) = (h0.to_radians(), h0.to_radians() + sign * w * tau);
            Vec2::new(he.sin() - hs.sin(), hs.cos() - he.cos()) * (vc / (sign * w))
        };
        let accel = Phase { t0: rotate.t0 + tr, p0: rotate.p0 + if tr > 0.0 { arc(tr) } else { Vec2::zeros() } };
        let post = Phase { t0: accel.t0 + tb, p0: accel.p0 + f1 * (vc * tb + 0.5 * a * tb * tb) };

        if t < brake.t0 || self.turn_deg == 0.0 {
            (f0 * (v * t), f0 * v)
        } else if t < rotate.t0 {
            let s = t - brake.t0;
            (brake.p0 + f0 * (v * s - 0.5 * a * s * s), f0 * (v - a * s))
        } else if t < accel.t0 {
            let s = t - rotate.t0;
            let h = h0 + sign * (w * s).to_degrees();
            (rotate.p0 + arc(s), unit(h) * vc)
        } else if t < post.t0 {
            let s = t - accel.t0;
            (accel.p0 + f1 * (vc * s + 0.5 * a * s * s), f1 * (vc + a * s))
        } else {
            let s = t - post.t0;
            (post.p0 + f1 * (v * s), f1 * v)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BallMode {
    /// Ball ahead of the right big toe, the gap following a raised cosine
    /// with minima every `period_frames` starting at `phase_frames`.
    AtFeet {
        d_min: f64,
        d_max: f64,
        period_frames: usize,
        phase_frames: usize,
    },
    /// Ball rolling on its own along the initial heading.
    Rolling { speed: f64 },
    /// At the feet, plus a sudden kick forward.
    Kicked {
        d_min: f64,
        d_max: f64,
        period_frames: usize,
        phase_frames: usize,
        kick_speed: f64,
        kick_start_s: f64,
        kick_s: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Track {
    Attacker,
    Defender,
    Ball,
}

/// Frames where a track is reported invalid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occlusion {
    pub track: Track,
    pub start_frame: usize,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DribbleParams {
    pub start: Vec2,
    pub run: CutProfile,
    pub lean_deg: f64,
    /// Forward offset of the attacker's feet from under the hips.
    pub foot_offset: f64,
    pub ball: BallMode,
    /// Angle between attacker and defender hip vectors.
    pub stance_deg: f64,
    pub defender_speed: f64,
    /// Time at which the defender is level with the attacker, as a fraction of the run.
    pub meet_fraction: f64,
    /// Signed lateral offset of the defender from the attacker at the meeting
    /// time (positive = attacker's left).
    pub meet_offset: f64,
    pub defender_weighted: Side,
    /// Static extra opponents, relative to the attacker's start.
    pub extra_opponents: Vec<Vec2>,
    pub occlusions: Vec<Occlusion>,
    pub success: bool,
}

/// Generator-side values of the features the synthetic labels depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DribbleTruth {
    pub dribble_id: String,
    pub event_id: u64,
    pub max_speed_att: f64,
    pub p90_torso_lean: f64,
    pub defender_stance_angle: f64,
    pub turn_deg: f64,
    /// Touches the detector must find; `None` when the ball is not at the feet.
    pub touches: Option<usize>,
    /// Rule the dribble was built to violate.
    pub planted_rule: Option<u8>,
    pub label: bool,
}

#[derive(Debug, Clone)]
pub struct SynthDribble {
    pub frames: Vec<Frame>,
    pub event: Event,
    pub truth: DribbleTruth,
}

/// Joint offsets of the upright skeleton: forward, left, up.
fn body_offset(j: JointName) -> [f64; 3] {
    use JointName::*;
    let (f, l, u) = match j {
        Head => (0.0, 0.0, 1.75),
        LeftEye | RightEye => (0.08, 0.03, 1.72),
        LeftEar | RightEar => (0.0, 0.08, 1.70),
        Neck => (0.0, 0.0, 1.50),
        LeftShoulder | RightShoulder => (0.0, 0.20, 1.45),
        LeftElbow | RightElbow => (0.0, 0.22, 1.15),
        LeftWrist | RightWrist => (0.05, 0.22, 0.90),
        LeftPinky | RightPinky => (0.08, 0.23, 0.82),
        LeftThumb | RightThumb => (0.10, 0.20, 0.84),
        MidHip => (0.0, 0.0, 1.0),
        LeftHip | RightHip => (0.0, 0.10, 1.0),
        LeftKnee | RightKnee => (0.02, 0.11, 0.55),
        LeftAnkle | RightAnkle => (0.0, 0.11, 0.08),
        LeftHeel | RightHeel => (-0.05, 0.11, 0.03),
        LeftBigToe | RightBigToe => (0.18, 0.10, 0.03),
        LeftSmallToe | RightSmallToe => (0.15, 0.15, 0.03),
    };
    let side = if j.as_str().starts_with("right") { -1.0 } else { 1.0 };
    [f, l * side, u]
}

const HIP_HEIGHT: f64 = 1.0;

fn upper_body(j: JointName) -> bool {
    body_offset(j)[2] > HIP_HEIGHT
}

fn lower_leg(j: JointName) -> bool {
    body_offset(j)[2] < 0.6
}

/// Rigid pose facing `heading_deg` with the upper body tilted forward by
/// `lean_deg` about the mid-hip, everything above the knees shifted sideways
/// by `shift` (positive = left) and the lower legs moved forward by `stride`.
pub fn build_pose(centroid: Vec2, heading_deg: f64, lean_deg: f64, shift: f64, stride: f64) -> Pose {
    let fwd = unit(heading_deg);
    let left = Vec2::new(-fwd.y, fwd.x);
    let (s, c) = lean_deg.to_radians().sin_cos();
    Pose::from_fn(|j| {
        let [mut f, mut l, mut u] = body_offset(j);
        if upper_body(j) {
            let h = u - HIP_HEIGHT;
            (f, u) = (f * c + h * s, HIP_HEIGHT - f * s + h * c);
        }
        if lower_leg(j) {
            f += stride;
        } else {
            l += shift;
        }
        let p = centroid + fwd * f + left * l;
        Vec3::new(p.x, p.y, u)
    })
}

fn ball_gap(d_min: f64, d_max: f64, period: usize, phase: usize, k: usize) -> f64 {
    let x = 2.0 * PI * (k as f64 - phase as f64) / period as f64;
    d_min + (d_max - d_min) * (1.0 - x.cos()) / 2.0
}

fn heading_of(v: Vec2) -> f64 {
    v.y.atan2(v.x).to_degrees()
}

fn validate(p: &DribbleParams) -> Result<(), SynthError> {
    p.run.validate()?;
    let bad = |m: &str| Err(SynthError::InfeasibleParams(m.into()));
    if !(0.0..=80.0).contains(&p.lean_deg) {
        return bad("lean must lie in [0, 80] degrees");
    }
    if !(0.0..=180.0).contains(&p.stance_deg) {
        return bad("stance angle must lie in [0, 180] degrees");
    }
    if !(p.defender_speed >= 0.0) || !(0.0..=1.0).contains(&p.meet_fraction) {
        return bad("defender motion is invalid");
    }
    match p.ball {
        BallMode::AtFeet { d_min, d_max, period_frames, .. }
        | BallMode::Kicked { d_min, d_max, period_frames, .. } => {
            if !(0.0 <= d_min && d_min < d_max) || period_frames < 2 {
                return bad("ball cadence needs 0 <= d_min < d_max and a period of at least 2 frames");
            }
        }
        BallMode::Rolling { speed } => {
            if !(speed >= 0.0) {
                return bad("rolling speed must be non-negative");
            }
        }
    }
    if p.run.duration() < FRAME_DT {
        return bad("dribble must span at least two frames");
    }
    Ok(())
}

/// Frames (timestamps from 0) and the TAKE_ON event of one dribble. `seed`
/// is only used for the jitter of occluded samples.
pub fn generate_dribble(params: &DribbleParams, seed: u64) -> Result<SynthDribble, SynthError> {
    validate(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (params.run.duration() / FRAME_DT).round() as usize + 1;
    let duration = (n - 1) as f64 * FRAME_DT;
    let t_meet = params.meet_fraction * duration;
    let (meet_pos, meet_vel) = params.run.state(t_meet);
    let meet_dir = meet_vel / meet_vel.norm();
    let meet_left = Vec2::new(-meet_dir.y, meet_dir.x);
    let def_anchor = params.start + meet_pos + meet_left * params.meet_offset;
    let def_vel = meet_dir * params.defender_speed;
    let shift = match params.defender_weighted {
        Side::Left => 0.06,
        Side::Right => -0.06,
    };

    let mut frames = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * FRAME_DT;
        let (rel, vel) = params.run.state(t);
        let att_c = params.start + rel;
        let heading = heading_of(vel);
        let att_pose = build_pose(att_c, heading, params.lean_deg, 0.0, params.foot_offset);
        let def_c = def_anchor + def_vel * (t - t_meet);
        let def_pose = build_pose(def_c, heading + params.stance_deg, 0.0, shift, 0.0);

        let fwd = unit(heading);
        let toe = att_pose.joint(JointName::RightBigToe);
        let at_feet = |d_min, d_max, period, phase| {
            let d = ball_gap(d_min, d_max, period, phase, k);
            toe + Vec3::new(fwd.x, fwd.y, 0.0) * d
        };
        let ball = match params.ball {
            BallMode::AtFeet { d_min, d_max, period_frames, phase_frames } => {
                at_feet(d_min, d_max, period_frames, phase_frames)
            }
            BallMode::Rolling { speed } => {
                let f0 = unit(params.run.heading_deg);
                let p = params.start + f0 * (0.3 + speed * t);
                Vec3::new(p.x, p.y, 0.11)
            }
            BallMode::Kicked { d_min, d_max, period_frames, phase_frames, kick_speed, kick_start_s, kick_s } => {
                let f0 = unit(params.run.heading_deg);
                let extra = kick_speed * (t - kick_start_s).clamp(0.0, kick_s);
                at_feet(d_min, d_max, period_frames, phase_frames) + Vec3::new(f0.x, f0.y, 0.0) * extra
            }
        };

        let mut players = vec![
            PlayerFrame { player_id: ATTACKER, team_id: ATTACKING_TEAM, centroid: att_c, pose: att_pose },
            PlayerFrame { player_id: DEFENDER, team_id: DEFENDING_TEAM, centroid: def_c, pose: def_pose },
        ];
        for (i, o) in params.extra_opponents.iter().enumerate() {
            let c = params.start + o;
            players.push(PlayerFrame {
                player_id: PlayerId(DEFENDER.0 + 1 + i as u32),
                team_id: DEFENDING_TEAM,
                centroid: c,
                pose: build_pose(c, 180.0, 0.0, 0.0, 0.0),
            });
        }
        frames.push(Frame {
            frame_id: k as u64,
            timestamp: t,
            ball: BallFrame { position: ball, valid: true },
            players,
        });
    }

    for occ in &params.occlusions {
        for f in frames.iter_mut().skip(occ.start_frame).take(occ.frames) {
            let jitter = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 0.0);
            match occ.track {
                Track::Ball => {
                    f.ball.valid = false;
                    f.ball.position += jitter;
                }
                Track::Attacker | Track::Defender => {
                    let id = if occ.track == Track::Attacker { ATTACKER } else { DEFENDER };
                    let pl = f.players.iter_mut().find(|p| p.player_id == id).expect("player exists");
                    for j in JointName::ALL {
                        let p = pl.pose.joint(j);
                        pl.pose.set(j, p + jitter, false);
                    }
                }
            }
        }
    }

    let touches = match params.ball {
        BallMode::AtFeet { period_frames, phase_frames, d_min, .. } if d_min < 0.15 => {
            Some((1..n - 1).filter(|k| (k + period_frames - phase_frames % period_frames) % period_frames == 0).count())
        }
        _ => None,
    };
    let planted_rule = match params.ball {
        BallMode::Rolling { .. } => Some(2),
        BallMode::Kicked { .. } => Some(3),
        BallMode::AtFeet { .. } => None,
    };
    let event = Event {
        event_id: 0,
        kind: EventKind::TakeOn,
        player_id: ATTACKER,
        team_id: ATTACKING_TEAM,
        t_start: 0.0,
        t_end: duration,
        success: Some(params.success),
    };
    Ok(SynthDribble {
        frames,
        event,
        truth: DribbleTruth {
            dribble_id: String::new(),
            event_id: 0,
            max_speed_att: params.run.speed,
            p90_torso_lean: params.lean_deg,
            defender_stance_angle: params.stance_deg,
            turn_deg: params.run.turn_deg.abs(),
            touches,
            planted_rule,
            label: params.success,
        },
    })
}

/// Dribbles laid end to end in one match, separated by idle frames and
/// bracketed by non-take-on events. `direction` is the attacking team's
/// playing direction; frames are reflected when it is `-x`.
pub fn assemble_match(match_id: &str, dribbles: Vec<SynthDribble>, direction: Direction) -> (MatchBundle, Vec<DribbleTruth>) {
    let mut frames: Vec<Frame> = Vec::new();
    let mut events = Vec::new();
    let mut truths = Vec::new();
    for (i, d) in dribbles.into_iter().enumerate() {
        let offset = frames.len();
        let t0 = offset as f64 * FRAME_DT;
        let event_id = 2 * i as u64 + 1;
        let last = d.frames.last().expect("non-empty dribble").clone();
        frames.extend(d.frames.into_iter().enumerate().map(|(k, mut f)| {
            f.frame_id = (offset + k) as u64;
            f.timestamp = (offset + k) as f64 * FRAME_DT;
            f
        }));
        let t_end = (frames.len() - 1) as f64 * FRAME_DT;
        events.push(Event { event_id, t_start: t0, t_end, ..d.event });
        for _ in 0..PAD_FRAMES {
            let k = frames.len();
            frames.push(Frame { frame_id: k as u64, timestamp: k as f64 * FRAME_DT, ..last.clone() });
        }
        events.push(Event {
            event_id: event_id + 1,
            kind: EventKind::Other("PASS".into()),
            player_id: ATTACKER,
            team_id: ATTACKING_TEAM,
            t_start: t_end,
            t_end: frames.len() as f64 * FRAME_DT,
            success: None,
        });
        truths.push(DribbleTruth {
            dribble_id: format!("{match_id}-{event_id}"),
            event_id,
            ..d.truth
        });
    }
    if direction == Direction::MinusX {
        frames.iter_mut().for_each(Frame::mirror);
    }
    let mut directions = BTreeMap::new();
    directions.insert(ATTACKING_TEAM, direction);
    directions.insert(DEFENDING_TEAM, direction.flipped());
    let end_s = frames.len() as f64 * FRAME_DT + 1.0;
    let bundle = MatchBundle {
        metadata: MatchMetadata {
            match_id: match_id.to_string(),
            teams: vec![ATTACKING_TEAM, DEFENDING_TEAM],
            pitch: Pitch::default(),
            periods: vec![Period { period: 1, start_s: 0.0, end_s, directions }],
        },
        frames,
        events,
    };
    (bundle, truths)
}

/// Coefficients of the label model on z-scored generator values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedBeta {
    pub intercept: f64,
    pub speed: f64,
    pub lean: f64,
    pub stance: f64,
}

impl Default for PlantedBeta {
    fn default() -> Self {
        PlantedBeta { intercept: 0.0, speed: 0.8, lean: -1.5, stance: 1.5 }
    }
}

impl PlantedBeta {
    pub const ZERO: PlantedBeta = PlantedBeta { intercept: 0.0, speed: 0.0, lean: 0.0, stance: 0.0 };
}

/// `speed,lean,stance` or `intercept,speed,lean,stance`.
impl FromStr for PlantedBeta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v = s
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        match v[..] {
            [speed, lean, stance] => Ok(PlantedBeta { intercept: 0.0, speed, lean, stance }),
            [intercept, speed, lean, stance] => Ok(PlantedBeta { intercept, speed, lean, stance }),
            _ => Err("expected 3 or 4 comma-separated numbers".into()),
        }
    }
}

/// Sampling ranges of the planted features; labels use their z-scores.
pub const SPEED_RANGE: (f64, f64) = (3.5, 6.5);
pub const LEAN_RANGE: (f64, f64) = (5.0, 30.0);
pub const STANCE_RANGE: (f64, f64) = (60.0, 180.0);

fn uniform_z(v: f64, (lo, hi): (f64, f64)) -> f64 {
    (v - (lo + hi) / 2.0) / ((hi - lo) / 12f64.sqrt())
}

pub fn planted_probability(beta: &PlantedBeta, speed: f64, lean: f64, stance: f64) -> f64 {
    let z = beta.intercept
        + beta.speed * uniform_z(speed, SPEED_RANGE)
        + beta.lean * uniform_z(lean, LEAN_RANGE)
        + beta.stance * uniform_z(stance, STANCE_RANGE);
    1.0 / (1.0 + (-z).exp())
}

/// Rule a sampled dribble should break, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    ShortDuration,
    SlowBall,
    BallSpike,
    NoProgress,
}

impl Violation {
    pub const ALL: [Violation; 4] = [Violation::ShortDuration, Violation::SlowBall, Violation::BallSpike, Violation::NoProgress];

    pub fn rule(self) -> u8 {
        match self {
            Violation::ShortDuration => 1,
            Violation::SlowBall => 2,
            Violation::BallSpike => 3,
            Violation::NoProgress => 4,
        }
    }
}

/// Random, filter-passing dribble parameters unless a violation is requested.
pub fn sample_params(rng: &mut impl Rng, violation: Option<Violation>, occlusions: bool) -> DribbleParams {
    let start = Vec2::new(rng.random_range(-25.0..25.0), rng.random_range(-20.0..20.0));
    let speed = rng.random_range(SPEED_RANGE.0..SPEED_RANGE.1);
    let accel = rng.random_range(4.5..6.5);
    let goal = Pitch::default().attacking_goal();
    let progresses = |run: &CutProfile| {
        let (end, _) = run.state(run.duration());
        (start + end - goal).norm() < (start - goal).norm() - 1.0
    };
    let mut run = CutProfile {
        speed,
        heading_deg: 0.0,
        turn_deg: 0.0,
        accel,
        cut_speed_ratio: 0.6,
        pre_s: 0.0,
        post_s: 0.0,
    };
    for attempt in 0..50 {
        let heading = rng.random_range(-30.0..30.0);
        let magnitude = rng.random_range(20.0..120.0);
        let toward_centre = if heading > 0.0 { -1.0 } else { 1.0 };
        run.heading_deg = heading;
        run.turn_deg = if rng.random_bool(0.7) { toward_centre } else { -toward_centre } * magnitude;
        if attempt == 49 {
            run.turn_deg = 0.0;
        }
        run.pre_s = rng.random_range(0.6..1.0);
        run.post_s = rng.random_range(0.6..1.0);
        match violation {
            Some(Violation::NoProgress) => {
                run.heading_deg = 180.0 + rng.random_range(-20.0..20.0);
                run.turn_deg = 0.0;
                run.pre_s = rng.random_range(1.2..1.6);
                run.post_s = rng.random_range(1.2..1.6);
                break;
            }
            Some(Violation::ShortDuration) => {
                run.turn_deg = 0.0;
                run.pre_s = rng.random_range(0.6..0.9);
                run.post_s = rng.random_range(0.6..0.9);
                break;
            }
            _ => {}
        }
        if run.duration() < 2.3 {
            run.post_s += 2.3 - run.duration();
        }
        if progresses(&run) {
            break;
        }
    }
    let period_frames = rng.random_range(12..=16);
    let d_min = rng.random_range(0.03..0.10);
    let d_max = d_min + rng.random_range(0.3..0.45);
    let phase_frames = rng.random_range(0..period_frames);
    let ball = match violation {
        Some(Violation::SlowBall) => BallMode::Rolling { speed: rng.random_range(0.2..1.0) },
        Some(Violation::BallSpike) => BallMode::Kicked {
            d_min,
            d_max,
            period_frames,
            phase_frames,
            kick_speed: rng.random_range(13.0..16.0),
            kick_start_s: rng.random_range(0.5..1.0),
            kick_s: 0.4,
        },
        _ => BallMode::AtFeet { d_min, d_max, period_frames, phase_frames },
    };
    let meet_offset = rng.random_range(0.6..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let meet_fraction = rng.random_range(0.4..0.7);
    let defender_speed = rng.random_range(1.0..4.0);

    // extra opponents stay clear of the attacker's final position so the
    // primary defender is the nearest one there
    let duration = ((run.duration() / FRAME_DT).round()) * FRAME_DT;
    let (end_rel, _) = run.state(duration);
    let (meet_rel, meet_vel) = run.state(meet_fraction * duration);
    let dir = meet_vel / meet_vel.norm();
    let def_end = meet_rel + Vec2::new(-dir.y, dir.x) * meet_offset + dir * defender_speed * (duration - meet_fraction * duration);
    let def_gap = (def_end - end_rel).norm();
    let (mid_rel, _) = run.state(duration / 2.0);
    let mut extra_opponents = Vec::new();
    for _ in 0..rng.random_range(0..=2) {
        for _ in 0..20 {
            let r = rng.random_range(3.0..10.0);
            let a: f64 = rng.random_range(0.0..360.0);
            let o = mid_rel + unit(a) * r;
            if (o - end_rel).norm() > def_gap + 1.0 {
                extra_opponents.push(o);
                break;
            }
        }
    }

    let mut occ = Vec::new();
    let n = (run.duration() / FRAME_DT).round() as usize + 1;
    if occlusions && n > 12 {
        for track in [Track::Attacker, Track::Defender, Track::Ball] {
            if rng.random_bool(0.3) {
                let frames = rng.random_range(1..=4);
                occ.push(Occlusion { track, start_frame: rng.random_range(3..n - 3 - frames), frames });
            }
        }
    }

    DribbleParams {
        start,
        run,
        lean_deg: rng.random_range(LEAN_RANGE.0..LEAN_RANGE.1),
        foot_offset: rng.random_range(-0.15..0.15),
        ball,
        stance_deg: rng.random_range(STANCE_RANGE.0..STANCE_RANGE.1),
        defender_speed,
        meet_fraction,
        meet_offset,
        defender_weighted: if rng.random_bool(0.5) { Side::Left } else { Side::Right },
        extra_opponents,
        occlusions: occ,
        success: rng.random_bool(0.5),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusOptions {
    pub dribbles_per_match: usize,
    pub occlusions: bool,
    /// Share of dribbles built to break one of the four rules.
    pub violation_rate: f64,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions { dribbles_per_match: 50, occlusions: true, violation_rate: 0.0 }
    }
}

/// Parameters and seeds of every dribble, grouped by match. Rendering is
/// deferred so large corpora can be processed one match at a time.
#[derive(Debug, Clone)]
pub struct MatchPlan {
    pub match_id: String,
    pub direction: Direction,
    pub dribbles: Vec<(DribbleParams, u64)>,
}

impl MatchPlan {
    pub fn render(&self) -> Result<(MatchBundle, Vec<DribbleTruth>), SynthError> {
        let dribbles = self
            .dribbles
            .iter()
            .map(|(p, s)| generate_dribble(p, *s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(assemble_match(&self.match_id, dribbles, self.direction))
    }
}

pub fn plan_labeled_dataset(n: usize, beta: &PlantedBeta, seed: u64, opts: &CorpusOptions) -> Vec<MatchPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per = opts.dribbles_per_match.max(1);
    let mut plans = Vec::new();
    let mut left = n;
    while left > 0 {
        let count = left.min(per);
        left -= count;
        let idx = plans.len();
        let dribbles = (0..count)
            .map(|_| {
                let violation = (rng.random::<f64>() < opts.violation_rate)
                    .then(|| Violation::ALL[rng.random_range(0..4)]);
                let mut p = sample_params(&mut rng, violation, opts.occlusions);
                let prob = planted_probability(beta, p.run.speed, p.lean_deg, p.stance_deg);
                p.success = rng.random::<f64>() < prob;
                (p, rng.random::<u64>())
            })
            .collect();
        plans.push(MatchPlan {
            match_id: format!("synth{idx:04}"),
            direction: if idx % 2 == 0 { Direction::PlusX } else { Direction::MinusX },
            dribbles,
        });
    }
    plans
}

/// `n` dribbles whose labels are Bernoulli draws from the planted logistic model.
pub fn generate_labeled_dataset(
    n: usize,
    beta: &PlantedBeta,
    seed: u64,
    opts: &CorpusOptions,
) -> Result<Vec<(MatchBundle, Vec<DribbleTruth>)>, SynthError> {
    plan_labeled_dataset(n, beta, seed, opts)
        .par_iter()
        .map(MatchPlan::render)
        .collect()
}

pub fn write_truth<W: std::io::Write>(w: W, truths: &[DribbleTruth]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "dribble_id",
        "event_id",
        "max_speed_att",
        "p90_torso_lean",
        "defender_stance_angle",
        "turn_deg",
        "touches",
        "planted_rule",
        "label",
    ])?;
    for t in truths {
        out.write_record([
            t.dribble_id.clone(),
            t.event_id.to_string(),
            t.max_speed_att.to_string(),
            t.p90_torso_lean.to_string(),
            t.defender_stance_angle.to_string(),
            t.turn_deg.to_string(),
            t.touches.map_or(String::new(), |v| v.to_string()),
            t.planted_rule.map_or(String::new(), |v| v.to_string()),
            u8::from(t.label).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

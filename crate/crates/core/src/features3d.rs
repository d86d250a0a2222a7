//! Pose-derived features: centre of mass, balance, ball control and the
//! attacker-defender interaction at the moment of passing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{BallControlConfig, TouchConfig};
use crate::pitch::{dist3d, midpoint, planar, vector_angle_deg, Vec2, Vec3};
use crate::skeleton::{JointName, Pose, SegmentTable};

/// Hip and torso vectors shorter than this are treated as degenerate.
const MIN_BODY_VECTOR_M: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoseFeatureError {
    #[error("joint {0} is not available")]
    MissingJoint(JointName),
    #[error("torso vector is too short to define a lean angle")]
    DegenerateTorso,
    #[error("hip vector is too short to define an orientation")]
    DegenerateHips,
}

fn joint(pose: &Pose, j: JointName) -> Result<Vec3, PoseFeatureError> {
    if pose.is_observed(j) {
        Ok(pose.joint(j))
    } else {
        Err(PoseFeatureError::MissingJoint(j))
    }
}

pub fn com_naive(pose: &Pose) -> Result<Vec3, PoseFeatureError> {
    if pose.is_observed(JointName::MidHip) {
        return Ok(pose.joint(JointName::MidHip));
    }
    let l = joint(pose, JointName::LeftHip).map_err(|_| PoseFeatureError::MissingJoint(JointName::MidHip))?;
    let r = joint(pose, JointName::RightHip).map_err(|_| PoseFeatureError::MissingJoint(JointName::MidHip))?;
    Ok(midpoint(l, r))
}

/// Mass-weighted sum of segment centres, each at `(1 - r) * proximal + r * distal`.
pub fn com_winter(pose: &Pose, table: &SegmentTable) -> Result<Vec3, PoseFeatureError> {
    let mut com = Vec3::zeros();
    for s in table.segments() {
        let a = joint(pose, s.proximal)?;
        let b = joint(pose, s.distal)?;
        com += (a * (1.0 - s.com_ratio) + b * s.com_ratio) * s.mass_fraction;
    }
    Ok(com)
}

/// Midpoint of the two ankles.
pub fn foot_midpoint(pose: &Pose) -> Result<Vec3, PoseFeatureError> {
    Ok(midpoint(
        joint(pose, JointName::LeftAnkle)?,
        joint(pose, JointName::RightAnkle)?,
    ))
}

/// Horizontal offset between the centre of mass and the foot midpoint.
pub fn imbalance(pose: &Pose, table: &SegmentTable) -> Result<f64, PoseFeatureError> {
    let com = com_winter(pose, table)?;
    Ok(imbalance_from(com, foot_midpoint(pose)?))
}

pub fn imbalance_from(com: Vec3, feet: Vec3) -> f64 {
    (planar(com) - planar(feet)).norm()
}

/// Angle between the midHip -> neck vector and vertical, in degrees.
pub fn torso_lean(pose: &Pose) -> Result<f64, PoseFeatureError> {
    let neck = joint(pose, JointName::Neck)?;
    let hip = com_naive(pose)?;
    let torso = neck - hip;
    let len = torso.norm();
    if len <= MIN_BODY_VECTOR_M {
        return Err(PoseFeatureError::DegenerateTorso);
    }
    Ok((torso.z / len).clamp(-1.0, 1.0).acos().to_degrees())
}

/// Linearly interpolated quantile (`q` in `[0, 1]`) of unsorted values.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Distance from the ball to the nearer big toe.
pub fn ball_foot_distance(ball: Vec3, pose: &Pose) -> Result<f64, PoseFeatureError> {
    let l = joint(pose, JointName::LeftBigToe)?;
    let r = joint(pose, JointName::RightBigToe)?;
    Ok(dist3d(ball, l).min(dist3d(ball, r)))
}

/// Mean ball-foot distance scaled by `max(P, floor)^alpha`.
pub fn ball_control(mean_distance: f64, mean_pressure: f64, cfg: &BallControlConfig) -> f64 {
    mean_distance * mean_pressure.max(cfg.pressure_floor).powf(cfg.alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Touch {
    pub frame: usize,
    pub distance: f64,
}

/// Strict local minima of the ball-toe distance below the threshold, at least
/// the refractory period after the previously accepted touch.
pub fn detect_touches(distances: &[f64], dt: f64, cfg: &TouchConfig) -> Vec<Touch> {
    let mut touches: Vec<Touch> = Vec::new();
    for k in 1..distances.len().saturating_sub(1) {
        let d = distances[k];
        if !(d < distances[k - 1] && d < distances[k + 1] && d < cfg.threshold_m) {
            continue;
        }
        if let Some(prev) = touches.last() {
            if ((k - prev.frame) as f64) * dt < cfg.refractory_s - 1e-9 {
                continue;
            }
        }
        touches.push(Touch { frame: k, distance: d });
    }
    touches
}

pub fn touch_frequency(touches: usize, duration_s: f64) -> f64 {
    if duration_s <= 0.0 {
        0.0
    } else {
        touches as f64 / duration_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// The leg whose heel is closer to the centre of mass; ties go left.
pub fn weighted_leg(pose: &Pose, table: &SegmentTable) -> Result<Side, PoseFeatureError> {
    let com = com_winter(pose, table)?;
    let l = dist3d(com, joint(pose, JointName::LeftHeel)?);
    let r = dist3d(com, joint(pose, JointName::RightHeel)?);
    Ok(if r < l { Side::Right } else { Side::Left })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub frame: usize,
    /// Side of the defender, as seen by the defender facing away from their own goal.
    pub side: Side,
}

/// First frame where the attacker gets goal-side of the line through the
/// defender perpendicular to the defender -> own-goal direction.
pub fn find_crossing(attacker: &[Vec2], defender: &[Vec2], own_goal: Vec2) -> Option<Crossing> {
    let signed = |k: usize| {
        let n = own_goal - defender[k];
        let n = if n.norm() > 0.0 { n / n.norm() } else { Vec2::new(1.0, 0.0) };
        let d = attacker[k] - defender[k];
        (d.dot(&n), n.x * d.y - n.y * d.x)
    };
    let mut prev = signed(0).0;
    for k in 1..attacker.len().min(defender.len()) {
        let (s, cross) = signed(k);
        if prev < 0.0 && s >= 0.0 {
            let side = if cross > 0.0 { Side::Right } else { Side::Left };
            return Some(Crossing { frame: k, side });
        }
        prev = s;
    }
    None
}

/// 1 when the attacker passes on the side opposite the defender's weighted leg.
pub fn side_pass(pass: Side, weighted: Side) -> f64 {
    if pass == weighted.opposite() {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Posture {
    SideOn,
    Intermediate,
    SquaredUp,
}

impl Posture {
    pub fn from_angle(deg: f64) -> Posture {
        if deg >= 150.0 {
            Posture::SquaredUp
        } else if deg >= 120.0 {
            Posture::Intermediate
        } else {
            Posture::SideOn
        }
    }

    pub fn code(self) -> f64 {
        match self {
            Posture::SideOn => 0.0,
            Posture::Intermediate => 1.0,
            Posture::SquaredUp => 2.0,
        }
    }
}

fn hip_vector(pose: &Pose) -> Result<Vec2, PoseFeatureError> {
    let v = planar(joint(pose, JointName::RightHip)? - joint(pose, JointName::LeftHip)?);
    if v.norm() <= MIN_BODY_VECTOR_M {
        return Err(PoseFeatureError::DegenerateHips);
    }
    Ok(v)
}

/// Angle between the horizontal left -> right hip vectors of both players.
pub fn stance_angle(attacker: &Pose, defender: &Pose) -> Result<(f64, Posture), PoseFeatureError> {
    let deg = vector_angle_deg(hip_vector(attacker)?, hip_vector(defender)?);
    Ok((deg, Posture::from_angle(deg)))
}

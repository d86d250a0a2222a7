//! The canonical 29-joint skeleton and the anthropometric segment table.
//!
//! Joint names follow the camelCase convention used in tracking files. The
//! schema is fixed; `midHip` may be omitted by a provider and is then derived
//! as the midpoint of the two hip joints.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pitch::{midpoint, Vec3};

pub const JOINT_COUNT: usize = 29;

macro_rules! joints {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum JointName {
            $(#[serde(rename = $name)] $variant),+
        }

        impl JointName {
            pub const ALL: [JointName; JOINT_COUNT] = [$(JointName::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(JointName::$variant => $name),+
                }
            }
        }

        impl FromStr for JointName {
            type Err = UnknownJoint;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(JointName::$variant),)+
                    _ => Err(UnknownJoint(s.to_string())),
                }
            }
        }
    };
}

joints! {
    Head => "head",
    LeftEye => "leftEye",
    RightEye => "rightEye",
    LeftEar => "leftEar",
    RightEar => "rightEar",
    Neck => "neck",
    LeftShoulder => "leftShoulder",
    RightShoulder => "rightShoulder",
    LeftElbow => "leftElbow",
    RightElbow => "rightElbow",
    LeftWrist => "leftWrist",
    RightWrist => "rightWrist",
    LeftPinky => "leftPinky",
    RightPinky => "rightPinky",
    LeftThumb => "leftThumb",
    RightThumb => "rightThumb",
    MidHip => "midHip",
    LeftHip => "leftHip",
    RightHip => "rightHip",
    LeftKnee => "leftKnee",
    RightKnee => "rightKnee",
    LeftAnkle => "leftAnkle",
    RightAnkle => "rightAnkle",
    LeftHeel => "leftHeel",
    RightHeel => "rightHeel",
    LeftBigToe => "leftBigToe",
    RightBigToe => "rightBigToe",
    LeftSmallToe => "leftSmallToe",
    RightSmallToe => "rightSmallToe",
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown joint name `{0}`")]
pub struct UnknownJoint(pub String);

impl JointName {
    pub fn index(self) -> usize {
        self as usize
    }

    /// The anatomically mirrored joint (left <-> right); midline joints map to themselves.
    pub fn mirrored(self) -> JointName {
        use JointName::*;
        match self {
            LeftEye => RightEye,
            RightEye => LeftEye,
            LeftEar => RightEar,
            RightEar => LeftEar,
            LeftShoulder => RightShoulder,
            RightShoulder => LeftShoulder,
            LeftElbow => RightElbow,
            RightElbow => LeftElbow,
            LeftWrist => RightWrist,
            RightWrist => LeftWrist,
            LeftPinky => RightPinky,
            RightPinky => LeftPinky,
            LeftThumb => RightThumb,
            RightThumb => LeftThumb,
            LeftHip => RightHip,
            RightHip => LeftHip,
            LeftKnee => RightKnee,
            RightKnee => LeftKnee,
            LeftAnkle => RightAnkle,
            RightAnkle => LeftAnkle,
            LeftHeel => RightHeel,
            RightHeel => LeftHeel,
            LeftBigToe => RightBigToe,
            RightBigToe => LeftBigToe,
            LeftSmallToe => RightSmallToe,
            RightSmallToe => LeftSmallToe,
            other => other,
        }
    }
}

impl fmt::Display for JointName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One sample of the full skeleton, with a per-joint observed flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    joints: [Vec3; JOINT_COUNT],
    observed: [bool; JOINT_COUNT],
}

impl Default for Pose {
    fn default() -> Self {
        Pose {
            joints: [Vec3::zeros(); JOINT_COUNT],
            observed: [false; JOINT_COUNT],
        }
    }
}

impl Pose {
    /// A pose with every joint observed at the given positions.
    pub fn from_fn(mut f: impl FnMut(JointName) -> Vec3) -> Self {
        let mut pose = Pose::default();
        for j in JointName::ALL {
            pose.set(j, f(j), true);
        }
        pose
    }

    pub fn uniform(p: Vec3) -> Self {
        Pose::from_fn(|_| p)
    }

    #[inline]
    pub fn joint(&self, j: JointName) -> Vec3 {
        self.joints[j.index()]
    }

    #[inline]
    pub fn is_observed(&self, j: JointName) -> bool {
        self.observed[j.index()]
    }

    pub fn set(&mut self, j: JointName, p: Vec3, observed: bool) {
        self.joints[j.index()] = p;
        self.observed[j.index()] = observed;
    }

    pub fn joints(&self) -> &[Vec3; JOINT_COUNT] {
        &self.joints
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|o| **o).count()
    }

    pub fn fully_observed(&self) -> bool {
        self.observed.iter().all(|o| *o)
    }

    /// Fills `midHip` from the hips when it was not provided.
    pub fn derive_mid_hip(&mut self) {
        use JointName::*;
        if !self.is_observed(MidHip) && self.is_observed(LeftHip) && self.is_observed(RightHip) {
            let m = midpoint(self.joint(LeftHip), self.joint(RightHip));
            self.set(MidHip, m, true);
        }
    }

    /// Applies `f` to every joint position, keeping the observed flags.
    pub fn map_positions(&self, mut f: impl FnMut(Vec3) -> Vec3) -> Pose {
        let mut out = *self;
        for p in out.joints.iter_mut() {
            *p = f(*p);
        }
        out
    }

    /// Swaps every left joint with its right counterpart.
    pub fn swap_sides(&self) -> Pose {
        let mut out = Pose::default();
        for j in JointName::ALL {
            out.set(j.mirrored(), self.joint(j), self.is_observed(j));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySegment {
    pub name: String,
    pub proximal: JointName,
    pub distal: JointName,
    pub mass_fraction: f64,
    pub com_ratio: f64,
}

#[derive(Debug, Error)]
pub enum SegmentTableError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("mass fractions sum to {0}, expected 1")]
    MassSum(f64),
    #[error("segment table is empty")]
    Empty,
}

/// Body segments with mass fraction and centre-of-mass ratio along each segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentTable {
    segments: Vec<BodySegment>,
}

const WINTER_TABLE: &str = include_str!("../data/winter_segments.csv");

impl SegmentTable {
    pub fn new(segments: Vec<BodySegment>) -> Result<Self, SegmentTableError> {
        if segments.is_empty() {
            return Err(SegmentTableError::Empty);
        }
        for (i, s) in segments.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.com_ratio) || !(s.mass_fraction >= 0.0) {
                return Err(SegmentTableError::Malformed {
                    line: i + 1,
                    reason: format!("segment `{}` has out-of-range ratio or mass", s.name),
                });
            }
        }
        let total: f64 = segments.iter().map(|s| s.mass_fraction).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(SegmentTableError::MassSum(total));
        }
        Ok(SegmentTable { segments })
    }

    /// Parses the `name,joint_a,joint_b,mass_fraction,com_ratio` format. Lines
    /// starting with `#` and the header line are skipped.
    pub fn parse(text: &str) -> Result<Self, SegmentTableError> {
        let mut segments = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("name,") {
                continue;
            }
            let malformed = |reason: String| SegmentTableError::Malformed { line: i + 1, reason };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(malformed(format!("expected 5 fields, got {}", fields.len())));
            }
            let joint = |s: &str| s.parse::<JointName>().map_err(|e| malformed(e.to_string()));
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| malformed(format!("`{s}`: {e}")))
            };
            segments.push(BodySegment {
                name: fields[0].to_string(),
                proximal: joint(fields[1])?,
                distal: joint(fields[2])?,
                mass_fraction: num(fields[3])?,
                com_ratio: num(fields[4])?,
            });
        }
        SegmentTable::new(segments)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SegmentTableError> {
        let text = std::fs::read_to_string(path).map_err(|e| SegmentTableError::Malformed {
            line: 0,
            reason: e.to_string(),
        })?;
        SegmentTable::parse(&text)
    }

    /// The bundled Winter table.
    pub fn winter() -> Self {
        SegmentTable::parse(WINTER_TABLE).expect("bundled segment table is valid")
    }

    pub fn segments(&self) -> &[BodySegment] {
        &self.segments
    }

    pub fn joints(&self) -> impl Iterator<Item = JointName> + '_ {
        self.segments.iter().flat_map(|s| [s.proximal, s.distal])
    }
}

impl Default for SegmentTable {
    fn default() -> Self {
        SegmentTable::winter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn schema_has_29_unique_names() {
        let names: HashSet<&str> = JointName::ALL.iter().map(|j| j.as_str()).collect();
        assert_eq!(names.len(), JOINT_COUNT);
        for (i, j) in JointName::ALL.iter().enumerate() {
            assert_eq!(j.index(), i);
            assert_eq!(j.as_str().parse::<JointName>().unwrap(), *j);
        }
        for required in [
            "neck", "leftHip", "rightHip", "midHip", "leftHeel", "rightHeel", "leftBigToe",
            "rightBigToe", "leftAnkle", "rightAnkle", "leftKnee", "rightKnee", "leftShoulder",
            "rightShoulder", "head",
        ] {
            assert!(names.contains(required), "{required}");
        }
    }

    #[test]
    fn mirroring_is_an_involution() {
        for j in JointName::ALL {
            assert_eq!(j.mirrored().mirrored(), j);
        }
        assert_eq!(JointName::LeftHeel.mirrored(), JointName::RightHeel);
        assert_eq!(JointName::Neck.mirrored(), JointName::Neck);
    }

    #[test]
    fn mid_hip_is_derived_when_absent() {
        let mut pose = Pose::default();
        pose.set(JointName::LeftHip, Vec3::new(0.0, 0.2, 1.0), true);
        pose.set(JointName::RightHip, Vec3::new(0.0, -0.2, 1.0), true);
        pose.derive_mid_hip();
        assert!(pose.is_observed(JointName::MidHip));
        assert_eq!(pose.joint(JointName::MidHip), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn provided_mid_hip_is_kept() {
        let mut pose = Pose::uniform(Vec3::new(0.0, 0.0, 1.0));
        pose.set(JointName::MidHip, Vec3::new(0.1, 0.0, 0.9), true);
        pose.derive_mid_hip();
        assert_eq!(pose.joint(JointName::MidHip), Vec3::new(0.1, 0.0, 0.9));
    }

    #[test]
    fn winter_table_is_normalised() {
        let table = SegmentTable::winter();
        let total: f64 = table.segments().iter().map(|s| s.mass_fraction).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(table.segments().iter().all(|s| (0.0..=1.0).contains(&s.com_ratio)));
    }

    #[test]
    fn table_rejects_bad_mass_sum() {
        let err = SegmentTable::parse("a,neck,head,0.5,0.5\n").unwrap_err();
        assert!(matches!(err, SegmentTableError::MassSum(_)));
        let err = SegmentTable::parse("a,neck,nose,1.0,0.5\n").unwrap_err();
        assert!(matches!(err, SegmentTableError::Malformed { line: 1, .. }));
    }
}

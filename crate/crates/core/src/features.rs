//! The feature catalogue, per-dribble extraction and the feature table file.
//!
//! Table columns are fixed: `dribble_id, start_x, start_y`, the 14 selected
//! features, the extra aggregations, then `label`.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::features2d::{dist_to_goal, dist_to_sideline, pressure_at, relative_speed_stats};
use crate::features3d::{
    ball_control, ball_foot_distance, detect_touches, find_crossing, imbalance, quantile,
    side_pass, stance_angle, torso_lean, touch_frequency, weighted_leg, PoseFeatureError,
};
use crate::ingest::MatchBundle;
use crate::kinematics::{accel_stats, detect_turns, max_direction_change, max_frame_heading_change, speed_stats, MeanMax};
use crate::pitch::Vec2;
use crate::segment::{build_dataset, FilterReport, PreparedDribble};
use crate::skeleton::SegmentTable;

macro_rules! features {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Feature {
            $(#[serde(rename = $name)] $variant),+
        }

        impl Feature {
            /// Every column in table order.
            pub const ALL: [Feature; FEATURE_COUNT] = [$(Feature::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(Feature::$variant => $name),+
                }
            }
        }

        impl FromStr for Feature {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(Feature::$variant),)+
                    _ => Err(format!("unknown feature `{s}`")),
                }
            }
        }
    };
}

pub const FEATURE_COUNT: usize = 21;

features! {
    DistSidelineAtt => "dist_sideline_att",
    DistGoalAtt => "dist_goal_att",
    MaxSpeedAtt => "max_speed_att",
    MaxSpeedDef => "max_speed_def",
    MaxAccelAtt => "max_accel_att",
    MaxDirChangeAtt => "max_dir_change_att",
    MaxRelSpeed => "max_rel_speed",
    AvgPressure => "avg_pressure",
    AvgNormBallFootDist => "avg_norm_ball_foot_dist",
    TouchFrequency => "touch_frequency",
    AvgImbalance => "avg_imbalance",
    P90TorsoLean => "p90_torso_lean",
    PassSideVsWeightedLeg => "pass_side_vs_weighted_leg",
    DefenderStanceAngle => "defender_stance_angle",
    AvgSpeedAtt => "avg_speed_att",
    AvgAccelAtt => "avg_accel_att",
    AvgRelSpeed => "avg_rel_speed",
    MaxPressure => "max_pressure",
    MaxFrameHeadingChangeAtt => "max_frame_heading_change_att",
    DefenderStanceClass => "defender_stance_class",
    PassedDefender => "passed_defender",
}

impl Feature {
    pub const TWO_D: [Feature; 8] = [
        Feature::DistSidelineAtt,
        Feature::DistGoalAtt,
        Feature::MaxSpeedAtt,
        Feature::MaxSpeedDef,
        Feature::MaxAccelAtt,
        Feature::MaxDirChangeAtt,
        Feature::MaxRelSpeed,
        Feature::AvgPressure,
    ];

    pub const THREE_D: [Feature; 6] = [
        Feature::AvgNormBallFootDist,
        Feature::TouchFrequency,
        Feature::AvgImbalance,
        Feature::P90TorsoLean,
        Feature::PassSideVsWeightedLeg,
        Feature::DefenderStanceAngle,
    ];

    /// The 14 model features, 2D first.
    pub const SELECTED: [Feature; 14] = [
        Feature::DistSidelineAtt,
        Feature::DistGoalAtt,
        Feature::MaxSpeedAtt,
        Feature::MaxSpeedDef,
        Feature::MaxAccelAtt,
        Feature::MaxDirChangeAtt,
        Feature::MaxRelSpeed,
        Feature::AvgPressure,
        Feature::AvgNormBallFootDist,
        Feature::TouchFrequency,
        Feature::AvgImbalance,
        Feature::P90TorsoLean,
        Feature::PassSideVsWeightedLeg,
        Feature::DefenderStanceAngle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_selected(self) -> bool {
        self.index() < Feature::SELECTED.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dribble_id: String,
    /// Attacker position at the first frame, used by the grid baseline.
    pub start: Vec2,
    pub values: [f64; FEATURE_COUNT],
    pub label: bool,
}

impl FeatureVector {
    pub fn get(&self, f: Feature) -> f64 {
        self.values[f.index()]
    }

    pub fn set(&mut self, f: Feature, v: f64) {
        self.values[f.index()] = v;
    }

    pub fn select(&self, features: &[Feature]) -> Vec<f64> {
        features.iter().map(|f| self.get(*f)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Pose(#[from] PoseFeatureError),
    #[error("no frame with a usable torso")]
    NoLeanSamples,
    #[error("feature {0} is not finite")]
    NonFinite(&'static str),
}

/// Everything computed for one dribble, including intermediates useful for
/// inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub vector: FeatureVector,
    pub touches: usize,
    pub crossing_frame: Option<usize>,
}

pub fn extract(d: &PreparedDribble, cfg: &Config, table: &SegmentTable) -> Result<Extraction, FeatureError> {
    let n = d.len();
    let pitch = &d.pitch;
    let goal = pitch.attacking_goal();
    let att = &d.attacker;
    let def = &d.defender;
    let mut v = FeatureVector {
        dribble_id: d.segment.dribble_id.clone(),
        start: att.centroids[0],
        values: [0.0; FEATURE_COUNT],
        label: d.segment.label,
    };

    let att_speed = speed_stats(&att.kinematics).expect("non-empty window");
    let def_speed = speed_stats(&def.kinematics).expect("non-empty window");
    let att_accel = accel_stats(&att.kinematics).expect("non-empty window");
    let rel = relative_speed_stats(&att.kinematics.planar_speeds(), &def.kinematics.planar_speeds())
        .expect("non-empty window");
    let turns = detect_turns(&att.kinematics, &cfg.kinematics);
    let pressures: Vec<f64> = (0..n)
        .map(|k| pressure_at(att.centroids[k], goal, d.opponents_at(k), &cfg.pressure))
        .collect();
    let pressure = MeanMax::of(&pressures).expect("non-empty window");

    v.set(Feature::DistSidelineAtt, dist_to_sideline(att.centroids[0], pitch));
    v.set(Feature::DistGoalAtt, dist_to_goal(att.centroids[0], pitch));
    v.set(Feature::MaxSpeedAtt, att_speed.max);
    v.set(Feature::MaxSpeedDef, def_speed.max);
    v.set(Feature::MaxAccelAtt, att_accel.max);
    v.set(Feature::MaxDirChangeAtt, max_direction_change(&turns));
    v.set(Feature::MaxRelSpeed, rel.max);
    v.set(Feature::AvgPressure, pressure.mean);
    v.set(Feature::AvgSpeedAtt, att_speed.mean);
    v.set(Feature::AvgAccelAtt, att_accel.mean);
    v.set(Feature::AvgRelSpeed, rel.mean);
    v.set(Feature::MaxPressure, pressure.max);
    v.set(
        Feature::MaxFrameHeadingChangeAtt,
        max_frame_heading_change(&att.kinematics, cfg.kinematics.min_heading_speed),
    );

    let ball_foot = (0..n)
        .map(|k| ball_foot_distance(d.ball[k], &att.poses[k]))
        .collect::<Result<Vec<f64>, _>>()?;
    let mean_ball_foot = ball_foot.iter().sum::<f64>() / n as f64;
    v.set(
        Feature::AvgNormBallFootDist,
        ball_control(mean_ball_foot, pressure.mean, &cfg.ball_control),
    );
    let touches = detect_touches(&ball_foot, d.dt(), &cfg.touch);
    v.set(Feature::TouchFrequency, touch_frequency(touches.len(), d.segment.duration()));

    let imb = (0..n)
        .map(|k| imbalance(&att.poses[k], table))
        .collect::<Result<Vec<f64>, _>>()?;
    v.set(Feature::AvgImbalance, imb.iter().sum::<f64>() / n as f64);
    let leans: Vec<f64> = att.poses.iter().filter_map(|p| torso_lean(p).ok()).collect();
    v.set(
        Feature::P90TorsoLean,
        quantile(&leans, 0.9).ok_or(FeatureError::NoLeanSamples)?,
    );

    let crossing = find_crossing(&att.centroids, &def.centroids, goal);
    let stance_frame = crossing.map_or(n - 1, |c| c.frame);
    if let Some(c) = crossing {
        let leg = weighted_leg(&def.poses[c.frame], table)?;
        v.set(Feature::PassSideVsWeightedLeg, side_pass(c.side, leg));
        v.set(Feature::PassedDefender, 1.0);
    }
    let (stance, posture) = stance_angle(&att.poses[stance_frame], &def.poses[stance_frame])?;
    v.set(Feature::DefenderStanceAngle, stance);
    v.set(Feature::DefenderStanceClass, posture.code());

    if let Some(f) = Feature::ALL.iter().find(|f| !v.get(**f).is_finite()) {
        return Err(FeatureError::NonFinite(f.name()));
    }
    Ok(Extraction {
        vector: v,
        touches: touches.len(),
        crossing_frame: crossing.map(|c| c.frame),
    })
}

/// Feature rows for every passing take-on, with dribbles whose features
/// cannot be computed listed separately.
#[derive(Debug, Clone, Default)]
pub struct ExtractedMatch {
    pub rows: Vec<FeatureVector>,
    pub report: FilterReport,
    pub failures: Vec<(String, FeatureError)>,
}

pub fn extract_match(bundle: &MatchBundle, cfg: &Config, table: &SegmentTable) -> ExtractedMatch {
    let ds = build_dataset(bundle, cfg);
    let results: Vec<_> = ds
        .dribbles
        .par_iter()
        .map(|d| (d.segment.dribble_id.clone(), extract(d, cfg, table)))
        .collect();
    let mut out = ExtractedMatch {
        report: ds.report,
        ..ExtractedMatch::default()
    };
    for (id, r) in results {
        match r {
            Ok(e) => out.rows.push(e.vector),
            Err(e) => {
                log::warn!("dribble {id}: {e}");
                out.failures.push((id, e));
            }
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("header does not match the feature table layout")]
    Header,
}

pub fn header() -> Vec<&'static str> {
    let mut h = vec!["dribble_id", "start_x", "start_y"];
    h.extend(Feature::ALL.iter().map(|f| f.name()));
    h.push("label");
    h
}

pub fn write_table<W: Write>(w: W, rows: &[FeatureVector]) -> Result<(), TableError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header())?;
    for r in rows {
        let mut rec = vec![r.dribble_id.clone(), r.start.x.to_string(), r.start.y.to_string()];
        rec.extend(r.values.iter().map(f64::to_string));
        rec.push(u8::from(r.label).to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(r: R) -> Result<Vec<FeatureVector>, TableError> {
    let mut rdr = csv::Reader::from_reader(r);
    if rdr.headers()?.iter().ne(header()) {
        return Err(TableError::Header);
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let num = |k: usize| -> Result<f64, TableError> {
            let s = rec.get(k).unwrap_or("");
            let v: f64 = s.parse().map_err(|_| TableError::Malformed {
                row,
                reason: format!("column {} is not a number: `{s}`", header()[k]),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(TableError::Malformed { row, reason: format!("column {} is not finite", header()[k]) })
            }
        };
        let mut values = [0.0; FEATURE_COUNT];
        for (j, v) in values.iter_mut().enumerate() {
            *v = num(3 + j)?;
        }
        let label = match rec.get(3 + FEATURE_COUNT) {
            Some("1") => true,
            Some("0") => false,
            other => {
                return Err(TableError::Malformed {
                    row,
                    reason: format!("label must be 0 or 1, got {other:?}"),
                })
            }
        };
        rows.push(FeatureVector {
            dribble_id: rec[0].to_string(),
            start: Vec2::new(num(1)?, num(2)?),
            values,
            label,
        });
    }
    Ok(rows)
}

pub fn save_table(path: &Path, rows: &[FeatureVector]) -> Result<(), TableError> {
    write_table(std::io::BufWriter::new(std::fs::File::create(path)?), rows)
}

pub fn load_table(path: &Path) -> Result<Vec<FeatureVector>, TableError> {
    read_table(std::io::BufReader::new(std::fs::File::open(path)?))
}

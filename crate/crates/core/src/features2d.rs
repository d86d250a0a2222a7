//! Location, relative-speed and pressure features from 2D positions.

use crate::config::PressureConfig;
use crate::kinematics::MeanMax;
use crate::pitch::{Pitch, Vec2};

/// Distance to the nearer sideline.
pub fn dist_to_sideline(pos: Vec2, pitch: &Pitch) -> f64 {
    let (y_min, y_max) = pitch.sidelines();
    (pos.y - y_min).abs().min((pos.y - y_max).abs())
}

/// Distance to the centre of the goal being attacked.
pub fn dist_to_goal(pos: Vec2, pitch: &Pitch) -> f64 {
    (pos - pitch.attacking_goal()).norm()
}

/// Mean and max of `v_att(t) - v_def(t)`.
pub fn relative_speed_stats(attacker: &[f64], defender: &[f64]) -> Option<MeanMax> {
    debug_assert_eq!(attacker.len(), defender.len());
    let diff: Vec<f64> = attacker.iter().zip(defender).map(|(a, d)| a - d).collect();
    MeanMax::of(&diff)
}

/// Radius of the pressure zone for an opponent at angle `cos_phi` from the
/// attacker's goal direction.
fn zone_radius(cos_phi: f64, cfg: &PressureConfig) -> f64 {
    cfg.d_back_m + (cfg.d_front_m - cfg.d_back_m) * ((1.0 + cos_phi) / 2.0).powf(cfg.z_exp)
}

/// Pressure contribution of one opponent.
pub fn opponent_pressure(attacker: Vec2, goal: Vec2, opponent: Vec2, cfg: &PressureConfig) -> f64 {
    let to_opp = opponent - attacker;
    let d = to_opp.norm();
    if d == 0.0 {
        return 1.0;
    }
    let to_goal = goal - attacker;
    let cos_phi = if to_goal.norm() == 0.0 {
        to_opp.x / d
    } else {
        to_goal.dot(&to_opp) / (to_goal.norm() * d)
    };
    let l = zone_radius(cos_phi.clamp(-1.0, 1.0), cfg);
    if d < l {
        ((l - d) / l).powf(cfg.q)
    } else {
        0.0
    }
}

/// Summed pressure of all opponents on the attacker in one frame.
pub fn pressure_at(
    attacker: Vec2,
    goal: Vec2,
    opponents: impl IntoIterator<Item = Vec2>,
    cfg: &PressureConfig,
) -> f64 {
    opponents
        .into_iter()
        .map(|o| opponent_pressure(attacker, goal, o, cfg))
        .sum()
}

pub fn pressure_stats(per_frame: &[f64]) -> Option<MeanMax> {
    MeanMax::of(per_frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sideline_distance() {
        let p = Pitch::default();
        assert_eq!(dist_to_sideline(Vec2::new(10.0, 0.0), &p), 34.0);
        assert_eq!(dist_to_sideline(Vec2::new(10.0, 30.0), &p), 4.0);
        assert_eq!(dist_to_sideline(Vec2::new(10.0, -34.0), &p), 0.0);
    }

    #[test]
    fn goal_distance() {
        let p = Pitch::default();
        assert!((dist_to_goal(Vec2::new(41.5, 0.0), &p) - 11.0).abs() < 1e-12);
        assert!((dist_to_goal(Vec2::new(49.5, 4.0), &p) - 5.0).abs() < 1e-12);
        assert_eq!(dist_to_goal(Vec2::new(52.5, 0.0), &p), 0.0);
    }

    #[test]
    fn relative_speed() {
        let eq = relative_speed_stats(&[3.0, 4.0, 5.0], &[3.0, 4.0, 5.0]).unwrap();
        assert_eq!((eq.mean, eq.max), (0.0, 0.0));
        let c = relative_speed_stats(&[6.0; 10], &[4.0; 10]).unwrap();
        assert_eq!((c.mean, c.max), (2.0, 2.0));
        let x = relative_speed_stats(&[1.0, 3.0, 6.0, 2.0], &[5.0, 3.0, 1.0, 4.0]).unwrap();
        assert!(x.max >= x.mean);
    }

    #[test]
    fn pressure_examples() {
        let cfg = PressureConfig::default();
        let att = Vec2::new(0.0, 0.0);
        let goal = Vec2::new(52.5, 0.0);
        // outside the 9 m front radius and every other radius
        assert_eq!(pressure_at(att, goal, [Vec2::new(9.5, 0.0), Vec2::new(-4.0, 0.0)], &cfg), 0.0);
        assert_eq!(pressure_at(att, goal, [att], &cfg), 1.0);
        let half = pressure_at(att, goal, [Vec2::new(4.5, 0.0)], &cfg);
        assert!((half - 0.5f64.powf(1.75)).abs() < 1e-12);
        assert!((half - 0.2973).abs() < 1e-4);
        // behind the attacker the zone shrinks to the 3 m back radius
        let back = pressure_at(att, goal, [Vec2::new(-1.5, 0.0)], &cfg);
        assert!((back - 0.5f64.powf(1.75)).abs() < 1e-12);
        // lateral: L = 3 + 6 * 0.5^3 = 3.75
        let side = pressure_at(att, goal, [Vec2::new(0.0, 1.875)], &cfg);
        assert!((side - 0.5f64.powf(1.75)).abs() < 1e-12);
    }

    #[test]
    fn pressure_summaries() {
        assert!(pressure_stats(&[0.0; 20]).unwrap().max == 0.0);
        let c = pressure_stats(&[0.3; 20]).unwrap();
        assert!((c.mean - 0.3).abs() < 1e-12 && c.max == 0.3);
        let v = pressure_stats(&[0.1, 0.7, 0.2]).unwrap();
        assert!(v.max >= v.mean);
    }

    proptest! {
        #[test]
        fn pressure_is_rigid_motion_invariant(
            att in (-40.0..40.0f64, -30.0..30.0f64),
            rel in (-8.0..8.0f64, -8.0..8.0f64),
            rot in 0.0..std::f64::consts::TAU,
            shift in (-20.0..20.0f64, -20.0..20.0f64),
        ) {
            let cfg = PressureConfig::default();
            let goal = Vec2::new(52.5, 0.0);
            let a = Vec2::new(att.0, att.1);
            let o = a + Vec2::new(rel.0, rel.1);
            let base = opponent_pressure(a, goal, o, &cfg);
            let r = nalgebra::Rotation2::new(rot);
            let t = Vec2::new(shift.0, shift.1);
            let m = |p: Vec2| r * p + t;
            let moved = opponent_pressure(m(a), m(goal), m(o), &cfg);
            prop_assert!((base - moved).abs() < 1e-9);
        }

        #[test]
        fn pressure_decreases_with_distance(
            bearing in 0.0..std::f64::consts::TAU,
            d1 in 0.0..10.0f64,
            extra in 0.0..5.0f64,
        ) {
            let cfg = PressureConfig::default();
            let dir = Vec2::new(bearing.cos(), bearing.sin());
            let a = Vec2::new(0.0, 0.0);
            let goal = Vec2::new(52.5, 0.0);
            let near = opponent_pressure(a, goal, dir * d1, &cfg);
            let far = opponent_pressure(a, goal, dir * (d1 + extra), &cfg);
            prop_assert!(far <= near + 1e-12);
        }
    }
}

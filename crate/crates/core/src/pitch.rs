//! Pitch geometry and the small vector helpers every feature is built on.
//!
//! Coordinates are metres in a centre-origin frame with `z` pointing up. After
//! direction normalisation the attacking side of a dribble plays toward `+x`,
//! so the opponent's goal sits at `(length / 2, 0)`.

use serde::{Deserialize, Serialize};

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Pitch {
    pub length: f64,
    pub width: f64,
}

impl Default for Pitch {
    fn default() -> Self {
        Pitch {
            length: 105.0,
            width: 68.0,
        }
    }
}

impl Pitch {
    pub fn new(length: f64, width: f64) -> Option<Self> {
        (length > 0.0 && width > 0.0 && length.is_finite() && width.is_finite())
            .then_some(Pitch { length, width })
    }

    /// `y` of the two sidelines, `(y_min, y_max)`.
    pub fn sidelines(&self) -> (f64, f64) {
        (-self.width / 2.0, self.width / 2.0)
    }

    /// Centre of the goal the normalised attacking team is playing toward.
    pub fn attacking_goal(&self) -> Vec2 {
        Vec2::new(self.length / 2.0, 0.0)
    }

    pub fn defending_goal(&self) -> Vec2 {
        Vec2::new(-self.length / 2.0, 0.0)
    }

    pub fn contains(&self, p: Vec2, margin: f64) -> bool {
        p.x.abs() <= self.length / 2.0 + margin && p.y.abs() <= self.width / 2.0 + margin
    }
}

pub fn midpoint(a: Vec3, b: Vec3) -> Vec3 {
    (a + b) * 0.5
}

pub fn dist2d(a: Vec2, b: Vec2) -> f64 {
    (a - b).norm()
}

pub fn dist3d(a: Vec3, b: Vec3) -> f64 {
    (a - b).norm()
}

pub fn planar(p: Vec3) -> Vec2 {
    Vec2::new(p.x, p.y)
}

/// Wraps an angle difference in degrees into `(-180, 180]`.
pub fn wrap_degrees(mut d: f64) -> f64 {
    d %= 360.0;
    if d > 180.0 {
        d -= 360.0;
    } else if d <= -180.0 {
        d += 360.0;
    }
    d
}

/// Absolute angular difference folded into `[0, 180]`.
pub fn angle_between_headings(a: f64, b: f64) -> f64 {
    wrap_degrees(b - a).abs()
}

/// Angle in degrees between two vectors, in `[0, 180]`.
pub fn vector_angle_deg(a: Vec2, b: Vec2) -> f64 {
    a.perp(&b).abs().atan2(a.dot(&b)).to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn midpoint_examples() {
        assert_eq!(
            midpoint(Vec3::new(0., 0., 0.), Vec3::new(2., 0., 0.)),
            Vec3::new(1., 0., 0.)
        );
        assert_eq!(
            midpoint(Vec3::new(1., 1., 1.), Vec3::new(1., 1., 1.)),
            Vec3::new(1., 1., 1.)
        );
        assert_eq!(
            midpoint(Vec3::new(-3., 4., 0.), Vec3::new(3., -4., 2.)),
            Vec3::new(0., 0., 1.)
        );
    }

    #[test]
    fn distance_examples() {
        assert_eq!(dist2d(Vec2::new(0., 0.), Vec2::new(3., 4.)), 5.0);
        assert_eq!(dist2d(Vec2::new(1.5, -2.), Vec2::new(1.5, -2.)), 0.0);
        assert_eq!(dist3d(Vec3::new(0., 0., 0.), Vec3::new(1., 2., 2.)), 3.0);
    }

    #[test]
    fn pitch_geometry() {
        let p = Pitch::default();
        assert_eq!(p.sidelines(), (-34.0, 34.0));
        assert_eq!(p.attacking_goal(), Vec2::new(52.5, 0.0));
        assert!(Pitch::new(0.0, 68.0).is_none());
        assert!(Pitch::new(105.0, -1.0).is_none());
    }

    #[test]
    fn heading_fold() {
        assert!((angle_between_headings(170.0, -170.0) - 20.0).abs() < 1e-12);
        assert!((angle_between_headings(-90.0, 90.0) - 180.0).abs() < 1e-12);
        assert!((angle_between_headings(10.0, 40.0) - 30.0).abs() < 1e-12);
    }

    fn coord() -> impl Strategy<Value = f64> {
        -100.0..100.0f64
    }

    proptest! {
        #[test]
        fn dist3d_is_a_metric(
            a in (coord(), coord(), coord()),
            b in (coord(), coord(), coord()),
            c in (coord(), coord(), coord()),
        ) {
            let (a, b, c) = (Vec3::new(a.0, a.1, a.2), Vec3::new(b.0, b.1, b.2), Vec3::new(c.0, c.1, c.2));
            prop_assert!(dist3d(a, b) >= 0.0);
            prop_assert_eq!(dist3d(a, b), dist3d(b, a));
            prop_assert_eq!(dist3d(a, a), 0.0);
            prop_assert!(dist3d(a, c) <= dist3d(a, b) + dist3d(b, c) + 1e-9);
            if a != b {
                prop_assert!(dist3d(a, b) > 0.0);
            }
        }

        #[test]
        fn dist2d_is_a_metric(a in (coord(), coord()), b in (coord(), coord()), c in (coord(), coord())) {
            let (a, b, c) = (Vec2::new(a.0, a.1), Vec2::new(b.0, b.1), Vec2::new(c.0, c.1));
            prop_assert_eq!(dist2d(a, b), dist2d(b, a));
            prop_assert!(dist2d(a, c) <= dist2d(a, b) + dist2d(b, c) + 1e-9);
        }

        #[test]
        fn folded_angle_in_range(a in -720.0..720.0f64, b in -720.0..720.0f64) {
            let d = angle_between_headings(a, b);
            prop_assert!((0.0..=180.0).contains(&d));
        }
    }
}

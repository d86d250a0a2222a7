//! Gap filling and numerical derivatives.
//!
//! Interior gaps are filled with a natural cubic spline through every valid
//! sample of the series; gaps that touch either end hold the nearest valid
//! value. Derivatives are central differences (one-sided at the ends), each
//! order smoothed with a centred moving average whose window shrinks
//! symmetrically near the boundaries, so linear signals pass through exactly.

use thiserror::Error;

use crate::pitch::{Vec2, Vec3};
use crate::skeleton::{JointName, Pose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreprocessError {
    #[error("spline needs at least 4 valid samples, found {valid}")]
    InsufficientKnots { valid: usize },
    #[error("gap of {len} frames exceeds the fill limit of {max}")]
    GapTooLong { len: usize, max: usize },
    #[error("series has no valid samples")]
    NoValidSamples,
    #[error("track of {len} samples is shorter than the smoothing window {window}")]
    TrackTooShort { len: usize, window: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    Leading,
    Interior,
    Trailing,
    /// Nothing valid at all.
    Whole,
}

/// Maximal run of invalid samples, `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gap {
    pub start: usize,
    pub end: usize,
    pub kind: GapKind,
}

impl Gap {
    pub fn frames(&self) -> usize {
        self.end - self.start + 1
    }
}

pub fn detect_gaps(valid: &[bool]) -> Vec<Gap> {
    let n = valid.len();
    let mut gaps = Vec::new();
    let mut i = 0;
    while i < n {
        if valid[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && !valid[i] {
            i += 1;
        }
        let end = i - 1;
        let kind = match (start == 0, end == n - 1) {
            (true, true) => GapKind::Whole,
            (true, false) => GapKind::Leading,
            (false, true) => GapKind::Trailing,
            (false, false) => GapKind::Interior,
        };
        gaps.push(Gap { start, end, kind });
    }
    gaps
}

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivative at each knot; zero at both ends.
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, PreprocessError> {
        assert_eq!(xs.len(), ys.len());
        let n = xs.len();
        if n < 2 {
            return Err(PreprocessError::InsufficientKnots { valid: n });
        }
        debug_assert!(xs.windows(2).all(|w| w[0] < w[1]));
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let k = n - 2;
            let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for r in 0..k {
                let i = r + 1;
                diag[r] = 2.0 * (h[i - 1] + h[i]);
                upper[r] = h[i];
                rhs[r] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
            }
            for r in 1..k {
                let lower = h[r];
                let w = lower / diag[r - 1];
                diag[r] -= w * upper[r - 1];
                rhs[r] -= w * rhs[r - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for r in (0..k - 1).rev() {
                m[r + 1] = (rhs[r] - upper[r] * m[r + 2]) / diag[r];
            }
        }
        Ok(NaturalCubicSpline { xs, ys, m })
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.xs.len();
        self.xs.partition_point(|k| *k <= x).clamp(1, n - 1) - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.interval(x);
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - x, x - x0);
        self.m[k] * a.powi(3) / (6.0 * h)
            + self.m[k + 1] * b.powi(3) / (6.0 * h)
            + (self.ys[k] / h - self.m[k] * h / 6.0) * a
            + (self.ys[k + 1] / h - self.m[k + 1] * h / 6.0) * b
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let k = self.interval(x);
        let h = self.xs[k + 1] - self.xs[k];
        (self.m[k] * (self.xs[k + 1] - x) + self.m[k + 1] * (x - self.xs[k])) / h
    }

    pub fn knot_second_derivatives(&self) -> &[f64] {
        &self.m
    }
}

fn hold_boundary(out: &mut [f64], valid: &[bool], gap: &Gap) {
    let fill = match gap.kind {
        GapKind::Leading => out[gap.end + 1],
        GapKind::Trailing => out[gap.start - 1],
        _ => return,
    };
    debug_assert!(valid[if gap.kind == GapKind::Leading { gap.end + 1 } else { gap.start - 1 }]);
    out[gap.start..=gap.end].fill(fill);
}

fn spline_through_valid(series: &[f64], valid: &[bool]) -> Result<NaturalCubicSpline, PreprocessError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .iter()
        .zip(valid)
        .enumerate()
        .filter(|(_, (_, ok))| **ok)
        .map(|(i, (v, _))| (i as f64, *v))
        .unzip();
    if xs.len() < 4 {
        return Err(PreprocessError::InsufficientKnots { valid: xs.len() });
    }
    NaturalCubicSpline::new(xs, ys)
}

/// Fills one gap. Interior gaps use the spline through all valid samples,
/// boundary gaps hold the nearest valid value.
pub fn spline_fill(series: &[f64], valid: &[bool], gap: &Gap) -> Result<Vec<f64>, PreprocessError> {
    let mut out = series.to_vec();
    match gap.kind {
        GapKind::Whole => return Err(PreprocessError::NoValidSamples),
        GapKind::Leading | GapKind::Trailing => hold_boundary(&mut out, valid, gap),
        GapKind::Interior => {
            let spline = spline_through_valid(series, valid)?;
            for (i, v) in out.iter_mut().enumerate().take(gap.end + 1).skip(gap.start) {
                *v = spline.eval(i as f64);
            }
        }
    }
    Ok(out)
}

/// Fills every gap of a series, refusing gaps longer than `max_gap`.
pub fn fill_series(series: &[f64], valid: &[bool], max_gap: usize) -> Result<Vec<f64>, PreprocessError> {
    let gaps = detect_gaps(valid);
    if let Some(g) = gaps.iter().find(|g| g.kind == GapKind::Whole) {
        debug_assert_eq!(g.frames(), series.len());
        return Err(PreprocessError::NoValidSamples);
    }
    if let Some(g) = gaps.iter().find(|g| g.frames() > max_gap) {
        return Err(PreprocessError::GapTooLong { len: g.frames(), max: max_gap });
    }
    let mut out = series.to_vec();
    let spline = if gaps.iter().any(|g| g.kind == GapKind::Interior) {
        Some(spline_through_valid(series, valid)?)
    } else {
        None
    };
    for g in &gaps {
        match (g.kind, &spline) {
            (GapKind::Interior, Some(s)) => {
                for i in g.start..=g.end {
                    out[i] = s.eval(i as f64);
                }
            }
            _ => hold_boundary(&mut out, valid, g),
        }
    }
    Ok(out)
}

/// Fills a 2D track axis by axis.
pub fn fill_points2(points: &[Vec2], valid: &[bool], max_gap: usize) -> Result<Vec<Vec2>, PreprocessError> {
    let x = fill_series(&points.iter().map(|p| p.x).collect::<Vec<_>>(), valid, max_gap)?;
    let y = fill_series(&points.iter().map(|p| p.y).collect::<Vec<_>>(), valid, max_gap)?;
    Ok(x.into_iter().zip(y).map(|(x, y)| Vec2::new(x, y)).collect())
}

/// Fills a 3D track axis by axis.
pub fn fill_points3(points: &[Vec3], valid: &[bool], max_gap: usize) -> Result<Vec<Vec3>, PreprocessError> {
    let mut axes = (0..3).map(|a| {
        fill_series(&points.iter().map(|p| p[a]).collect::<Vec<_>>(), valid, max_gap)
    });
    let (x, y, z) = (axes.next().unwrap()?, axes.next().unwrap()?, axes.next().unwrap()?);
    Ok((0..points.len()).map(|i| Vec3::new(x[i], y[i], z[i])).collect())
}

/// Fills every joint of a pose sequence; `None` marks frames where the player
/// is absent. Returned poses are fully observed.
pub fn fill_poses(poses: &[Option<Pose>], max_gap: usize) -> Result<Vec<Pose>, PreprocessError> {
    let mut out = vec![Pose::default(); poses.len()];
    for j in JointName::ALL {
        let valid: Vec<bool> = poses
            .iter()
            .map(|p| p.is_some_and(|p| p.is_observed(j)))
            .collect();
        let pts: Vec<Vec3> = poses
            .iter()
            .map(|p| p.map_or(Vec3::zeros(), |p| p.joint(j)))
            .collect();
        let filled = if valid.iter().all(|v| *v) {
            pts
        } else {
            fill_points3(&pts, &valid, max_gap)?
        };
        for (pose, p) in out.iter_mut().zip(filled) {
            pose.set(j, p, true);
        }
    }
    Ok(out)
}

/// Central differences with one-sided differences at the two ends.
pub fn finite_difference(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    (x[1] - x[0]) / dt
                } else if i == n - 1 {
                    (x[n - 1] - x[n - 2]) / dt
                } else {
                    (x[i + 1] - x[i - 1]) / (2.0 * dt)
                }
            })
            .collect(),
    }
}

/// Centred moving average; the window shrinks symmetrically near the ends.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let half = window / 2;
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            x[i - h..=i + h].iter().sum::<f64>() / (2 * h + 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisKinematics {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
    pub jerk: Vec<f64>,
}

/// Position and smoothed derivatives for a 2D or 3D track.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedTrack {
    pub dt: f64,
    pub axes: Vec<AxisKinematics>,
}

impl SmoothedTrack {
    pub fn len(&self) -> usize {
        self.axes.first().map_or(0, |a| a.position.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn velocity2(&self, i: usize) -> Vec2 {
        Vec2::new(self.axes[0].velocity[i], self.axes[1].velocity[i])
    }

    pub fn acceleration2(&self, i: usize) -> Vec2 {
        Vec2::new(self.axes[0].acceleration[i], self.axes[1].acceleration[i])
    }

    pub fn jerk2(&self, i: usize) -> Vec2 {
        Vec2::new(self.axes[0].jerk[i], self.axes[1].jerk[i])
    }

    pub fn position2(&self, i: usize) -> Vec2 {
        Vec2::new(self.axes[0].position[i], self.axes[1].position[i])
    }

    fn norm_over_axes(&self, i: usize, f: impl Fn(&AxisKinematics) -> &[f64]) -> f64 {
        self.axes.iter().map(|a| f(a)[i].powi(2)).sum::<f64>().sqrt()
    }

    /// Speed over all axes of the track (planar for 2D tracks, spatial for 3D).
    pub fn speed(&self, i: usize) -> f64 {
        self.norm_over_axes(i, |a| &a.velocity)
    }

    pub fn planar_speed(&self, i: usize) -> f64 {
        self.velocity2(i).norm()
    }

    pub fn planar_acceleration(&self, i: usize) -> f64 {
        self.acceleration2(i).norm()
    }

    /// Rate of change of the planar acceleration magnitude, `(a . j) / |a|`.
    pub fn planar_acceleration_rate(&self, i: usize) -> f64 {
        let a = self.acceleration2(i);
        let n = a.norm();
        if n == 0.0 {
            0.0
        } else {
            a.dot(&self.jerk2(i)) / n
        }
    }

    pub fn speeds(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.speed(i)).collect()
    }

    pub fn planar_speeds(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.planar_speed(i)).collect()
    }
}

/// Velocity, acceleration and jerk of each axis, every order smoothed with `window`.
pub fn differentiate(axes: &[Vec<f64>], dt: f64, window: usize) -> Result<SmoothedTrack, PreprocessError> {
    let len = axes.first().map_or(0, Vec::len);
    if len < window.max(2) {
        return Err(PreprocessError::TrackTooShort { len, window });
    }
    let axes = axes
        .iter()
        .map(|x| {
            debug_assert_eq!(x.len(), len);
            let velocity = moving_average(&finite_difference(x, dt), window);
            let acceleration = moving_average(&finite_difference(&velocity, dt), window);
            let jerk = moving_average(&finite_difference(&acceleration, dt), window);
            AxisKinematics {
                position: x.clone(),
                velocity,
                acceleration,
                jerk,
            }
        })
        .collect();
    Ok(SmoothedTrack { dt, axes })
}

pub fn differentiate_planar(points: &[Vec2], dt: f64, window: usize) -> Result<SmoothedTrack, PreprocessError> {
    let xs = points.iter().map(|p| p.x).collect();
    let ys = points.iter().map(|p| p.y).collect();
    differentiate(&[xs, ys], dt, window)
}

pub fn differentiate_spatial(points: &[Vec3], dt: f64, window: usize) -> Result<SmoothedTrack, PreprocessError> {
    let xs = points.iter().map(|p| p.x).collect();
    let ys = points.iter().map(|p| p.y).collect();
    let zs = points.iter().map(|p| p.z).collect();
    differentiate(&[xs, ys, zs], dt, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DT: f64 = 0.04;

    #[test]
    fn gap_detection() {
        let v = |bits: &[u8]| bits.iter().map(|b| *b == 1).collect::<Vec<_>>();
        assert_eq!(
            detect_gaps(&v(&[1, 1, 0, 0, 1])),
            vec![Gap { start: 2, end: 3, kind: GapKind::Interior }]
        );
        assert!(detect_gaps(&v(&[1, 1, 1])).is_empty());
        assert_eq!(
            detect_gaps(&v(&[0, 0, 1, 1])),
            vec![Gap { start: 0, end: 1, kind: GapKind::Leading }]
        );
        assert_eq!(detect_gaps(&v(&[1, 0]))[0].kind, GapKind::Trailing);
        assert_eq!(detect_gaps(&v(&[0, 0]))[0].kind, GapKind::Whole);
    }

    #[test]
    fn spline_reproduces_linear_data() {
        let n = 40;
        let series: Vec<f64> = (0..n).map(|i| 1.5 - 0.37 * i as f64).collect();
        let mut valid = vec![true; n];
        let mut corrupted = series.clone();
        for i in 12..17 {
            valid[i] = false;
            corrupted[i] = 999.0;
        }
        let gap = detect_gaps(&valid)[0];
        let filled = spline_fill(&corrupted, &valid, &gap).unwrap();
        for i in 0..n {
            assert!((filled[i] - series[i]).abs() < 1e-9, "{i}");
        }
    }

    #[test]
    fn spline_fills_sine_close_to_analytic() {
        // sin(2 pi t / 2s) at 25 Hz, four missing frames
        let n = 100;
        let f = |i: usize| (std::f64::consts::PI * i as f64 * DT).sin();
        let series: Vec<f64> = (0..n).map(f).collect();
        let mut valid = vec![true; n];
        for i in 40..44 {
            valid[i] = false;
        }
        let filled = fill_series(&series, &valid, 25).unwrap();
        for i in 40..44 {
            assert!((filled[i] - f(i)).abs() < 1e-3, "{i}: {}", (filled[i] - f(i)).abs());
        }
    }

    #[test]
    fn spline_interpolates_knots_and_is_natural() {
        let xs: Vec<f64> = vec![0.0, 1.0, 2.5, 3.0, 4.5, 6.0];
        let ys: Vec<f64> = vec![0.3, -1.0, 2.0, 0.5, 0.0, 1.2];
        let s = NaturalCubicSpline::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval(*x) - y).abs() < 1e-12);
        }
        assert!(s.second_derivative(0.0).abs() < 1e-12);
        assert!(s.second_derivative(6.0).abs() < 1e-12);
        // C2 at an interior knot: both one-sided second derivatives agree
        let eps = 1e-7;
        let left = s.second_derivative(2.5 - eps);
        let right = s.second_derivative(2.5 + eps);
        assert!((left - right).abs() < 1e-5);
    }

    #[test]
    fn boundary_gap_holds_value() {
        let series = vec![9.0, 9.0, 1.0, 2.0, 3.0, 4.0, 0.0];
        let valid = vec![false, false, true, true, true, true, false];
        let filled = fill_series(&series, &valid, 25).unwrap();
        assert_eq!(filled, vec![1.0, 1.0, 1.0, 2.0, 3.0, 4.0, 4.0]);
        let lead = detect_gaps(&valid)[0];
        assert_eq!(spline_fill(&series, &valid, &lead).unwrap()[..2], [1.0, 1.0]);
    }

    #[test]
    fn fill_errors() {
        let series = vec![0.0; 10];
        let mut valid = vec![true; 10];
        valid[4] = false;
        valid[5] = false;
        valid[0] = false;
        valid[1] = false;
        valid[2] = false;
        valid[8] = false;
        valid[9] = false;
        // only 3 valid knots left around an interior gap
        assert_eq!(
            fill_series(&series, &valid, 25),
            Err(PreprocessError::InsufficientKnots { valid: 3 })
        );
        let mut long = vec![true; 40];
        for v in long.iter_mut().skip(5).take(26) {
            *v = false;
        }
        assert_eq!(
            fill_series(&vec![0.0; 40], &long, 25),
            Err(PreprocessError::GapTooLong { len: 26, max: 25 })
        );
        assert_eq!(
            fill_series(&[1.0, 2.0], &[false, false], 25),
            Err(PreprocessError::NoValidSamples)
        );
    }

    #[test]
    fn derivatives_of_constant_are_zero() {
        let t = differentiate(&[vec![4.2; 30]], DT, 5).unwrap();
        let a = &t.axes[0];
        assert!(a.velocity.iter().chain(&a.acceleration).chain(&a.jerk).all(|v| *v == 0.0));
    }

    #[test]
    fn derivative_of_linear_motion_is_exact() {
        let x: Vec<f64> = (0..50).map(|i| 3.0 * i as f64 * DT).collect();
        let t = differentiate(&[x], DT, 5).unwrap();
        for v in &t.axes[0].velocity {
            assert!((v - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn second_derivative_of_quadratic() {
        let n = 60;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * DT).powi(2)).collect();
        let t = differentiate(&[x], DT, 5).unwrap();
        // exact once every stencil stays clear of the one-sided endpoints
        for i in 6..n - 6 {
            assert!((t.axes[0].acceleration[i] - 2.0).abs() < 1e-6, "{i}");
        }
    }

    #[test]
    fn too_short_track() {
        assert_eq!(
            differentiate(&[vec![0.0; 4]], DT, 5),
            Err(PreprocessError::TrackTooShort { len: 4, window: 5 })
        );
    }

    #[test]
    fn moving_average_window_shrinks_symmetrically() {
        let x = [0.0, 1.0, 2.0, 3.0, 10.0];
        let m = moving_average(&x, 5);
        assert_eq!(m[0], 0.0);
        assert_eq!(m[1], 1.0);
        assert_eq!(m[2], 16.0 / 5.0);
        assert_eq!(m[4], 10.0);
    }

    #[test]
    fn pose_sequence_fill() {
        let poses: Vec<Option<Pose>> = (0..20)
            .map(|k| {
                if (8..11).contains(&k) {
                    return None;
                }
                let mut p = Pose::uniform(Vec3::new(0.1 * k as f64, 1.0, 0.5));
                if k == 15 {
                    p.set(JointName::Neck, Vec3::zeros(), false);
                }
                Some(p)
            })
            .collect();
        let filled = fill_poses(&poses, 25).unwrap();
        for (k, p) in filled.iter().enumerate() {
            assert!(p.fully_observed());
            assert!((p.joint(JointName::Neck).x - 0.1 * k as f64).abs() < 1e-9);
        }
        assert!(matches!(
            fill_poses(&poses, 2),
            Err(PreprocessError::GapTooLong { len: 3, max: 2 })
        ));
        assert_eq!(fill_poses(&[None, None], 25), Err(PreprocessError::NoValidSamples));
    }

    proptest! {
        #[test]
        fn differentiate_is_linear(
            xs in prop::collection::vec(-10.0..10.0f64, 12..40),
            alpha in -3.0..3.0f64,
            beta in -3.0..3.0f64,
            shift in -5.0..5.0f64,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, v)| (v * 0.7 + shift * i as f64).sin()).collect();
            let combo: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| alpha * x + beta * y).collect();
            let dx = differentiate(&[xs.clone()], DT, 5).unwrap();
            let dy = differentiate(&[ys.clone()], DT, 5).unwrap();
            let dc = differentiate(&[combo], DT, 5).unwrap();
            let close = |c: f64, a: f64, b: f64| {
                let lin = alpha * a + beta * b;
                (c - lin).abs() <= 1e-10 * (1.0 + (alpha * a).abs() + (beta * b).abs())
            };
            let (a, b, c) = (&dx.axes[0], &dy.axes[0], &dc.axes[0]);
            for i in 0..xs.len() {
                prop_assert!(close(c.velocity[i], a.velocity[i], b.velocity[i]));
                prop_assert!(close(c.acceleration[i], a.acceleration[i], b.acceleration[i]));
                prop_assert!(close(c.jerk[i], a.jerk[i], b.jerk[i]));
            }
        }

        #[test]
        fn spline_passes_through_every_valid_knot(
            ys in prop::collection::vec(-5.0..5.0f64, 8..30),
            hole in 2usize..5,
        ) {
            let n = ys.len();
            let mut valid = vec![true; n];
            let start = n / 2 - 1;
            for v in valid.iter_mut().skip(start).take(hole.min(n - start - 2)) {
                *v = false;
            }
            let filled = fill_series(&ys, &valid, 25).unwrap();
            for i in 0..n {
                if valid[i] {
                    prop_assert!((filled[i] - ys[i]).abs() < 1e-12);
                }
                prop_assert!(filled[i].is_finite());
            }
        }
    }
}

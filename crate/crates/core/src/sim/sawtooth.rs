//! Exact integration of a sawtooth age path.
//!
//! The age grows at unit rate and drops to a recorded value at each reset.
//! Storing only the reset points keeps the path exact: integrals are sums of
//! trapezoids, never time-sampled approximations.

/// Piecewise-linear, right-continuous age path with unit slope between
/// resets. At a reset instant the path takes the post-reset value.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeTrack {
    start_time: f64,
    start_age: f64,
    /// `(time, age immediately after the reset)`, nondecreasing in time.
    resets: Vec<(f64, f64)>,
}

impl AgeTrack {
    pub fn new(start_time: f64, start_age: f64) -> Self {
        AgeTrack {
            start_time,
            start_age,
            resets: Vec::new(),
        }
    }

    /// Records a downward jump to `age` at `time`. Times must be fed in
    /// nondecreasing order; equal times are allowed (the later value wins for
    /// the zero-width segment).
    pub fn reset(&mut self, time: f64, age: f64) {
        let last = self.resets.last().map_or(self.start_time, |r| r.0);
        assert!(
            time >= last,
            "resets must arrive in time order: {time} after {last}"
        );
        assert!(
            age.is_finite() && age >= 0.0,
            "reset age must be non-negative"
        );
        self.resets.push((time, age));
    }

    pub fn num_resets(&self) -> usize {
        self.resets.len()
    }

    pub fn resets(&self) -> &[(f64, f64)] {
        &self.resets
    }

    /// Anchor (time, age) of the segment containing `t`: the latest reset at
    /// or before `t`, or the start point.
    fn anchor_at(&self, t: f64) -> (usize, f64, f64) {
        let n = self.resets.partition_point(|r| r.0 <= t);
        if n == 0 {
            (0, self.start_time, self.start_age)
        } else {
            let (rt, ra) = self.resets[n - 1];
            (n, rt, ra)
        }
    }

    /// Age at time `t >= start_time`.
    pub fn age_at(&self, t: f64) -> f64 {
        assert!(t >= self.start_time);
        let (_, at, aa) = self.anchor_at(t);
        aa + (t - at)
    }

    /// Exact area under the path on `[from, to]`. Each segment contributes a
    /// trapezoid evaluated from within-segment offsets, so precision does not
    /// degrade at large absolute times.
    pub fn integral(&self, from: f64, to: f64) -> f64 {
        assert!(
            self.start_time <= from && from <= to,
            "window must be ordered"
        );
        let (mut next, mut seg_t, mut seg_a) = self.anchor_at(from);
        let mut area = 0.0;
        let mut lo = from;
        while lo < to {
            let seg_end = self.resets.get(next).map_or(f64::INFINITY, |r| r.0);
            let hi = seg_end.min(to);
            let h0 = seg_a + (lo - seg_t);
            let h1 = seg_a + (hi - seg_t);
            area += (hi - lo) * 0.5 * (h0 + h1);
            lo = hi;
            if let Some(&(rt, ra)) = self.resets.get(next) {
                seg_t = rt;
                seg_a = ra;
                next += 1;
            } else {
                break;
            }
        }
        area
    }

    /// Time average of the age over `[from, to]`.
    pub fn time_average(&self, from: f64, to: f64) -> f64 {
        assert!(to > from, "window must have positive width");
        self.integral(from, to) / (to - from)
    }

    /// Time averages over `batches` equal-width slices of `[from, to]`.
    pub fn batch_means(&self, from: f64, to: f64, batches: usize) -> Vec<f64> {
        assert!(batches >= 1);
        assert!(to > from);
        let width = (to - from) / batches as f64;
        (0..batches)
            .map(|i| {
                let lo = from + width * i as f64;
                let hi = if i + 1 == batches { to } else { lo + width };
                self.time_average(lo, hi)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_track() -> AgeTrack {
        let mut t = AgeTrack::new(0.0, 0.0);
        t.reset(2.0, 0.5);
        t.reset(5.0, 1.0);
        t
    }

    #[test]
    fn age_follows_unit_slope_between_resets() {
        let t = sample_track();
        assert_eq!(t.age_at(0.0), 0.0);
        assert_eq!(t.age_at(1.5), 1.5);
        // Right-continuity: at the reset instant the new value holds.
        assert_eq!(t.age_at(2.0), 0.5);
        assert_eq!(t.age_at(4.0), 2.5);
        assert_eq!(t.age_at(6.0), 2.0);
    }

    #[test]
    fn integral_sums_the_trapezoids() {
        let t = sample_track();
        // Segments over [0, 6]: ramp 0..2 (area 2), 0.5..3.5 over 3 (area 6),
        // 1..2 over 1 (area 1.5).
        assert!((t.integral(0.0, 6.0) - 9.5).abs() < 1e-12);
        // Partial window across one reset.
        assert!((t.integral(1.0, 2.5) - 1.875).abs() < 1e-12);
        // Degenerate window.
        assert_eq!(t.integral(3.0, 3.0), 0.0);
        assert!((t.time_average(0.0, 6.0) - 9.5 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn plain_ramp_has_trapezoid_area() {
        let t = AgeTrack::new(10.0, 3.0);
        assert!((t.integral(11.0, 13.0) - 2.0 * (4.0 + 6.0) * 0.5).abs() < 1e-12);
    }

    #[test]
    fn batch_means_average_back_to_the_overall_mean() {
        let t = sample_track();
        let means = t.batch_means(0.0, 6.0, 3);
        assert_eq!(means.len(), 3);
        assert!((means[0] - 1.0).abs() < 1e-12);
        assert!((means[1] - 1.5).abs() < 1e-12);
        assert!((means[2] - 2.25).abs() < 1e-12);
        let overall = t.time_average(0.0, 6.0);
        let recombined = means.iter().sum::<f64>() / 3.0;
        assert!((overall - recombined).abs() < 1e-12);
    }

    #[test]
    fn equal_time_resets_are_tolerated() {
        let mut t = AgeTrack::new(0.0, 0.0);
        t.reset(1.0, 0.25);
        t.reset(1.0, 0.75);
        assert_eq!(t.age_at(1.0), 0.75);
        assert!((t.integral(0.0, 2.0) - (0.5 + 1.25)).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "time order")]
    fn out_of_order_resets_panic() {
        let mut t = sample_track();
        t.reset(4.0, 0.0);
    }

    #[test]
    fn precision_survives_large_absolute_times() {
        let mut t = AgeTrack::new(0.0, 0.0);
        let base = 1.0e6;
        t.reset(base, 2.0);
        t.reset(base + 10.0, 4.0);
        // Heights 2..12 over width 10: area 70.
        assert!((t.integral(base, base + 10.0) - 70.0).abs() < 1e-6);
    }
}

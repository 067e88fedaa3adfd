//! Radial functions on the unit disk, addressed by log-radius `t = ln r`.

/// A radial function `u(|x|)` seen through the log-radius `t = ln r`.
///
/// `slope` is `r·u'(r) = du/dt`, so `∫|∇u|² dx = 2π ∫ slope² dt` and planar
/// integrals `∫ G(u) dx = 2π ∫ G(u) e^{2t} dt`.
pub trait RadialField {
    fn value(&self, log_r: f64) -> f64;

    fn slope(&self, log_r: f64) -> f64;

    /// Partition of `[lo, hi]` (both included, increasing) on whose cells the
    /// field is smooth.
    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64>;

    /// `Some((t_c, c))` when the field equals the constant `c` for `t < t_c`.
    fn core(&self) -> Option<(f64, f64)> {
        None
    }

    /// Log-radius below which the field is indistinguishable from its value at
    /// the origin; integrals starting at the origin begin here.
    fn floor(&self) -> f64;
}

/// `scale · w`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<'a, F: ?Sized> {
    pub field: &'a F,
    pub scale: f64,
}

impl<F: RadialField + ?Sized> RadialField for Scaled<'_, F> {
    fn value(&self, log_r: f64) -> f64 {
        self.scale * self.field.value(log_r)
    }

    fn slope(&self, log_r: f64) -> f64 {
        self.scale * self.field.slope(log_r)
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.field.breaks(lo, hi)
    }

    fn core(&self) -> Option<(f64, f64)> {
        self.field.core().map(|(t, c)| (t, self.scale * c))
    }

    fn floor(&self) -> f64 {
        self.field.floor()
    }
}

/// Merges interior points into `[lo, hi]`, sorted and deduplicated.
pub(crate) fn clip_breaks(lo: f64, hi: f64, points: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![lo];
    out.extend(points.into_iter().filter(|&t| t > lo && t < hi));
    out.push(hi);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

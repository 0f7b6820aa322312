//! Small numeric helpers shared across modules: compensated summation and
//! grid maximisation with golden-section refinement.

/// Neumaier compensated summation. Accumulation order is chosen by the
/// caller; all measure computations in this crate sum in ascending vertex
/// order so identical inputs give bit-identical outputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Maximum of `phi` over `[lo, hi]`: scan an `n`-point uniform grid, then
/// refine around the best grid point by golden-section search. Returns
/// `(max, argmax)`. Intended for smooth functions; the refinement window is
/// one grid cell on either side of the argmax.
pub fn grid_max(phi: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    assert!(n >= 2 && hi > lo);
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    let mut best_x = lo;
    for i in 0..n {
        let x = if i + 1 == n { hi } else { lo + i as f64 * h };
        let v = phi(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let a = (best_x - h).max(lo);
    let b = (best_x + h).min(hi);
    let (ref_max, ref_x) = golden_max(&phi, a, b, 1e-13);
    if ref_max > best {
        (ref_max, ref_x)
    } else {
        (best, best_x)
    }
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
fn golden_max(phi: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = phi(c);
    let mut fd = phi(d);
    while (b - a) > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = phi(d);
        }
    }
    let x = 0.5 * (a + b);
    (phi(x), x)
}

/// Nearest-rank quantile of a sorted slice: smallest value with at least
/// `q * len` observations at or below it. `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Median with the usual midpoint convention for even lengths.
pub fn median_sorted(sorted: &[f64]) -> f64 {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut s = NeumaierSum::new();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn grid_max_finds_parabola_peak() {
        let (m, x) = grid_max(|x| -(x - 0.3).powi(2) + 2.0, 0.0, 1.0, 10_001);
        assert!((m - 2.0).abs() < 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
    }

    #[test]
    fn grid_max_hits_endpoint_maximum() {
        let (m, x) = grid_max(|x| 6.0 - 12.0 * x, 0.0, 1.0, 10_001);
        assert!((m - 6.0).abs() < 1e-12);
        assert!(x.abs() < 1e-9);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(median_sorted(&v), 2.5);
        assert_eq!(quantile_sorted(&v, 0.05), 1.0);
        assert_eq!(quantile_sorted(&v, 0.95), 4.0);
        assert_eq!(quantile_sorted(&v, 0.5), 2.0);
    }
}

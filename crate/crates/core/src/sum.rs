//! Neumaier-compensated running sums.

/// Accumulator with Neumaier compensation.
///
/// The weight recursion feeds its running sums back into every later term,
/// so rounding drift would otherwise compound with `n`. The result is within
/// an ulp or two of the exactly rounded sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningSum {
    sum: f64,
    comp: f64,
}

impl RunningSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if !t.is_finite() {
            self.sum = t;
            return;
        }
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if !self.sum.is_finite() {
            return self.sum;
        }
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut acc = RunningSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat_n(1e-16, 10_000));
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 1.0);
        assert!((compensated_sum(&xs) - (1.0 + 1e-12)).abs() < 1e-24);
    }

    #[test]
    fn repeated_terms_do_not_drift() {
        let xs = vec![0.1; 1000];
        let naive: f64 = xs.iter().sum();
        assert_ne!(naive, 100.0);
        assert_eq!(compensated_sum(&xs), 100.0);
    }

    #[test]
    fn infinite_terms_propagate() {
        assert_eq!(compensated_sum(&[1.0, f64::INFINITY]), f64::INFINITY);
    }
}

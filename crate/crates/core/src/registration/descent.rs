//! Step-halving line search shared by the optimization stages.

use super::config::StageConfig;

pub(crate) const MAX_HALVINGS: usize = 20;

/// Tries `step`, `step/2`, ... and returns the first candidate whose loss
/// is strictly below `current`. `None` means no halving helped.
pub(crate) fn backtrack<X>(current: f64, step: f64, mut candidate: impl FnMut(f64) -> (X, f64)) -> Option<(X, f64)> {
    let mut s = step;
    for _ in 0..=MAX_HALVINGS {
        let (x, loss) = candidate(s);
        if loss.is_finite() && loss < current {
            return Some((x, loss));
        }
        s *= 0.5;
    }
    None
}

/// Whether the loss improved by less than the relative tolerance over the
/// last `window` accepted iterates.
pub(crate) fn plateaued(trace: &[f64], cfg: &StageConfig) -> bool {
    let n = trace.len();
    if n <= cfg.window {
        return false;
    }
    let (old, new) = (trace[n - 1 - cfg.window], trace[n - 1]);
    (old - new).abs() <= cfg.tolerance * old.abs().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backtracking_finds_descent() {
        // f(x) = x^2 from x = 1 with gradient 2: step 1 overshoots to -1.
        let (x, l) = backtrack(1.0, 1.0, |s| {
            let x: f64 = 1.0 - s * 2.0;
            (x, x * x)
        })
        .unwrap();
        assert_eq!(x, 0.0);
        assert_eq!(l, 0.0);
    }

    #[test]
    fn no_descent_direction() {
        assert!(backtrack(0.0, 1.0, |s| ((), s + 1e-30)).is_none());
    }

    #[test]
    fn plateau_detection() {
        let cfg = StageConfig {
            max_iterations: 10,
            step: 1.0,
            tolerance: 1e-3,
            window: 2,
        };
        assert!(!plateaued(&[1.0, 0.5], &cfg));
        assert!(!plateaued(&[1.0, 0.5, 0.25], &cfg));
        assert!(plateaued(&[1.0, 1.0, 1.0], &cfg));
    }
}

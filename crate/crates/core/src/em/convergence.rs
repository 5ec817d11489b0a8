use serde::{Deserialize, Serialize};

/// Outcome of the Aitken test on three consecutive log-likelihoods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AitkenCheck {
    pub converged: bool,
    /// Acceleration `(l2 - l1) / (l1 - l0)`; `NaN` when the fallback was used.
    pub a: f64,
    /// Extrapolated limit; equals `l2` under the fallback.
    pub l_inf: f64,
}

/// Aitken stopping rule. Converged when `0 <= l_inf - l1 < eps`. If the
/// previous step is flat (`|l1 - l0| < 1e-14`) or `a >= 1`, falls back to
/// `|l2 - l1| < eps`.
pub fn aitken_check(l0: f64, l1: f64, l2: f64, eps: f64) -> AitkenCheck {
    let step = l1 - l0;
    let a = if step.abs() < 1e-14 { f64::NAN } else { (l2 - l1) / step };
    if a.is_nan() || a >= 1.0 {
        return AitkenCheck { converged: (l2 - l1).abs() < eps, a, l_inf: l2 };
    }
    let l_inf = l1 + (l2 - l1) / (1.0 - a);
    let gap = l_inf - l1;
    AitkenCheck { converged: (0.0..eps).contains(&gap), a, l_inf }
}

/// Log-likelihood trace of one ECM run and its stopping state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceState {
    pub loglik_trace: Vec<f64>,
    pub epsilon: f64,
    pub max_iter: usize,
    pub converged: bool,
    pub aitken_a: Option<f64>,
}

impl ConvergenceState {
    pub fn new(epsilon: f64, max_iter: usize) -> Self {
        Self { loglik_trace: Vec::new(), epsilon, max_iter, converged: false, aitken_a: None }
    }

    /// Appends a log-likelihood and returns whether the run has converged.
    pub fn push(&mut self, loglik: f64) -> bool {
        self.loglik_trace.push(loglik);
        let k = self.loglik_trace.len();
        if k >= 3 {
            let t = &self.loglik_trace[k - 3..];
            let check = aitken_check(t[0], t[1], t[2], self.epsilon);
            self.aitken_a = check.a.is_finite().then_some(check.a);
            self.converged = check.converged;
        }
        self.converged
    }

    /// Largest drop between consecutive entries (0 if never decreasing).
    pub fn max_decrease(&self) -> f64 {
        self.loglik_trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

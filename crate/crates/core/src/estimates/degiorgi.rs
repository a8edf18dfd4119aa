use crate::error::{invalid, Result};

/// Iterates at or below this level count as vanished.
pub const VANISH_LEVEL: f64 = 1e-300;

/// Iterates above this level count as divergent.
const DIVERGE_LEVEL: f64 = 1e300;

const MAX_STEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Vanishes,
    Diverges,
    Stalls,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Vanishes => "vanishes",
            Verdict::Diverges => "diverges",
            Verdict::Stalls => "stalls",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeGiorgiOutcome {
    pub threshold: f64,
    /// `x0 <= threshold`.
    pub below_threshold: bool,
    pub verdict: Verdict,
    /// `X_0, X_1, …` up to the step that decided the verdict.
    pub sequence: Vec<f64>,
}

/// `R^N / (C^{N/2} b^{N²/4})`.
pub fn degiorgi_threshold(c: f64, b: f64, r: f64, n_dim: usize) -> f64 {
    let n = n_dim as f64;
    r.powf(n) / (c.powf(n / 2.0) * b.powf(n * n / 4.0))
}

/// Runs `X_{n+1} = (C/R²) bⁿ X_n^{1+2/N}` until the iterates vanish,
/// blow up, or 10⁴ steps pass.
pub fn degiorgi_iterate(x0: f64, c: f64, b: f64, r: f64, n_dim: usize) -> Result<DeGiorgiOutcome> {
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(invalid("x0", format!("must be finite and nonnegative, got {x0}")));
    }
    for (name, v) in [("c", c), ("b", b), ("r", r)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, format!("must be positive, got {v}")));
        }
    }
    if n_dim < 2 {
        return Err(invalid("n_dim", format!("must be at least 2, got {n_dim}")));
    }
    let threshold = degiorgi_threshold(c, b, r, n_dim);
    let exponent = 1.0 + 2.0 / n_dim as f64;
    let scale = c / (r * r);
    let mut sequence = vec![x0];
    let mut x = x0;
    let mut bn = 1.0;
    let mut verdict = Verdict::Stalls;
    for _ in 0..=MAX_STEPS {
        if x <= VANISH_LEVEL {
            verdict = Verdict::Vanishes;
            break;
        }
        if !x.is_finite() || x > DIVERGE_LEVEL {
            verdict = Verdict::Diverges;
            break;
        }
        if sequence.len() > MAX_STEPS {
            break;
        }
        x = scale * bn * x.powf(exponent);
        bn *= b;
        if bn.is_infinite() && x > 0.0 {
            // the next step overflows whatever x is
            x = f64::INFINITY;
        }
        sequence.push(x);
    }
    Ok(DeGiorgiOutcome { threshold, below_threshold: x0 <= threshold, verdict, sequence })
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::TimeSeries;

/// Outcome of the Chebyshev step on `[t_k, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSlices {
    #[serde(rename = "M")]
    pub m: f64,
    /// `10 M`.
    pub threshold: f64,
    pub t_k: f64,
    /// `|t_k|^{-1} ∫_{t_k}^0 g`.
    pub window_average: f64,
    /// Whether `window_average <= M`.
    pub precondition_holds: bool,
    /// `|{t_k < t < 0 : g(t) > 10 M}|`.
    pub e_k_measure: f64,
    /// `|t_k| / 10`.
    pub e_k_bound: f64,
    pub s_k: f64,
    pub g_at_sk: f64,
}

impl GoodSlices {
    /// The Chebyshev bound, required only when the precondition holds.
    pub fn bound_holds(&self) -> bool {
        !self.precondition_holds || self.e_k_measure <= self.e_k_bound
    }
}

/// Applies Chebyshev's inequality to `g` on `[t_k, 0]`.
///
/// `g` is read as a step function: each sample holds until the next sample
/// time. `s_k` is the latest sample in the window with `g <= 10 M`.
pub fn good_slices(g: &TimeSeries, t_k: f64, m: f64) -> Result<GoodSlices> {
    if !(m > 0.0) {
        return Err(Error::domain(format!("M must be positive, got {m}")));
    }
    if !(t_k < 0.0) {
        return Err(Error::domain(format!("t_k must be negative, got {t_k}")));
    }
    let times = &g.times;
    let (first, last) = (times[0], *times.last().expect("non-empty"));
    if first > t_k + 1e-12 || last < -1e-12 {
        return Err(Error::window(format!(
            "series on [{first}, {last}] does not cover [{t_k}, 0]"
        )));
    }
    let threshold = 10.0 * m;
    let mut integral = 0.0;
    let mut measure = 0.0;
    for i in 0..times.len() - 1 {
        let lo = times[i].max(t_k);
        let hi = times[i + 1].min(0.0);
        if hi <= lo {
            continue;
        }
        integral += g.values[i] * (hi - lo);
        if g.values[i] > threshold {
            measure += hi - lo;
        }
    }
    let window = -t_k;
    let window_average = integral / window;
    let pick = times
        .iter()
        .zip(&g.values)
        .rev()
        .find(|(&t, &v)| t >= t_k - 1e-12 && t <= 1e-12 && v <= threshold);
    let Some((&s_k, &g_at_sk)) = pick else {
        return Err(Error::NoGoodSlice(format!(
            "g > 10M = {threshold} at every sample of [{t_k}, 0] (window average {window_average})"
        )));
    };
    Ok(GoodSlices {
        m,
        threshold,
        t_k,
        window_average,
        precondition_holds: window_average <= m,
        e_k_measure: measure,
        e_k_bound: window / 10.0,
        s_k,
        g_at_sk,
    })
}

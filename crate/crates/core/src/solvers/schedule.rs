/// The pair `(θ_{k−1}, θ_k)` driving the extrapolation weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaPair {
    pub previous: f64,
    pub current: f64,
}

impl ThetaPair {
    pub const RESET: ThetaPair = ThetaPair { previous: 1.0, current: 1.0 };
}

impl Default for ThetaPair {
    fn default() -> Self {
        Self::RESET
    }
}

/// `β_k = θ_k(θ_{k−1}⁻¹ − 1)` with `θ_{k+1} = 2 / (1 + √(1 + 4/θ_k²))`.
///
/// The pair is reset to `(1, 1)` before computing `β_k` whenever `k > 0` is a
/// multiple of `restart_period`, and `β_k` is clipped to `[0, beta_cap]`.
/// Returns `β_k` together with `(θ_k, θ_{k+1})`.
pub fn beta_schedule(k: usize, state: ThetaPair, restart_period: usize, beta_cap: f64) -> (f64, ThetaPair) {
    let state = if k > 0 && restart_period > 0 && k % restart_period == 0 {
        ThetaPair::RESET
    } else {
        state
    };
    let beta = state.current * (1.0 / state.previous - 1.0);
    let next = 2.0 / (1.0 + (1.0 + 4.0 / (state.current * state.current)).sqrt());
    (
        beta.clamp(0.0, beta_cap),
        ThetaPair { previous: state.current, current: next },
    )
}

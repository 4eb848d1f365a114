use super::Episode;

/// Discounted returns `R_t = r_t + γ R_{t+1}` for every step.
pub fn returns<O, A>(episode: &Episode<O, A>, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; episode.len()];
    let mut acc = 0.0;
    for (t, tr) in episode.transitions.iter().enumerate().rev() {
        acc = tr.reward + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Affine map of returns onto `[0, 1]`, clamped outside `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnNormalizer {
    pub min: f64,
    pub max: f64,
}

impl Default for ReturnNormalizer {
    /// Failure at the 30-turn cap scores −30; success in one turn scores 19.
    fn default() -> Self {
        ReturnNormalizer::new(-30.0, 19.0)
    }
}

impl ReturnNormalizer {
    pub fn new(min: f64, max: f64) -> Self {
        ReturnNormalizer { min, max }
    }

    pub fn normalize(&self, r: f64) -> f64 {
        ((r - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }
}

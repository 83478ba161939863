use serde::{Deserialize, Serialize};

/// Three-phase training schedule for the learning rate `α` and exploration rate `ε`.
///
/// * exploration: `α` and `ε` held at their high values;
/// * exploitation: `ε` decays to its intermediate value, `α` stays high;
/// * convergence: both decay to their final values.
///
/// Decay between anchors is geometric (linear in log space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSchedule {
    pub explore_episodes: usize,
    pub exploit_episodes: usize,
    pub converge_episodes: usize,
    pub alpha_high: f64,
    pub alpha_final: f64,
    pub epsilon_high: f64,
    pub epsilon_mid: f64,
    pub epsilon_final: f64,
    pub gamma: f64,
    pub steps_per_episode: usize,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        Self {
            explore_episodes: 400,
            exploit_episodes: 200,
            converge_episodes: 400,
            alpha_high: 0.9,
            alpha_final: 1e-5,
            epsilon_high: 0.9,
            epsilon_mid: 0.1,
            epsilon_final: 1e-5,
            gamma: 1.0,
            steps_per_episode: 5040,
        }
    }
}

fn geometric(from: (usize, f64), to: (usize, f64), at: usize) -> f64 {
    if to.0 <= from.0 {
        return to.1;
    }
    let frac = (at - from.0) as f64 / (to.0 - from.0) as f64;
    from.1 * (to.1 / from.1).powf(frac)
}

impl TrainingSchedule {
    /// Same anchors with phase lengths scaled to `total` episodes (400/200/400 proportions).
    pub fn scaled(total: usize) -> Self {
        let explore = (total * 2).div_ceil(5);
        let exploit = total / 5;
        Self {
            explore_episodes: explore,
            exploit_episodes: exploit,
            converge_episodes: total - explore - exploit,
            ..Self::default()
        }
    }

    pub fn total_episodes(&self) -> usize {
        self.explore_episodes + self.exploit_episodes + self.converge_episodes
    }

    /// `(α, ε)` for a 0-based episode index.
    pub fn value(&self, episode: usize) -> (f64, f64) {
        let explore_end = self.explore_episodes.saturating_sub(1);
        let exploit_end = (self.explore_episodes + self.exploit_episodes).saturating_sub(1);
        let last = self.total_episodes().saturating_sub(1);
        let episode = episode.min(last);

        let alpha = if episode <= exploit_end {
            self.alpha_high
        } else {
            geometric((exploit_end, self.alpha_high), (last, self.alpha_final), episode)
        };
        let epsilon = if episode <= explore_end {
            self.epsilon_high
        } else if episode <= exploit_end {
            geometric((explore_end, self.epsilon_high), (exploit_end, self.epsilon_mid), episode)
        } else {
            geometric((exploit_end, self.epsilon_mid), (last, self.epsilon_final), episode)
        };
        (alpha, epsilon)
    }
}

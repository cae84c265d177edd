use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::grid::Action;
use crate::policy::JointPolicy;
use crate::world::WorldState;
use crate::Result;

/// Independent uniform draws over the five actions.
pub fn random_policy<R: Rng + ?Sized>(n_agents: usize, rng: &mut R) -> Vec<Action> {
    (0..n_agents).map(|_| Action::ALL[rng.random_range(0..Action::COUNT)]).collect()
}

#[derive(Clone, Debug, Default)]
pub struct RandomPolicy;

impl JointPolicy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, state: &WorldState, rng: &mut dyn RngCore) -> Result<Vec<Action>> {
        Ok(random_policy(state.n_agents(), rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reproducible_under_seed() {
        let a = random_policy(50, &mut ChaCha8Rng::seed_from_u64(4));
        let b = random_policy(50, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        assert!(random_policy(0, &mut ChaCha8Rng::seed_from_u64(4)).is_empty());
    }

    #[test]
    fn uniform_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = random_policy(100_000, &mut rng);
        let mut counts = [0usize; 5];
        for a in draws {
            counts[a.index()] += 1;
        }
        for c in counts {
            let f = c as f64 / 100_000.0;
            assert!((f - 0.2).abs() < 0.01, "frequency {f}");
        }
    }
}

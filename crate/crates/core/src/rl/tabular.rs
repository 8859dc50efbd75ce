use rand::Rng;

use super::RlError;

/// Finite MDP with costs; rewards are their negation.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// `transitions[s][a][s']`
    transitions: Vec<Vec<Vec<f64>>>,
    /// `costs[s][a]`
    costs: Vec<Vec<f64>>,
    gamma: f64,
}

/// Action values, `q[s][a]`.
pub type QTable = Vec<Vec<f64>>;

impl TabularMdp {
    pub fn new(transitions: Vec<Vec<Vec<f64>>>, costs: Vec<Vec<f64>>, gamma: f64) -> Result<Self, RlError> {
        let n_states = transitions.len();
        if n_states == 0 {
            return Err(RlError::Shape("MDP needs at least one state".into()));
        }
        let n_actions = transitions[0].len();
        if n_actions == 0 {
            return Err(RlError::Shape("MDP needs at least one action".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(RlError::Config(format!("discount must lie in [0, 1), got {gamma}")));
        }
        if costs.len() != n_states {
            return Err(RlError::Dimension { expected: n_states, got: costs.len() });
        }
        for (s, (row, c)) in transitions.iter().zip(&costs).enumerate() {
            if row.len() != n_actions || c.len() != n_actions {
                return Err(RlError::Shape(format!("state {s} has a ragged action set")));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(RlError::NonFinite(format!("cost at state {s}")));
            }
            for (a, p) in row.iter().enumerate() {
                if p.len() != n_states || p.iter().any(|v| !(*v >= 0.0)) {
                    return Err(RlError::Shape(format!("transition row ({s}, {a}) is not a distribution")));
                }
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(RlError::Shape(format!("transition row ({s}, {a}) sums to {total}")));
                }
            }
        }
        Ok(Self { n_states, n_actions, transitions, costs, gamma })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cost(&self, s: usize, a: usize) -> f64 {
        self.costs[s][a]
    }

    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        &self.transitions[s][a]
    }

    /// Draws a successor state by inverting the transition CDF.
    pub fn sample_next<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (next, p) in self.transitions[s][a].iter().enumerate() {
            acc += p;
            if u < acc {
                return next;
            }
        }
        self.transitions[s][a].iter().rposition(|p| *p > 0.0).unwrap_or(self.n_states - 1)
    }

    /// Deterministic `rows × cols` grid with moves up/down/left/right. Every
    /// move costs 1 except from the goal, which is absorbing and free.
    pub fn gridworld(rows: usize, cols: usize, goal: (usize, usize), gamma: f64) -> Result<Self, RlError> {
        let n = rows * cols;
        let idx = |r: usize, c: usize| r * cols + c;
        let goal_idx = idx(goal.0, goal.1);
        let moves: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        let mut transitions = vec![vec![vec![0.0; n]; 4]; n];
        let mut costs = vec![vec![1.0; 4]; n];
        for r in 0..rows {
            for c in 0..cols {
                let s = idx(r, c);
                for (a, (dr, dc)) in moves.iter().enumerate() {
                    let next = if s == goal_idx {
                        s
                    } else {
                        let nr = (r as isize + dr).clamp(0, rows as isize - 1) as usize;
                        let nc = (c as isize + dc).clamp(0, cols as isize - 1) as usize;
                        idx(nr, nc)
                    };
                    transitions[s][a][next] = 1.0;
                }
                if s == goal_idx {
                    costs[s] = vec![0.0; 4];
                }
            }
        }
        Self::new(transitions, costs, gamma)
    }
}

fn max_q(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Greedy action per state (lowest index on ties).
pub fn greedy_policy(q: &QTable) -> Vec<usize> {
    q.iter()
        .map(|row| row.iter().enumerate().fold(0, |best, (a, v)| if *v > row[best] { a } else { best }))
        .collect()
}

/// Bellman optimality iteration on rewards `−c`, stopped once the sup-norm
/// change drops below `tol`.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> QTable {
    let mut q = vec![vec![0.0; mdp.n_actions]; mdp.n_states];
    loop {
        let v: Vec<f64> = q.iter().map(|row| max_q(row)).collect();
        let mut change = 0.0f64;
        for s in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                let expected: f64 = mdp.transitions[s][a].iter().zip(&v).map(|(p, vn)| p * vn).sum();
                let updated = -mdp.costs[s][a] + mdp.gamma * expected;
                change = change.max((updated - q[s][a]).abs());
                q[s][a] = updated;
            }
        }
        if change < tol {
            return q;
        }
    }
}

/// How [`q_learning`] picks the next state-action pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exploration {
    /// Probability of restarting from a uniformly random state at each step.
    pub restart_prob: f64,
}

/// Learning-rate schedule as a function of the visit count of the pair
/// being updated (counted before the update).
pub trait LearningRate {
    fn rate(&mut self, visits: u64) -> f64;
}

impl<F: FnMut(u64) -> f64> LearningRate for F {
    fn rate(&mut self, visits: u64) -> f64 {
        self(visits)
    }
}

/// `η = 1 / (1 + visits)`.
pub fn robbins_monro(visits: u64) -> f64 {
    1.0 / (1.0 + visits as f64)
}

/// Off-policy TD(0) control under uniform-random behavior.
///
/// Returns the estimate and the per-pair visit counts.
pub fn q_learning<L: LearningRate, R: Rng + ?Sized>(
    mdp: &TabularMdp,
    mut schedule: L,
    exploration: Exploration,
    steps: u64,
    initial: Option<QTable>,
    rng: &mut R,
) -> (QTable, Vec<Vec<u64>>) {
    let mut q = initial.unwrap_or_else(|| vec![vec![0.0; mdp.n_actions]; mdp.n_states]);
    let mut visits = vec![vec![0u64; mdp.n_actions]; mdp.n_states];
    let mut s = rng.random_range(0..mdp.n_states);
    for _ in 0..steps {
        let a = rng.random_range(0..mdp.n_actions);
        let next = mdp.sample_next(s, a, rng);
        let eta = schedule.rate(visits[s][a]);
        let td = -mdp.costs[s][a] + mdp.gamma * max_q(&q[next]) - q[s][a];
        q[s][a] += eta * td;
        visits[s][a] += 1;
        s = if rng.random::<f64>() < exploration.restart_prob { rng.random_range(0..mdp.n_states) } else { next };
    }
    (q, visits)
}

pub fn sup_norm_diff(a: &QTable, b: &QTable) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(cost: f64, gamma: f64) -> TabularMdp {
        TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![cost]], gamma).unwrap()
    }

    #[test]
    fn single_state_fixed_point() {
        let q = value_iteration(&single(1.0, 0.5), 1e-13);
        assert!((q[0][0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_discount_is_negated_cost() {
        let mdp = TabularMdp::gridworld(3, 3, (2, 2), 0.0).unwrap();
        let q = value_iteration(&mdp, 1e-12);
        for s in 0..9 {
            for a in 0..4 {
                assert_eq!(q[s][a], -mdp.cost(s, a));
            }
        }
    }

    #[test]
    fn greedy_invariant_to_constant_shift() {
        let mdp = TabularMdp::gridworld(4, 4, (0, 3), 0.8).unwrap();
        let q = value_iteration(&mdp, 1e-12);
        let shifted: QTable = q.iter().map(|r| r.iter().map(|v| v + 17.0).collect()).collect();
        assert_eq!(greedy_policy(&q), greedy_policy(&shifted));
    }

    #[test]
    fn zero_rate_never_moves() {
        let mdp = TabularMdp::gridworld(3, 3, (1, 1), 0.9).unwrap();
        let start = vec![vec![0.25; 4]; 9];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (q, _) = q_learning(&mdp, |_| 0.0, Exploration { restart_prob: 0.1 }, 1000, Some(start.clone()), &mut rng);
        assert_eq!(q, start);
    }

    #[test]
    fn single_step_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (q, _) = q_learning(&single(1.0, 0.5), |_| 1.0, Exploration { restart_prob: 0.0 }, 1, None, &mut rng);
        assert_eq!(q[0][0], -1.0);
    }

    #[test]
    fn rejects_bad_rows_and_discount() {
        assert!(TabularMdp::new(vec![vec![vec![0.5, 0.4], vec![1.0, 0.0]]; 2], vec![vec![0.0; 2]; 2], 0.9).is_err());
        assert!(TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![0.0]], 1.0).is_err());
        assert!(TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![f64::NAN]], 0.5).is_err());
    }

    #[test]
    fn sampling_follows_distribution() {
        let mdp = TabularMdp::new(
            vec![vec![vec![0.25, 0.75]], vec![vec![1.0, 0.0]]],
            vec![vec![0.0], vec![0.0]],
            0.5,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let hits = (0..20_000).filter(|_| mdp.sample_next(0, 0, &mut rng) == 1).count();
        assert!((hits as f64 / 20_000.0 - 0.75).abs() < 0.02);
        assert!((0..100).all(|_| mdp.sample_next(1, 0, &mut rng) == 0));
    }

    #[test]
    fn gridworld_goal_value_is_zero() {
        let mdp = TabularMdp::gridworld(5, 5, (4, 4), 0.5).unwrap();
        let q = value_iteration(&mdp, 1e-12);
        assert!(q[24].iter().all(|v| *v == 0.0));
        // One step away: −1 then free forever.
        assert!((max_q(&q[23]) + 1.0).abs() < 1e-12);
    }
}

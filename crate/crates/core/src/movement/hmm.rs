//! Two-state HMM smoothing of per-second movement labels.

use serde::{Deserialize, Serialize};

use super::{Movement, MovementError};

/// State and observation index 0 is `M`, 1 is `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmmParams {
    /// `emission[state][obs]`.
    pub emission: [[f64; 2]; 2],
    /// `transition[from][to]`.
    pub transition: [[f64; 2]; 2],
    pub initial: [f64; 2],
}

impl Default for HmmParams {
    fn default() -> Self {
        HmmParams {
            emission: [[0.98, 0.02], [0.08, 0.92]],
            transition: [[0.99, 0.01], [0.01, 0.99]],
            initial: [0.5, 0.5],
        }
    }
}

fn idx(m: Movement) -> usize {
    match m {
        Movement::Moving => 0,
        Movement::Stationary => 1,
    }
}

const STATES: [Movement; 2] = [Movement::Moving, Movement::Stationary];

impl HmmParams {
    pub fn validate(&self) -> Result<(), MovementError> {
        let rows = self.emission.iter().chain(self.transition.iter()).chain(std::iter::once(&self.initial));
        for row in rows {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row[0] + row[1] - 1.0).abs() > 1e-9 {
                return Err(MovementError::InvalidHmm(format!("{row:?} is not a distribution")));
            }
        }
        Ok(())
    }

    pub fn log_initial(&self, s: Movement) -> f64 {
        self.initial[idx(s)].ln()
    }

    pub fn log_transition(&self, from: Movement, to: Movement) -> f64 {
        self.transition[idx(from)][idx(to)].ln()
    }

    pub fn log_emission(&self, state: Movement, obs: Movement) -> f64 {
        self.emission[idx(state)][idx(obs)].ln()
    }
}

/// Most likely hidden state sequence, computed in the log domain.
///
/// Ties prefer staying in the same state when choosing a predecessor, and
/// prefer `M` for the final state.
pub fn viterbi(obs: &[Movement], params: &HmmParams) -> Vec<Movement> {
    if obs.is_empty() {
        return Vec::new();
    }
    let t_len = obs.len();
    let mut delta = [0.0f64; 2];
    for s in STATES {
        delta[idx(s)] = params.log_initial(s) + params.log_emission(s, obs[0]);
    }
    let mut back: Vec<[usize; 2]> = Vec::with_capacity(t_len);
    back.push([0, 1]);
    for &o in &obs[1..] {
        let mut next = [0.0f64; 2];
        let mut bp = [0usize; 2];
        for s in STATES {
            let j = idx(s);
            let stay = delta[j] + params.log_transition(s, s);
            let other = 1 - j;
            let switch = delta[other] + params.log_transition(STATES[other], s);
            let (best, from) = if switch > stay { (switch, other) } else { (stay, j) };
            next[j] = best + params.log_emission(s, o);
            bp[j] = from;
        }
        delta = next;
        back.push(bp);
    }
    let mut state = if delta[1] > delta[0] { 1 } else { 0 };
    let mut out = vec![Movement::Moving; t_len];
    for t in (0..t_len).rev() {
        out[t] = STATES[state];
        state = back[t][state];
    }
    out
}

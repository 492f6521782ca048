use serde::{Deserialize, Serialize};

use super::RobotError;

/// Deterministic finite automaton with transition `B' = T(B, A)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AutomatonTable", into = "AutomatonTable")]
pub struct Automaton {
    state_count: usize,
    input_count: usize,
    /// Row-major over `(state, input)`.
    transition: Vec<usize>,
    initial_state: usize,
}

/// Serialized form: one row of next states per current state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonTable {
    pub transition: Vec<Vec<usize>>,
    #[serde(default)]
    pub initial_state: usize,
}

impl TryFrom<AutomatonTable> for Automaton {
    type Error = RobotError;

    fn try_from(t: AutomatonTable) -> Result<Self, RobotError> {
        Automaton::new(&t.transition, t.initial_state)
    }
}

impl From<Automaton> for AutomatonTable {
    fn from(a: Automaton) -> Self {
        AutomatonTable {
            transition: a
                .transition
                .chunks(a.input_count)
                .map(|r| r.to_vec())
                .collect(),
            initial_state: a.initial_state,
        }
    }
}

impl Automaton {
    /// `rows[state][input]` is the next state.
    pub fn new(rows: &[Vec<usize>], initial_state: usize) -> Result<Self, RobotError> {
        let state_count = rows.len();
        let input_count = rows.first().map_or(0, |r| r.len());
        if state_count == 0 || input_count == 0 {
            return Err(RobotError::EmptyAutomaton);
        }
        let mut transition = Vec::with_capacity(state_count * input_count);
        for (state, row) in rows.iter().enumerate() {
            if row.len() != input_count {
                return Err(RobotError::TableShape {
                    expected: state_count * input_count,
                    found: rows.iter().map(Vec::len).sum(),
                });
            }
            for (input, &target) in row.iter().enumerate() {
                if target >= state_count {
                    return Err(RobotError::TransitionOutOfRange { state, input, target });
                }
                transition.push(target);
            }
        }
        if initial_state >= state_count {
            return Err(RobotError::InitialOutOfRange(initial_state));
        }
        Ok(Self {
            state_count,
            input_count,
            transition,
            initial_state,
        })
    }

    fn from_fn(states: usize, inputs: usize, f: impl Fn(usize, usize) -> usize) -> Result<Self, RobotError> {
        let rows: Vec<Vec<usize>> = (0..states).map(|s| (0..inputs).map(|a| f(s, a)).collect()).collect();
        Self::new(&rows, 0)
    }

    /// Ignores its input.
    pub fn identity(states: usize, inputs: usize) -> Result<Self, RobotError> {
        Self::from_fn(states, inputs, |s, _| s)
    }

    /// Two states, two inputs, `B' = B ⊕ A`.
    pub fn xor_flip() -> Self {
        Self::from_fn(2, 2, |s, a| s ^ a).expect("static table")
    }

    /// Counts occurrences of input `counted` modulo `states`.
    pub fn counter(states: usize, inputs: usize, counted: usize) -> Result<Self, RobotError> {
        Self::from_fn(states, inputs, |s, a| if a == counted { (s + 1) % states } else { s })
    }

    /// Latches the first nonzero input and ignores everything after it.
    /// State 0 means "ready"; state `a` means "first saw input `a`".
    pub fn first_reading(inputs: usize) -> Result<Self, RobotError> {
        Self::from_fn(inputs, inputs, |s, a| if s == 0 { a } else { s })
    }

    /// Records the whole sequence of nonzero inputs up to `depth` of them.
    ///
    /// With `k = inputs − 1` reading values the states are the nodes of a
    /// complete `k`-ary tree of depth `depth` in heap order: reading `r` moves
    /// node `s` to its child `k·s + r`. Input 0 leaves the state unchanged.
    /// Each input column is completed to a permutation (leaves go to the
    /// unused targets in ascending order), so the automaton is injective per
    /// column and needs no archive registers.
    pub fn sequence_recorder(inputs: usize, depth: u32) -> Result<Self, RobotError> {
        if inputs < 2 {
            return Err(RobotError::EmptyAutomaton);
        }
        let k = inputs - 1;
        let internal: usize = (0..depth).map(|l| k.pow(l)).sum();
        let states = internal + k.pow(depth);
        let mut rows = vec![vec![0usize; inputs]; states];
        for (s, row) in rows.iter_mut().enumerate() {
            row[0] = s;
        }
        for r in 1..inputs {
            let mut used = vec![false; states];
            for (s, row) in rows.iter_mut().enumerate().take(internal) {
                row[r] = k * s + r;
                used[k * s + r] = true;
            }
            let mut free = (0..states).filter(|&t| !used[t]);
            for row in rows.iter_mut().skip(internal) {
                row[r] = free.next().expect("as many leaves as free targets");
            }
        }
        Self::new(&rows, 0)
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn input_count(&self) -> usize {
        self.input_count
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn next(&self, state: usize, input: usize) -> usize {
        self.transition[state * self.input_count + input]
    }

    /// State after reading `inputs` from the initial state.
    pub fn fold(&self, inputs: &[usize]) -> usize {
        inputs.iter().fold(self.initial_state, |s, &a| self.next(s, a))
    }

    /// First input whose column `state -> next(state, input)` is not
    /// injective.
    pub fn non_injective_input(&self) -> Option<usize> {
        (0..self.input_count).find(|&a| {
            let mut seen = vec![false; self.state_count];
            (0..self.state_count).any(|s| std::mem::replace(&mut seen[self.next(s, a)], true))
        })
    }

    pub fn is_column_injective(&self) -> bool {
        self.non_injective_input().is_none()
    }
}

//! Finite state automaton with an absorbing sink.
//!
//! The state space seen by callers is the domain's own state type augmented
//! with one extra absorbing element, [`FsaState::Sink`], that captures every
//! illegal transition. The transition function is total: applying any action
//! to the sink, or an illegal action to a live state, yields the sink again.
//! Domain implementations only ever deal in live states; the sink bookkeeping
//! lives here.

/// A point in the augmented state space: a live domain state or the sink.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FsaState<S> {
    Live(S),
    Sink,
}

impl<S> FsaState<S> {
    pub fn is_sink(&self) -> bool {
        matches!(self, FsaState::Sink)
    }

    /// Borrow the live state, if any.
    pub fn live(&self) -> Option<&S> {
        match self {
            FsaState::Live(s) => Some(s),
            FsaState::Sink => None,
        }
    }

    pub fn into_live(self) -> Option<S> {
        match self {
            FsaState::Live(s) => Some(s),
            FsaState::Sink => None,
        }
    }
}

/// A deterministic automaton over a finite action alphabet.
///
/// Implementations return [`FsaState::Sink`] from [`Automaton::apply`] for
/// exactly the actions outside [`Automaton::legal_actions`]; a state whose
/// legal set is empty is terminal but still live (a finished game is not an
/// error).
pub trait Automaton: Sync {
    type State: Clone + Send + Sync;
    type Action: Clone + PartialEq + Send + Sync;

    fn initial(&self) -> Self::State;

    /// Actions with a live successor, in a deterministic order.
    fn legal_actions(&self, state: &Self::State) -> Vec<Self::Action>;

    /// One transition step from a live state; sink iff the action is illegal.
    fn apply(&self, state: &Self::State, action: &Self::Action) -> FsaState<Self::State>;

    /// All `(action, successor)` pairs. Implementations with a cheaper
    /// combined path should override this.
    fn successors(&self, state: &Self::State) -> Vec<(Self::Action, Self::State)> {
        self.legal_actions(state)
            .into_iter()
            .filter_map(|a| {
                let next = self.apply(state, &a).into_live()?;
                Some((a, next))
            })
            .collect()
    }
}

/// Total transition function over the augmented space.
pub fn apply<A: Automaton>(
    fsa: &A,
    state: &FsaState<A::State>,
    action: &A::Action,
) -> FsaState<A::State> {
    match state {
        FsaState::Live(s) => fsa.apply(s, action),
        FsaState::Sink => FsaState::Sink,
    }
}

/// Left fold of [`apply`]; sink as soon as any prefix leaves the legal set.
pub fn apply_sequence<A: Automaton>(
    fsa: &A,
    state: &FsaState<A::State>,
    actions: &[A::Action],
) -> FsaState<A::State>
where
    A::State: Clone,
{
    let mut current = match state {
        FsaState::Live(s) => FsaState::Live(s.clone()),
        FsaState::Sink => return FsaState::Sink,
    };
    for action in actions {
        current = apply(fsa, &current, action);
        if current.is_sink() {
            return FsaState::Sink;
        }
    }
    current
}

/// Membership test for the set of valid action sequences from `state`.
pub fn is_valid_sequence<A: Automaton>(
    fsa: &A,
    state: &FsaState<A::State>,
    actions: &[A::Action],
) -> bool {
    !state.is_sink() && !apply_sequence(fsa, state, actions).is_sink()
}

/// A sampled path through the automaton.
///
/// Replaying `actions` from the state the trajectory started at reproduces
/// `state`. `terminated_early` is set when the legal set emptied before the
/// requested depth.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S, T> {
    pub state: S,
    pub actions: Vec<T>,
    pub terminated_early: bool,
}

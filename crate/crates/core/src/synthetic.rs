//! A constant-branching tree automaton with closed-form acceptance
//! probabilities, used to calibrate the estimators.
//!
//! Every state exposes `arity` legal actions out of a shared alphabet of
//! `alphabet` symbols, and each child has the same arity again. Pairing a
//! full-arity source state with a reduced-arity acceptor state gives a
//! homogeneous tree where a uniformly sampled branch survives each level
//! with probability `arity_acceptor / arity_source`, so the probability that
//! a depth-m trajectory survives is exactly that ratio to the m-th power.

use crate::fsa::{Automaton, FsaState};

/// State in the branching tree: depth plus the arity carried by this branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TreeState {
    pub depth: u32,
    pub arity: u8,
}

/// The tree automaton; actions are symbol indices `0..alphabet`.
#[derive(Clone, Copy, Debug)]
pub struct BranchingTree {
    pub alphabet: u8,
}

impl BranchingTree {
    pub fn new(alphabet: u8) -> BranchingTree {
        assert!(alphabet > 0);
        BranchingTree { alphabet }
    }

    /// A root state accepting the first `arity` symbols at every level.
    pub fn state(&self, arity: u8) -> TreeState {
        assert!(arity <= self.alphabet);
        TreeState { depth: 0, arity }
    }
}

impl Automaton for BranchingTree {
    type State = TreeState;
    type Action = u8;

    fn initial(&self) -> TreeState {
        TreeState {
            depth: 0,
            arity: self.alphabet,
        }
    }

    fn legal_actions(&self, state: &TreeState) -> Vec<u8> {
        (0..state.arity).collect()
    }

    fn apply(&self, state: &TreeState, action: &u8) -> FsaState<TreeState> {
        if *action < state.arity {
            FsaState::Live(TreeState {
                depth: state.depth + 1,
                arity: state.arity,
            })
        } else {
            FsaState::Sink
        }
    }
}

//! Core library for measuring how faithfully a sequence model tracks the
//! state of a rule-governed environment.
//!
//! The pieces fit together like this: [`fsa`] defines a finite state
//! automaton with an absorbing sink for illegal transitions, [`chess`]
//! instantiates it with a full rules engine plus FEN/SAN/PGN parsing,
//! [`metrics`] scores predicted states against true ones (string metrics and
//! exact affordance overlap), and [`estimators`] approximates the affordance
//! precision/recall probabilities by Monte Carlo sampling when exact
//! enumeration is out of reach. [`synthetic`] provides a constant-branching
//! tree automaton with known closed-form answers for calibration.
//!
//! With the default `parallel` feature the hot loops (perft, frontier
//! expansion, seeded batches) run on rayon; disabling default features gives
//! a fully sequential build with identical results.

pub mod chess;
pub mod estimators;
pub mod exec;
pub mod fsa;
pub mod metrics;
pub mod synthetic;

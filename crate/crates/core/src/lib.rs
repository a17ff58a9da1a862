//! Two-player zero-sum stopping games on finite scenario trees.
//!
//! Player 1 receives `a` if player 1 stops first, `b` if player 2 stops first
//! and `c` on a simultaneous stop; player 2 pays. Payoffs are step functions of
//! time on a finite grid. The crate computes the mixed value by backward
//! induction on a frozen game, assembles near-pure ε-optimal strategies, and
//! ships an independent best-response oracle to certify them.
//!
//! ```
//! use stopgame::{game_value, GameSpec, Payoff, ScenarioTree};
//!
//! let tree = ScenarioTree::chain(&[0.0, 1.0, 2.0]).unwrap();
//! let game = GameSpec::constant(tree, Payoff::new(1.0, 1.0, 0.0)).unwrap();
//! let report = game_value(&game, 0.01, 0.25).unwrap();
//! assert_eq!(report.value, 1.0);
//! ```

// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod doc;
pub mod error;
pub mod eval;
pub mod fuzz;
pub mod game;
pub mod oracle;
pub mod solver;
pub mod strategy;
pub mod tree;

pub use doc::{parse_game, parse_strategy, GameDoc, StrategyDoc};
pub use error::{Error, Result};
pub use eval::{gamma_mixed, gamma_mixed_vs_pure, gamma_pure, gamma_pure_vs_mixed, gamma_restricted, order_probabilities, Event, OrderProbabilities, StopKind};
pub use game::{GameSpec, GameSpecBuilder, Payoff};
pub use oracle::{best_response, guarantee, pure_gap, BestResponseReport, PureGapReport, ResponseAction};
pub use solver::{
    epsilon_optimal_strategy, freeze, frontier, game_value, optimal_threshold_time, pure_value_check, value_process, FrontierAnalysis,
    FrontierEntry, FrontierTag, PureValue, ValueProcess, ValueReport,
};
pub use strategy::{Behavior, Player, PureAction, PureStoppingTime, RandomizedStoppingTime};
pub use tree::{Instant, NodeIx, NodeValues, ScenarioTree};

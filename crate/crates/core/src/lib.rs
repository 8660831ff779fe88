//! Discrete multi-player position-building trading game.
//!
//! Each player must move from zero holdings to a target position `V` over `T`
//! steps, buying at most `θ_U` and at least `θ_L` shares per step. Costs combine
//! temporary impact (same-step volume of all players) and permanent impact
//! (holdings accumulated before the step), weighted by `κ`.
//!
//! The crate provides the exact cost model, a dynamic program over
//! one-step-decomposable costs, best-response dynamics, a linearized
//! Follow-the-Perturbed-Leader learner with its no-regret dynamics, a tree
//! swap-regret wrapper, and equilibrium diagnostics over play histories.
//!
//! Everything here is `no_std` (with `alloc`) and free of IO; the `tradegame`
//! crate carries configuration, file formats and the CLI.

#![no_std]

extern crate alloc;

pub mod br;
pub mod dp;
pub mod enumerate;
pub mod ftpl;
pub mod game;
pub mod metrics;
pub mod sample;
pub mod seed;
pub mod swap;
pub mod validate;

pub use br::{best_response, cycle_fixture, cycle_fixture_check, run_br_dynamics, BrDynamicsConfig};
pub use dp::{minimize, minimize_conditioned, DpError, OneStepCost};
pub use ftpl::{run_no_regret_dynamics, CostVector, FtplLearner, StrategyEmbedding};
pub use game::{parse_increments, ActionSpace, ExactKappa, GameError, GameSpec, Profile, Schedule};
pub use metrics::{EmpiricalDistributions, MetricsError, PlayHistory};
pub use swap::{run_swap_dynamics, TreeSwapConfig};

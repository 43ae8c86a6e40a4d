//! Gradient boosting of small additive rule ensembles.
//!
//! Each boosting round fits a conjunctive rule that maximizes the
//! second-order boosting gain. The [`search`] module finds the provably
//! optimal rule by best-first branch-and-bound over core queries, bounded by
//! the linear-time tight optimistic estimator in [`bound`]. A greedy
//! hill-climbing learner is provided as a baseline, together with synthetic
//! data generators and an evaluation harness.

pub mod bound;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod learners;
pub mod loss;
pub mod search;
pub mod synthgen;

pub use bound::{tight_bound, BoundResult, Cut};
pub use dataset::{
    build_propositions, intersect_extents, load_csv, Column, ColumnData, Dataset, Op, Proposition, PropositionSet,
    Task, Threshold,
};
pub use error::{Error, Result};
pub use learners::{boost, fit_greedy_rule, BoostConfig, Learner, Rule, RuleEnsemble};
pub use loss::{gradient_stats, objective, optimal_weight, regularized_risk, GradientStats, Loss, ObjectiveContext};
pub use search::{find_best_query, shortest_equivalent, PruneStats, Query, SearchConfig, SearchResult};

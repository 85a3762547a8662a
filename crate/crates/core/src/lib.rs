//! Worst-case equilibrium analysis for weighted congestion games with
//! fast-growing latency functions.

pub mod bounds;
pub mod decomposition;
pub mod equilibrium;
pub mod experiments;
pub mod game;
pub mod io;
pub mod latency;
pub mod lb;
pub mod numeric;
pub mod rational;

pub use bounds::{analyze, find_triple, g_at, g_hat, g_star, poa_bound, predict_scaling, Bound, BoundReport, OrderedTriple, SearchDomain, Verdict};
pub use decomposition::{
    build_classes, check_equilibrium_constraint, classify_triple_side, coordination_ratio_decomposed, ClassKey, ClassTable,
    ConstraintCheck, DecompositionError, ReferenceKind, Side,
};
pub use equilibrium::{
    best_response_dynamics, enumerate_nash, optimal_state, price_of_anarchy, DynamicsOutcome, EquilibriumError,
    EquilibriumReport, DEFAULT_CAP,
};
pub use io::{game_from_json, game_to_json, read_game, GameFileError};
pub use game::{CongestionMap, Game, GameError, NashVerdict, Player, StateProfile, Strategy};
pub use latency::{catalog, Family, LatencyClass, LatencyError, LatencyFunction, LatencySpec};
pub use lb::{
    build as build_lower_bound, ratio_lower_bound, search_params, verify_nash, LBInstance, LBParams, LbError, LowerBound, NashCheck,
    SearchResult,
};
pub use rational::{parse_rational, render_rational, Rational, RationalParseError};

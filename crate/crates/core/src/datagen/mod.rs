//! Semi-synthetic ratings data: an influence graph, a low-rank initial
//! rating matrix, and two opinion-dynamics evolutions over epochs.

mod graph;
mod ratings;

pub use graph::{gen_ws_graph, load_edge_list, parse_edge_list, InfluenceGraph, WS_ATTEMPTS};
pub use ratings::{
    evolve, evolve_a, evolve_b, from_game_scale, init_ratings, to_game_scale, AMode, EvolveOptions,
    RatingsTensor, Scale, FREEZE_TOLERANCE,
};

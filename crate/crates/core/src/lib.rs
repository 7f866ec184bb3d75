//! Folding one metric graph onto another with a uniform scale factor.
//!
//! A folding map sends every source vertex to a point of the target and every
//! source edge to a walk whose length is at most `scale` times the edge
//! length, so that the walks together cover the target.

pub mod bounds;
pub mod catalog;
pub mod covering;
pub mod graph;
mod grid;
pub mod hardness;
pub mod ilp;
pub mod improve;
pub mod lp;
pub mod lp_refine;
pub mod postman;
pub mod rational;
pub mod search;

pub use catalog::{platonic, PlatonicName};
pub use covering::{verify, FoldingMap, VerifyReport};
pub use graph::{EdgeId, MetricGraph, PointOnGraph, VertexId, Walk};
pub use rational::{r, Rational};

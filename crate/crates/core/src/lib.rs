//! Certification and synthesis of saddle-node bifurcations from sampled
//! vector fields.
//!
//! The pipeline reads finite samples of `f(x, λ)`, certifies boundary signs
//! under a Lipschitz bound, builds an isolating block with an
//! attractor/repeller split, computes homology Conley indices, and, when the
//! indices match a saddle-node, synthesizes a deformation `F(x, λ, σ)` to a
//! canonical fold model that agrees with `f` outside the block.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod block;
pub mod cerf;
pub mod certify;
pub mod cubical;
pub mod dynamics;
pub mod field;
pub mod homology;
pub mod ingest;
pub mod pipeline;
pub mod snf;
pub mod spatial;
pub mod synthesis;

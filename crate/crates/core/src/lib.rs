//! Distributed least squares under a bandwidth limit.
//!
//! Agents each hold a block of rows of `A` and `b`, exchange one portion of
//! their estimate per iteration with their neighbors, and converge to a
//! least-squares solution of `Ax = b`.

pub mod graph;
pub mod linalg;
pub mod problem;
pub mod protocols;
pub mod sim;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/partitioning.md")]
    mod partitioning {}
    #[doc = include_str!("../../../book/src/scheduled-law.md")]
    mod scheduled_law {}
    #[doc = include_str!("../../../book/src/step-size.md")]
    mod step_size {}
    #[doc = include_str!("../../../book/src/limits.md")]
    mod limits {}
    #[doc = include_str!("../../../book/src/tracking.md")]
    mod tracking {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
}

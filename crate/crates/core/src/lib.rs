#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod cone;
pub mod config;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod krylov;
pub mod monitor;
pub mod pencil;
pub mod snapshot;
pub mod solver;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cones.md")]
    mod cones {}
    #[doc = include_str!("../../../book/src/pencils.md")]
    mod pencils {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/monitors.md")]
    mod monitors {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

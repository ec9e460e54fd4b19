//! Desk-scale machinery for scale-smooth Fredholm theory.
//!
//! The crate is organised bottom-up:
//!
//! - [`scspace`]: discretized scale spaces of exponentially weighted Sobolev
//!   functions on a truncated line or cylinder.
//! - [`splicing`]: cut-off, gluing profiles, gluing / anti-gluing and the
//!   splicing projection.
//! - [`germ`]: contraction-germ fixed point solver and fillers.
//! - [`morse`]: gradient-flow trajectories, counting, pregluing and
//!   correction.
//! - [`degen`]: degeneration structures, operations and the Master Equation.
//! - [`sftsym`]: the graded `p`/`q`/`ℏ` symbol calculus.
//! - [`algebra`]: convolution, graded commutators, `D_Q` and homology.
//! - [`suite`]: the acceptance battery shared by the CLI and the test suite.

pub mod algebra;
pub mod config;
pub mod degen;
pub mod f2;
pub mod germ;
pub mod morse;
pub mod scspace;
pub mod sftsym;
pub mod splicing;
pub mod suite;

mod interp;

/// Maps `f` over `items`, in parallel with the `parallel` feature.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

//! Virtual-contest Elo evaluation for code-generating models.
//!
//! The crate judges candidate programs locally, places the resulting
//! scoreboard row among the humans of a finished contest, and turns that
//! place into an Elo rating. On top of that sit the experiments that show
//! how much the rating moves with submission order, contest choice and
//! run-to-run noise.
//!
//! The guide in `book/` walks through each piece; its code listings are
//! compiled and run as doctests of this crate.

pub mod config;
pub mod dataset;
pub mod experiments;
pub mod genlab;
pub mod judge;
pub mod rating;
pub mod standings;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/rating.md")]
    mod rating {}
    #[doc = include_str!("../../../book/src/standings.md")]
    mod standings {}
    #[doc = include_str!("../../../book/src/judge.md")]
    mod judge {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/genlab.md")]
    mod genlab {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
}

//! Sofic entropy of free group actions: f-invariant of Markov chains,
//! microstate counting over finite actions, and bounded orbit-change
//! encodings.

pub mod action;
pub mod entropy;
pub mod error;
pub mod free_group;
pub mod markov;
pub mod microstates;
pub mod orbit;
pub mod rational;
pub mod sft;
pub mod shift;

pub use error::{Error, Result};

// The guide's snippets run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/free-groups.md")]
    pub mod free_groups {}
    #[doc = include_str!("../../../book/src/shifts.md")]
    pub mod shifts {}
    #[doc = include_str!("../../../book/src/markov.md")]
    pub mod markov {}
    #[doc = include_str!("../../../book/src/microstates.md")]
    pub mod microstates {}
    #[doc = include_str!("../../../book/src/sft.md")]
    pub mod sft {}
    #[doc = include_str!("../../../book/src/orbit-encoding.md")]
    pub mod orbit_encoding {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}

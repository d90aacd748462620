pub mod collections;
pub mod covmodels;
pub mod error;
pub mod ggm;
pub mod numerics;
pub mod simharness;
pub mod testcore;
pub mod theory;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fisher.md")]
    mod fisher {}
    #[doc = include_str!("../../../book/src/procedures.md")]
    mod procedures {}
    #[doc = include_str!("../../../book/src/collections.md")]
    mod collections {}
    #[doc = include_str!("../../../book/src/simulations.md")]
    mod simulations {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

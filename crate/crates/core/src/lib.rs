pub mod bernoulli;
pub mod diffcalc;
mod ddreal;
pub mod error;
pub mod hfun;
pub mod renorm;
pub mod series;
pub mod zetaref;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use series::{SeriesEval, SeriesStatus};

// The book's snippets run as doc-tests of these otherwise empty modules.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/differences.md")]
    mod differences {}
    #[doc = include_str!("../../../book/src/hurwitz.md")]
    mod hurwitz {}
    #[doc = include_str!("../../../book/src/families.md")]
    mod families {}
    #[doc = include_str!("../../../book/src/bernoulli.md")]
    mod bernoulli {}
    #[doc = include_str!("../../../book/src/renormalization.md")]
    mod renormalization {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

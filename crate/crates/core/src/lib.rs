//! Construction, deformation and pointwise verification of metric
//! f-contact, f-K-contact and S-structures on coordinate charts.
//!
//! Tensors are given by component functions (usually [`expr`] strings) and
//! evaluated together with their first partials through [`dual`] numbers.
//! [`verify`] checks the axiom hierarchy at sample points, [`deform`]
//! implements rotation, anti-rotation and type II deformation, [`torus`] the
//! lift to `M × ℝ` and its inverse slice, and [`rotation_search`] the search
//! for an orthogonal matrix realizing a prescribed combination of one-forms.
//!
//! ```
//! use fcontact::catalog::{self, CatalogParams};
//! use fcontact::chart::sample_points;
//! use fcontact::verify::{verify, Level, VerifyOptions};
//!
//! let entry = catalog::get("s-model", CatalogParams::new(1, 2)).unwrap();
//! let points = sample_points(entry.structure.chart(), 16, 42);
//! let report = verify(&entry.structure, &points, &VerifyOptions::default());
//! assert_eq!(report.level, Level::S);
//! ```

pub mod calculus;
pub mod catalog;
pub mod chart;
pub mod compare;
pub mod definition;
pub mod deform;
pub mod dual;
pub mod error;
pub mod expr;
pub mod field;
pub mod rotation_search;
pub mod structure;
pub mod torus;
pub mod verify;

pub use chart::{sample_points, Chart, Point};
pub use dual::Dual;
pub use error::{Error, EvalError, ParseError, Result};
pub use expr::Expr;
pub use field::{Metric, OneForm, ScalarField, Tensor11, VectorField};
pub use structure::FStructure;
pub use verify::{verify, Level, VerificationReport, VerifyOptions};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/calculus.md")]
    mod calculus {}
    #[doc = include_str!("../../../book/src/structures.md")]
    mod structures {}
    #[doc = include_str!("../../../book/src/deformations.md")]
    mod deformations {}
    #[doc = include_str!("../../../book/src/mapping-torus.md")]
    mod mapping_torus {}
    #[doc = include_str!("../../../book/src/rotation-search.md")]
    mod rotation_search {}
}

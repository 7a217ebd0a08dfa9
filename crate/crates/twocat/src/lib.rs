//! A workbench for small 2-categories presented by generators and relations.
//!
//! The pieces, bottom up:
//!
//! * [`graded`] — finite tables for categorically graded sets, pre-n-categories
//!   and strict n-categories, with exhaustive axiom checkers.
//! * [`term`] — free constructions: hash-consed composition trees over
//!   declared generators, recursive boundaries, bounded enumeration of the
//!   chain strata.
//! * [`congruence`] — the finest relation generated by a set of term pairs,
//!   closed under boundaries and composition, computed by worklist congruence
//!   closure on a bounded fragment; the two-stage quotient that never merges
//!   1-cells while identifying 2-cells; bounded equality decision with merge
//!   certificates.
//! * [`bicat`] — presentations of 2-categories: associator and unitor cells
//!   with their invertibility pairs, pentagon/triangle/naturality relations,
//!   and pasting composites.
//! * [`action`] — monoidal categories acting on a category, validation of the
//!   pentagon/triangle data, and the quotient of a category by a monoidal
//!   action as a presented 2-category.
//! * [`presio`] — the `.2pres`/`.2frag` text formats and everything the CLI
//!   needs.
//!
//! The guide under `book/` walks through the same material chapter by
//! chapter; its code blocks are compiled as doc-tests via [`book`].

pub mod bicat;
pub mod congruence;
pub mod graded;
pub mod term;

pub use graded::{
    check_graded, check_pre_n, check_strict_n, AxiomId, AxiomReport, CompositionTable, Elem,
    FiniteCategory, GradedSetTable, TableError, Violation,
};
pub use term::{GenId, GeneratingData, GenKind, GeneratorDecl, Level, TermError, TermId, TermNode};

/// CLI entry point; returns the process exit code.
pub fn run() -> i32 {
    0
}

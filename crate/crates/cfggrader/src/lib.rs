//! Structural similarity for small imperative programs, and grading on top
//! of it.
//!
//! The pipeline: parse mini-IR text into per-function control flow graphs
//! ([`ir`]), join them under a synthetic root, and score how well two graphs
//! align by iterating a neighbor-matching fixed point ([`neighbor`]) whose
//! inner step is a maximum-weight assignment ([`assignment`]). Node contents
//! can fold in via instruction-sequence edit distance ([`content`]). The
//! [`grading`] module turns similarity against model solutions, test
//! results, and a bug flag into a predicted grade via least squares.
//!
//! ```
//! use cfggrader::ir::parse_program;
//! use cfggrader::neighbor::{program_similarity, EngineConfig};
//!
//! let a = parse_program("func main { e: ret }").unwrap();
//! let b = parse_program("func main { e: ret }").unwrap();
//! let sim = program_similarity(&a, &b, &EngineConfig::default());
//! assert_eq!(sim, 1.0);
//! ```

pub mod assignment;
pub mod content;
pub mod error;
pub mod grading;
pub mod ir;
pub mod manifest;
pub mod neighbor;

pub use error::{Error, Result};

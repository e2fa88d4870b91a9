//! Hopf algebras, operads and properads of flow charts.
//!
//! Trees decorated by the elementary operations of recursive functions generate a
//! Connes–Kreimer style Hopf algebra. This crate computes its coproduct and antipode
//! exactly, solves combinatorial Dyson–Schwinger equations in it and in the associated
//! operad and properad, evaluates recursive functions under a fuel budget, and
//! renormalizes the halting-problem Feynman rule.

pub mod basis;
pub mod dse;
pub mod element;
pub mod forest;
pub mod grafting;
pub mod hopf;
pub mod json;
pub mod lincomb;
pub mod linsolve;
pub mod operad;
pub mod parse;
pub mod properad;
pub mod recfun;
pub mod renorm;
pub mod sample;
pub mod scalar;
pub mod tree;

pub use element::{AlgebraError, Element, Tensor};
pub use forest::{Forest, Mode};
pub use lincomb::LinComb;
pub use parse::{parse_element, parse_forest, parse_tree, ParseError};
pub use recfun::RecFun;
pub use scalar::Q;
pub use tree::{Input, Label, Tree};

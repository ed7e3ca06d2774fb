//! Assumption generation and local specifications for perception-based
//! control systems modelled as labeled transition systems.

pub mod action;
pub mod assume;
pub mod dtmc;
pub mod fsp;
pub mod localspec;
pub mod lts;
pub mod random;
pub mod taxinet;

pub use action::{Action, Label, Trace};
pub use lts::{Lts, LtsBuilder, StateId};

//! Signal temporal logic: formula trees, signals, exact robustness, and the
//! text grammar used to read and write formulae.

mod formula;
mod parse;
mod print;
mod robustness;
mod signal;

pub use formula::{Cmp, Formula, Interval, Predicate};
pub use parse::{parse_formula, ParseError};
pub use print::{print_formula, print_formula_with, Precision};
pub use robustness::{robustness, robustness_trace, satisfies, RobustnessError};
pub use signal::{Signal, SignalError};

//! PDDL front end: lexer, s-expression parser, canonical printer, and the
//! `.stream` declaration extension.

pub mod ast;
pub mod lexer;
mod parser;
mod printer;

pub use parser::{parse_domain, parse_problem, parse_streams};
pub use printer::{print_pddl, print_problem};

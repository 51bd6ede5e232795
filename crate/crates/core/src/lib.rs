pub mod corpus;
pub mod config;
pub mod ctype;
pub mod dtsi;
pub mod event;
pub mod expr;
pub mod hooks;
pub mod interp;
pub mod macros;
pub mod memory;
pub mod parse;
pub mod repl;
pub mod token;
pub mod value;

pub mod table;
pub mod sql;
pub mod llm;
pub mod profile;
pub mod prompt;
pub mod session;
pub mod extract;
pub mod reason;
pub mod pipeline;
pub mod eval;
pub mod config;

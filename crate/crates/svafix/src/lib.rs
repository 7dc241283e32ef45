//! Trace-guided repair of SystemVerilog assertions.
//!
//! The pipeline parses a synthesizable RTL subset and a failing assertion,
//! builds a signal-level flow graph, replays counterexample traces against
//! candidate rewrites, and reports which assertions could be repaired.

pub mod cdfg;
pub mod classify;
pub mod corpus;
pub mod expr;
pub mod fix;
pub mod hdl;
pub mod llm;
pub mod pipeline;
pub mod report;
pub mod retrieval;
pub mod source;
pub mod trace;

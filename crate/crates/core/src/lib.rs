pub mod cnf;
pub mod community;
pub mod generator;
pub mod gnn;
pub mod graphrep;
pub mod harness;
pub mod metrics;
pub mod par;
pub mod postprocess;
pub mod splitter;
pub mod synth;

//! Detection of hallucinations and omissions in mental-health chatbot
//! responses.
//!
//! The pipeline combines an LLM-as-a-judge baseline with five-dimensional
//! prompt-driven feature extraction and classical supervised classifiers,
//! evaluated under stratified balanced cross-validation with within-fold
//! threshold and hyperparameter selection.

pub mod ablation;
pub mod backend;
pub mod cli;
pub mod dataset;
pub mod ensemble;
pub mod eval;
pub mod features;
pub mod judge;
pub mod ml;
pub mod prompts;
pub mod rng;
pub mod store;
pub mod stratify;
pub mod synthetic;
pub mod textstats;

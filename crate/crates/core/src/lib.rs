#![no_std]

extern crate alloc;

pub mod adversarial;
pub mod backend;
pub mod builtin;
pub mod classify;
pub mod lang;
pub mod mutation;
pub mod pipeline;
pub mod prompt;
pub mod reduction;
pub mod rng;
pub mod scoring;
pub mod seed_gen;
pub mod stats;
pub mod suite;
pub mod value;

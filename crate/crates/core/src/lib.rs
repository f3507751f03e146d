#![no_std]
extern crate alloc;

pub mod cl4fb;
pub mod crypto;
pub mod diag;
pub mod grid;
pub mod model;
pub mod runtime;
pub mod transport;
pub mod validate;
pub mod wire;

//! Library surface of the streamscreen CLI, split out so the command
//! pipelines are testable in-process.

pub mod args;
pub mod bench;
pub mod compare;
pub mod io;
pub mod manifest;
pub mod screen;

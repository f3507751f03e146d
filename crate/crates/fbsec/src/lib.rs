//! Host side of the secure function-block toolchain: the `.fbs` language,
//! deployment plans on disk, UDP transport, the latency bench and the CLI.

pub mod bench;
pub mod casestudy;
pub mod cli;
pub mod fbs;
pub mod net;
pub mod plan;

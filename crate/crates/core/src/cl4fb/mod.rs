//! Lowering of secure-link annotations into sender/receiver networks.

pub mod blocks;
pub mod channels;
pub mod lower;

pub use channels::{allocate_channels, ChannelAssignment, ChannelRequest, LinkChannels, PortOverflow};
pub use lower::{
    compile_secure_links, CompileOptions, DeploymentPlan, DevicePlan, LoweredLink, Role, RoleEntry, DEFAULT_BASE,
};

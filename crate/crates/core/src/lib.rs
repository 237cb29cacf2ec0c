//! Location and sizing of charging stations for battery-electric heavy-duty
//! trucks under uncertain adoption and grid capacity.

pub mod analysis;
pub mod energy;
pub mod error;
pub mod fixtures;
pub mod instance;
pub mod lshaped;
pub mod mipcore;
pub mod pathgen;
pub mod problem;
pub mod scenario;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

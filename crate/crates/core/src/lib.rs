pub mod actors;
pub mod bench;
pub mod config;
pub mod engine;
pub mod error;
pub mod forwarder;
pub mod metrics;
pub mod name;
pub mod network;
pub mod onion;
pub mod packet;
pub mod placement;
pub mod protocol;
pub mod scenario;
pub mod sweep;
pub mod topology;

pub use config::{CensorStrategy, Mode, ScenarioConfig};
pub use error::{Result, SimError};
pub use name::Name;

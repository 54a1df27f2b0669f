pub mod auditor;
pub mod gateway;
pub mod mock;
pub mod resource;
pub mod semantics;
pub mod server;
pub mod wps;

//! HTTP endpoints: JSON Web API micro-services, native graph endpoints and
//! the bound-join federator.

pub mod cache;
pub mod config;
pub mod federator;
pub mod microservice;
pub mod native;
pub mod protocol;
pub mod server;

pub use config::{FederationConfig, ServiceConfig};
pub use federator::{Federator, HttpRemoteClient, RemoteClient};
pub use microservice::MicroService;
pub use native::NativeEndpoint;
pub use server::{spawn_local, spawn_server, RunningServer};

//! Human-as-prime play mode.
//!
//! A [`Session`] runs one episode in which the client supplies the prime's
//! actions and a trained helper acts greedily. Messages are newline-delimited
//! JSON ([`wire`]); [`server`] carries them over a WebSocket at `/ws`.

pub mod server;
pub mod session;
pub mod wire;

pub use server::{router, serve, ServeConfig, ServeError};
pub use session::{replay, Session, SessionError, Transcript};
pub use wire::{ClientMessage, ServerMessage};

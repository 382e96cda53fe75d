//! Deterministic discrete-event simulation kernel.

mod kernel;
mod link;
mod rng;
mod time;

pub use kernel::{Event, Kernel};
pub use link::Link;
pub use rng::SeededRng;
pub use time::SimTime;

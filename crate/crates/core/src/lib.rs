//! Discrete-event simulation of scalable and classic congestion control
//! sharing a bottleneck behind a choice of queue disciplines.

pub mod aqm;
pub mod cc;
pub mod des;
pub mod expcli;
pub mod harness;
pub mod packet;

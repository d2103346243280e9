//! Extensions of the baseline model: network effects among the idiosyncratic
//! characteristics and common ownership across firms.

pub mod network;
pub mod ownership;

//! Gesture-driven robot programming: keymaps, a windowed confirmation filter,
//! an incremental interpreter with in-field functions and variables, and a
//! simulated underwater vehicle to run the resulting commands.

pub mod config;
pub mod confirmer;
pub mod interpreter;
pub mod keymap;
pub mod robot;
pub mod session;
pub mod stream_sim;
pub mod wire;

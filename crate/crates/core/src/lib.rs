//! Core of the virtual-rope ("marionette") teleoperation stack.

pub mod command;
pub mod control;
pub mod haptics;
pub mod robot;
pub mod scenario;
pub mod station;
pub mod time;

//! Ridesharing dispatch for station-based mobility-on-demand fleets.
//!
//! The pieces, bottom up: [`network`] answers travel queries, [`model`]
//! evaluates plans, [`svdarp`] finds the best plan for one vehicle and a
//! group of requests, [`groupgen`] enumerates feasible groups, and
//! [`assignment`] picks one group per vehicle. [`ih`] is the greedy
//! alternative, [`fleet`] places stations and moves idle vehicles between
//! them, and [`simulator`] runs everything in 30 s batches.

pub mod assignment;
pub mod bnb;
pub mod dispatch;
pub mod fleet;
pub mod groupgen;
pub mod ih;
pub mod model;
pub mod network;
pub mod simulator;
pub mod svdarp;
pub mod vga;

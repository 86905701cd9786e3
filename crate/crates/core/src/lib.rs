pub mod apps;
pub mod criteria;
pub mod engine;
pub mod error;
pub mod events;
pub mod io;
pub mod parallel;
pub mod perm;
pub mod rng;
pub mod verify;
pub mod witness;

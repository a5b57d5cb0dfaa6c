//! Questionnaire-based honeyword authentication.
//!
//! A user answers `q` personal questions. Each answer is reduced to a tuple of
//! `d` equally likely alternatives, and the user's password becomes the
//! sequence of option letters picking the true alternative in each tuple. The
//! server stores that sequence among `k - 1` decoy sequences that are pairwise
//! at least `lambda` symbols apart, while a separate honeychecker holds only
//! the position of the real one.

pub mod model;
pub mod grouping;
pub mod alternatives;
pub mod sweetwords;
pub mod vault;
pub mod honeychecker;
pub mod authservice;
pub mod analysis;
pub mod cli;

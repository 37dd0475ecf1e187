//! Shared front end of the `cpi` binary and its HTTP service.

pub mod api;
pub mod run;

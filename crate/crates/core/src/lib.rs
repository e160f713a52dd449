pub mod channel;
pub mod cli;
pub mod error;
pub mod lora_phy;
pub mod params;
pub mod signal;
pub mod simkit;
pub mod spectrum;
pub mod ucss_phy;

pub use error::{Error, Result};

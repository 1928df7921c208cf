use thiserror::Error;

/// Errors raised by parameter validation and by misuse of the structures.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("item {item} is outside the universe 1..={universe}")]
    ItemOutOfRange { item: u32, universe: u32 },
    #[error("window {window} is invalid after {processed} updates")]
    InvalidWindow { window: u64, processed: u64 },
    #[error("no updates have been processed")]
    Empty,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}

pub(crate) fn check_unit_open(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(param(name, "must lie in (0, 1)"))
    }
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(param(name, "must be positive and finite"))
    }
}

pub(crate) fn check_item(item: u32, universe: u32) -> Result<()> {
    if item == 0 || item > universe {
        Err(Error::ItemOutOfRange { item, universe })
    } else {
        Ok(())
    }
}

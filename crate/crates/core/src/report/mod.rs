//! Cost model and command-line reporting.

mod cli;
mod output;

pub use cli::{run_cli, EXIT_COMPUTE, EXIT_OK, EXIT_USAGE, SEED_ENV};
pub use output::{round_sig, Format};

use serde::Serialize;

use crate::album::AlbumSpec;
use crate::error::{Error, Result};

/// Price of a number of stickers in integer cents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub stickers: u64,
    pub unit_price_cents: u64,
    pub total_cents: u64,
    /// Brazilian rendering, e.g. `R$ 1.139,20`.
    pub formatted: String,
}

pub fn cost_of(stickers: u64, spec: &AlbumSpec) -> Result<CostReport> {
    let unit_price_cents = spec.price_cents();
    let total_cents = stickers
        .checked_mul(unit_price_cents)
        .ok_or(Error::CostOverflow {
            stickers,
            unit_price_cents,
        })?;
    Ok(CostReport {
        stickers,
        unit_price_cents,
        total_cents,
        formatted: format_brl(total_cents),
    })
}

/// `R$` amount with period thousands separators and a comma before the cents.
pub fn format_brl(cents: u64) -> String {
    let reais = (cents / 100).to_string();
    let mut grouped = String::with_capacity(reais.len() + reais.len() / 3);
    for (i, ch) in reais.chars().enumerate() {
        if i > 0 && (reais.len() - i).is_multiple_of(3) {
            grouped.push('.');
        }
        grouped.push(ch);
    }
    format!("R$ {},{:02}", grouped, cents % 100)
}

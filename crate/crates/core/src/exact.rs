//! Exact rational views of user-supplied decimal parameters.
//!
//! Tolerances, coverage ratios and the regularization weight arrive as `f64`
//! but are compared against integer counts. Reading them back through their
//! shortest decimal representation (`0.015` is `15/1000`, not the nearest
//! binary fraction) keeps boundary cases like `L = L*` on the intended side.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecimalError {
    #[error("value {0} is not a finite non-negative number")]
    NotFiniteNonNegative(f64),
    #[error("value {0} has too many decimal digits to be represented exactly")]
    TooPrecise(f64),
}

/// A non-negative rational `numer / denom` with `denom` a power of ten
/// (reduced by the gcd).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimal {
    pub numer: u64,
    pub denom: u64,
}

impl Decimal {
    pub const ZERO: Decimal = Decimal { numer: 0, denom: 1 };
    pub const ONE: Decimal = Decimal { numer: 1, denom: 1 };

    pub fn from_f64(value: f64) -> Result<Self, DecimalError> {
        if !value.is_finite() || value < 0.0 {
            return Err(DecimalError::NotFiniteNonNegative(value));
        }
        // `Display` for f64 is the shortest round-tripping representation
        // and never uses exponent notation.
        let text = format!("{value}");
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text.as_str(), ""),
        };
        if frac_part.len() > 18 {
            return Err(DecimalError::TooPrecise(value));
        }
        let denom = 10u64.pow(frac_part.len() as u32);
        let int: u64 = int_part
            .parse()
            .map_err(|_| DecimalError::TooPrecise(value))?;
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part
                .parse()
                .map_err(|_| DecimalError::TooPrecise(value))?
        };
        let numer = int
            .checked_mul(denom)
            .and_then(|v| v.checked_add(frac))
            .ok_or(DecimalError::TooPrecise(value))?;
        let g = gcd(numer, denom);
        Ok(Decimal {
            numer: numer / g,
            denom: denom / g,
        })
    }

    pub fn to_f64(self) -> f64 {
        self.numer as f64 / self.denom as f64
    }

    /// floor(self * n)
    pub fn floor_mul(self, n: u64) -> u64 {
        (self.numer as u128 * n as u128 / self.denom as u128) as u64
    }

    /// ceil(self * n)
    pub fn ceil_mul(self, n: u64) -> u64 {
        (self.numer as u128 * n as u128).div_ceil(self.denom as u128) as u64
    }

    pub fn le_one(self) -> bool {
        self.numer <= self.denom
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

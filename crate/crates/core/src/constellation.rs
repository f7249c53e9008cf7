//! Unit-average-power PSK and square QAM alphabets.

use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", try_from = "RawConstellation")]
pub enum Constellation {
    Psk(u32),
    Qam(u32),
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawConstellation {
    Psk(u32),
    Qam(u32),
}

impl TryFrom<RawConstellation> for Constellation {
    type Error = Error;

    fn try_from(raw: RawConstellation) -> Result<Self> {
        match raw {
            RawConstellation::Psk(m) => Constellation::psk(m),
            RawConstellation::Qam(m) => Constellation::qam(m),
        }
    }
}

impl Constellation {
    pub fn psk(order: u32) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::invalid(format!(
                "PSK order {order} must be a power of two >= 2"
            )));
        }
        Ok(Constellation::Psk(order))
    }

    pub fn qam(order: u32) -> Result<Self> {
        let side = (order as f64).sqrt().round() as u32;
        if order < 4 || !order.is_power_of_two() || side * side != order {
            return Err(Error::invalid(format!(
                "QAM order {order} must be an even power of two >= 4"
            )));
        }
        Ok(Constellation::Qam(order))
    }

    pub fn order(&self) -> u32 {
        match *self {
            Constellation::Psk(m) | Constellation::Qam(m) => m,
        }
    }

    pub fn bits_per_symbol(&self) -> f64 {
        (self.order() as f64).log2()
    }

    pub fn is_psk(&self) -> bool {
        matches!(self, Constellation::Psk(_))
    }

    /// Alphabet in index order. PSK point `m` is `exp(j 2 pi m / M)`; QAM
    /// points run over the in-phase level first, then quadrature, and are
    /// scaled by `sqrt(3 / (2 (M - 1)))` for unit average power.
    pub fn points(&self) -> Vec<Complex64> {
        match *self {
            Constellation::Psk(m) => (0..m)
                .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / m as f64))
                .collect(),
            Constellation::Qam(m) => {
                let side = (m as f64).sqrt().round() as i32;
                let scale = (3.0 / (2.0 * (m as f64 - 1.0))).sqrt();
                let level = |i: i32| (2 * i - side + 1) as f64;
                (0..side)
                    .flat_map(|q| (0..side).map(move |i| (i, q)))
                    .map(|(i, q)| Complex64::new(level(i), level(q)) * scale)
                    .collect()
            }
        }
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constellation::Psk(m) => write!(f, "{m}-PSK"),
            Constellation::Qam(m) => write!(f, "{m}-QAM"),
        }
    }
}

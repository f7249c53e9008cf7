//! Mini-slot resource grids, pilot patterns and per-scheme payload accounting.
//!
//! Symbol indices `t` are 1-based (`1..=T`) at this API, matching the usual
//! description of mini-slot reference patterns; subcarrier indices `k` are
//! 0-based.

use crate::constellation::Constellation;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Mini-slot lengths supported by the scheduler.
pub const MINI_SLOT_LENGTHS: [usize; 3] = [2, 4, 7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "PA")]
    Pa,
    #[serde(rename = "FDDi")]
    Fddi,
    #[serde(rename = "TDDi")]
    Tddi,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Pa, Scheme::Fddi, Scheme::Tddi];

    pub fn is_differential(&self) -> bool {
        !matches!(self, Scheme::Pa)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Pa => "PA",
            Scheme::Fddi => "FDDi",
            Scheme::Tddi => "TDDi",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PA" => Ok(Scheme::Pa),
            "FDDI" => Ok(Scheme::Fddi),
            "TDDI" => Ok(Scheme::Tddi),
            _ => Err(Error::invalid(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Pilot placement for the coherent scheme: pilot-carrying symbols `𝒯`,
/// pilot subcarrier spacing and the interval between pilot symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotPattern {
    pilot_symbols: Vec<usize>,
    delta_sub: usize,
    delta_sym: usize,
}

impl PilotPattern {
    /// `pilot_symbols` are 1-based, strictly increasing and equally spaced;
    /// with a single pilot symbol the interval is the slot length.
    pub fn new(pilot_symbols: Vec<usize>, delta_sub: usize, symbols: usize) -> Result<Self> {
        if pilot_symbols.is_empty() {
            return Err(Error::invalid("pilot pattern needs at least one pilot symbol"));
        }
        if delta_sub == 0 {
            return Err(Error::invalid("pilot subcarrier spacing must be >= 1"));
        }
        if pilot_symbols.iter().any(|&t| t == 0 || t > symbols) {
            return Err(Error::invalid(format!(
                "pilot symbols {pilot_symbols:?} outside 1..={symbols}"
            )));
        }
        let gaps: Vec<usize> = pilot_symbols
            .windows(2)
            .map(|w| w[1].checked_sub(w[0]).filter(|g| *g > 0))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::invalid("pilot symbols must be strictly increasing"))?;
        let delta_sym = match gaps.first() {
            None => symbols,
            Some(&g) if gaps.iter().all(|&x| x == g) => g,
            Some(_) => return Err(Error::invalid("pilot symbols must be equally spaced")),
        };
        Ok(Self {
            pilot_symbols,
            delta_sub,
            delta_sym,
        })
    }

    /// Standard mini-slot reference patterns: the first symbol always carries
    /// pilots; seven-symbol slots in high mobility add a second pilot symbol
    /// at symbol 5.
    pub fn standard(symbols: usize, high_mobility: bool, delta_sub: usize) -> Result<Self> {
        if !MINI_SLOT_LENGTHS.contains(&symbols) {
            return Err(Error::invalid(format!(
                "mini-slot length {symbols} not in {MINI_SLOT_LENGTHS:?}"
            )));
        }
        let pilots = if symbols == 7 && high_mobility {
            vec![1, 5]
        } else {
            vec![1]
        };
        Self::new(pilots, delta_sub, symbols)
    }

    pub fn pilot_symbols(&self) -> &[usize] {
        &self.pilot_symbols
    }

    pub fn delta_sub(&self) -> usize {
        self.delta_sub
    }

    pub fn delta_sym(&self) -> usize {
        self.delta_sym
    }

    pub fn is_pilot_symbol(&self, t: usize) -> bool {
        self.pilot_symbols.contains(&t)
    }

    /// Pilot symbol whose estimates are reused at symbol `t` (nearest one at
    /// or before `t`).
    pub fn source_symbol(&self, t: usize) -> usize {
        self.pilot_symbols
            .iter()
            .copied()
            .rfind(|&p| p <= t)
            .unwrap_or(self.pilot_symbols[0])
    }
}

/// A `K x T` mini-slot, optionally carrying a pilot pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiniSlotGrid {
    subcarriers: usize,
    symbols: usize,
    pattern: Option<PilotPattern>,
}

impl MiniSlotGrid {
    pub fn new(subcarriers: usize, symbols: usize, pattern: Option<PilotPattern>) -> Result<Self> {
        if subcarriers < 2 {
            return Err(Error::invalid(format!("K = {subcarriers} must be > 1")));
        }
        if !MINI_SLOT_LENGTHS.contains(&symbols) {
            return Err(Error::invalid(format!(
                "mini-slot length {symbols} not in {MINI_SLOT_LENGTHS:?}"
            )));
        }
        if let Some(p) = &pattern {
            if !subcarriers.is_multiple_of(p.delta_sub) {
                return Err(Error::invalid(format!(
                    "pilot spacing {} does not divide K = {subcarriers}",
                    p.delta_sub
                )));
            }
            if p.pilot_symbols.iter().any(|&t| t > symbols) {
                return Err(Error::invalid("pilot symbol beyond the end of the mini-slot"));
            }
        }
        Ok(Self {
            subcarriers,
            symbols,
            pattern,
        })
    }

    /// Grid with the standard pattern for `symbols`.
    pub fn standard(
        subcarriers: usize,
        symbols: usize,
        high_mobility: bool,
        delta_sub: usize,
    ) -> Result<Self> {
        let pattern = PilotPattern::standard(symbols, high_mobility, delta_sub)?;
        Self::new(subcarriers, symbols, Some(pattern))
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn pattern(&self) -> Option<&PilotPattern> {
        self.pattern.as_ref()
    }

    fn require_pattern(&self) -> Result<&PilotPattern> {
        self.pattern
            .as_ref()
            .ok_or_else(|| Error::invalid("pilot-assisted scheme needs a pilot pattern"))
    }

    /// `lambda_p = K / delta_sub`.
    pub fn pilots_per_symbol(&self) -> Option<usize> {
        self.pattern.as_ref().map(|p| self.subcarriers / p.delta_sub)
    }

    /// `lambda_total = lambda_p |𝒯|`.
    pub fn total_pilots(&self) -> Option<usize> {
        self.pattern
            .as_ref()
            .map(|p| self.subcarriers / p.delta_sub * p.pilot_symbols.len())
    }
}

/// Role of one resource element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReClass {
    Pilot,
    /// Data on a pilot symbol, between two pilot subcarriers.
    LinearData,
    /// Data on a pilot symbol after the last pilot subcarrier.
    EdgeData,
    /// Pilot subcarrier of a non-pilot symbol.
    RegionA,
    /// Any other subcarrier of a non-pilot symbol.
    RegionB,
    DiffReference,
    DiffData,
}

pub fn classify(grid: &MiniSlotGrid, scheme: Scheme, k: usize, t: usize) -> Result<ReClass> {
    if k >= grid.subcarriers || t == 0 || t > grid.symbols {
        return Err(Error::OutOfRange {
            k,
            t,
            rows: grid.subcarriers,
            cols: grid.symbols,
        });
    }
    Ok(match scheme {
        Scheme::Fddi if k == 0 => ReClass::DiffReference,
        Scheme::Tddi if t == 1 => ReClass::DiffReference,
        Scheme::Fddi | Scheme::Tddi => ReClass::DiffData,
        Scheme::Pa => {
            let p = grid.require_pattern()?;
            let on_pilot_subcarrier = k.is_multiple_of(p.delta_sub);
            let last_pilot = grid.subcarriers - p.delta_sub;
            match (p.is_pilot_symbol(t), on_pilot_subcarrier) {
                (true, true) => ReClass::Pilot,
                (true, false) if k > last_pilot => ReClass::EdgeData,
                (true, false) => ReClass::LinearData,
                (false, true) => ReClass::RegionA,
                (false, false) => ReClass::RegionB,
            }
        }
    })
}

/// Number of payload-carrying resource elements `N` for `scheme`.
pub fn data_symbol_count(grid: &MiniSlotGrid, scheme: Scheme) -> Result<usize> {
    let (k, t) = (grid.subcarriers, grid.symbols);
    Ok(match scheme {
        Scheme::Pa => {
            grid.require_pattern()?;
            k * t - grid.total_pilots().unwrap_or(0)
        }
        Scheme::Fddi => (k - 1) * t,
        Scheme::Tddi => k * (t - 1),
    })
}

/// A scheme with its alphabet and the code rate that carries the payload on
/// its data resource elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub constellation: Constellation,
    pub payload_bits: u32,
    pub data_symbols: usize,
    /// `B / (N log2 M)`.
    pub coding_rate: f64,
}

impl SchemeConfig {
    /// Information bits per channel use, `B / N`.
    pub fn rate(&self) -> f64 {
        self.payload_bits as f64 / self.data_symbols as f64
    }
}

/// Picks per-scheme coding rates so that every scheme carries `payload_bits`
/// on the same grid.
pub fn match_coding_rates(
    payload_bits: u32,
    grid: &MiniSlotGrid,
    schemes: &[(Scheme, Constellation)],
) -> Result<Vec<SchemeConfig>> {
    if payload_bits == 0 {
        return Err(Error::invalid("payload must be at least one bit"));
    }
    schemes
        .iter()
        .map(|&(scheme, constellation)| {
            if scheme.is_differential() && !constellation.is_psk() {
                return Err(Error::invalid(format!(
                    "{scheme} needs a PSK alphabet, got {constellation}"
                )));
            }
            let n = data_symbol_count(grid, scheme)?;
            let capacity = n as f64 * constellation.bits_per_symbol();
            let coding_rate = payload_bits as f64 / capacity;
            if coding_rate > 1.0 {
                return Err(Error::InfeasiblePayload {
                    bits: payload_bits,
                    rate: payload_bits as f64 / n as f64,
                    max_rate: constellation.bits_per_symbol(),
                });
            }
            Ok(SchemeConfig {
                scheme,
                constellation,
                payload_bits,
                data_symbols: n,
                coding_rate,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qpsk() -> Constellation {
        Constellation::psk(4).unwrap()
    }

    #[test]
    fn standard_patterns() {
        let p = PilotPattern::standard(2, false, 2).unwrap();
        assert_eq!((p.pilot_symbols(), p.delta_sym()), (&[1][..], 2));
        let p = PilotPattern::standard(4, true, 2).unwrap();
        assert_eq!((p.pilot_symbols(), p.delta_sym()), (&[1][..], 4));
        let p = PilotPattern::standard(7, false, 2).unwrap();
        assert_eq!((p.pilot_symbols(), p.delta_sym()), (&[1][..], 7));
        let p = PilotPattern::standard(7, true, 2).unwrap();
        assert_eq!((p.pilot_symbols(), p.delta_sym()), (&[1, 5][..], 4));
        assert!(PilotPattern::standard(3, false, 2).is_err());
        assert!(PilotPattern::standard(14, false, 2).is_err());
    }

    #[test]
    fn reuse_source_symbols() {
        let p = PilotPattern::standard(7, true, 2).unwrap();
        let src: Vec<usize> = (1..=7).map(|t| p.source_symbol(t)).collect();
        assert_eq!(src, vec![1, 1, 1, 1, 5, 5, 5]);
    }

    #[test]
    fn classify_examples() {
        let g = MiniSlotGrid::new(8, 2, Some(PilotPattern::new(vec![1], 2, 2).unwrap())).unwrap();
        assert_eq!(classify(&g, Scheme::Pa, 0, 1).unwrap(), ReClass::Pilot);
        assert_eq!(classify(&g, Scheme::Pa, 7, 1).unwrap(), ReClass::EdgeData);
        assert_eq!(classify(&g, Scheme::Pa, 3, 1).unwrap(), ReClass::LinearData);
        assert_eq!(classify(&g, Scheme::Pa, 2, 2).unwrap(), ReClass::RegionA);
        assert_eq!(classify(&g, Scheme::Pa, 7, 2).unwrap(), ReClass::RegionB);
        for t in 1..=2 {
            assert_eq!(classify(&g, Scheme::Fddi, 0, t).unwrap(), ReClass::DiffReference);
            assert_eq!(classify(&g, Scheme::Fddi, 4, t).unwrap(), ReClass::DiffData);
        }
        assert_eq!(classify(&g, Scheme::Tddi, 5, 1).unwrap(), ReClass::DiffReference);
        assert_eq!(classify(&g, Scheme::Tddi, 5, 2).unwrap(), ReClass::DiffData);
        assert!(matches!(
            classify(&g, Scheme::Pa, 8, 1),
            Err(Error::OutOfRange { .. })
        ));
        assert!(classify(&g, Scheme::Pa, 0, 0).is_err());
        assert!(classify(&g, Scheme::Pa, 0, 3).is_err());
    }

    #[test]
    fn fig5_data_counts() {
        let g = MiniSlotGrid::standard(256, 2, false, 2).unwrap();
        assert_eq!(data_symbol_count(&g, Scheme::Pa).unwrap(), 384);
        assert_eq!(data_symbol_count(&g, Scheme::Fddi).unwrap(), 510);
        assert_eq!(data_symbol_count(&g, Scheme::Tddi).unwrap(), 256);
    }

    #[test]
    fn fig5_coding_rates() {
        let g = MiniSlotGrid::standard(256, 2, false, 2).unwrap();
        let cfg = match_coding_rates(
            256,
            &g,
            &[
                (Scheme::Pa, qpsk()),
                (Scheme::Fddi, qpsk()),
                (Scheme::Tddi, qpsk()),
            ],
        )
        .unwrap();
        assert_eq!(cfg[0].coding_rate, 256.0 / 768.0);
        assert_eq!(cfg[1].coding_rate, 256.0 / 1020.0);
        assert_eq!(cfg[2].coding_rate, 256.0 / 512.0);
        assert!(cfg[1].coding_rate < cfg[0].coding_rate && cfg[0].coding_rate < cfg[2].coding_rate);
    }

    #[test]
    fn payload_limits() {
        let g = MiniSlotGrid::standard(16, 2, false, 2).unwrap();
        let err = match_coding_rates(33, &g, &[(Scheme::Tddi, qpsk())]).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePayload { .. }));
        assert!(match_coding_rates(32, &g, &[(Scheme::Tddi, qpsk())]).is_ok());
        assert!(match_coding_rates(0, &g, &[(Scheme::Tddi, qpsk())]).is_err());
        let qam = Constellation::qam(16).unwrap();
        assert!(match_coding_rates(8, &g, &[(Scheme::Fddi, qam)]).is_err());
        assert!(match_coding_rates(8, &g, &[(Scheme::Pa, qam)]).is_ok());
    }

    #[test]
    fn grid_validation() {
        assert!(MiniSlotGrid::new(1, 2, None).is_err());
        assert!(MiniSlotGrid::new(8, 3, None).is_err());
        assert!(MiniSlotGrid::standard(10, 2, false, 4).is_err());
        let no_pattern = MiniSlotGrid::new(8, 2, None).unwrap();
        assert!(data_symbol_count(&no_pattern, Scheme::Pa).is_err());
        assert!(PilotPattern::new(vec![1, 3, 7], 2, 7).is_err());
        assert!(PilotPattern::new(vec![5, 1], 2, 7).is_err());
    }

    proptest! {
        #[test]
        fn classes_partition_the_grid(
            log_k in 1u32..7,
            t_idx in 0usize..3,
            log_d in 0u32..3,
            high in any::<bool>(),
        ) {
            let k = 1usize << log_k;
            let d = (1usize << log_d).min(k);
            let t = MINI_SLOT_LENGTHS[t_idx];
            let g = MiniSlotGrid::standard(k, t, high, d).unwrap();
            for scheme in Scheme::ALL {
                let mut data = 0;
                let mut overhead = 0;
                for kk in 0..k {
                    for tt in 1..=t {
                        match classify(&g, scheme, kk, tt).unwrap() {
                            ReClass::Pilot | ReClass::DiffReference => overhead += 1,
                            _ => data += 1,
                        }
                    }
                }
                prop_assert_eq!(data + overhead, k * t);
                prop_assert_eq!(data, data_symbol_count(&g, scheme).unwrap());
            }
            let pa = data_symbol_count(&g, Scheme::Pa).unwrap();
            prop_assert_eq!(pa + g.total_pilots().unwrap(), k * t);
            let diff = data_symbol_count(&g, Scheme::Fddi).unwrap() as i64
                - data_symbol_count(&g, Scheme::Tddi).unwrap() as i64;
            prop_assert_eq!(diff, k as i64 - t as i64);
        }
    }
}

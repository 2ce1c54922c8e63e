//! Joint transmit hypotheses for one subcarrier.
//!
//! For `M_T` antennas and 16-QAM there are `16^{M_T}` candidates. The
//! candidate index doubles as its bit label: reading the index MSB-first
//! gives antenna 0's four bits, then antenna 1's, and so on — the same order
//! the transmitter assembles frames in.

use crate::error::{BicmError, Result};
use crate::numerics::CVector;
use crate::txchain::qam16_table;

#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub tx_antennas: usize,
    pub bits_per_symbol: usize,
    /// All joint symbol vectors, indexed by label.
    pub symbols: Vec<CVector>,
    /// `‖s‖²` per candidate.
    pub energies: Vec<f64>,
}

impl CandidateSet {
    /// Full enumeration for 16-QAM on `tx_antennas` antennas.
    pub fn qam16(tx_antennas: usize) -> Result<Self> {
        if tx_antennas == 0 || tx_antennas > 4 {
            return Err(BicmError::Config(format!(
                "candidate enumeration supports 1..=4 tx antennas, got {tx_antennas}"
            )));
        }
        let b = 4usize;
        let table = qam16_table();
        let count = 1usize << (b * tx_antennas);
        let mut symbols = Vec::with_capacity(count);
        let mut energies = Vec::with_capacity(count);
        for cand in 0..count {
            let v = CVector::from_iterator(
                tx_antennas,
                (0..tx_antennas).map(|i| {
                    let nibble = (cand >> (b * (tx_antennas - 1 - i))) & 0xF;
                    table[nibble]
                }),
            );
            energies.push(v.norm_squared());
            symbols.push(v);
        }
        Ok(Self {
            tx_antennas,
            bits_per_symbol: b,
            symbols,
            energies,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Label bits per candidate (`B·M_T`).
    pub fn label_bits(&self) -> usize {
        self.bits_per_symbol * self.tx_antennas
    }

    /// Bit `pos` (0 = first transmitted bit of antenna 0) of candidate `cand`.
    #[inline]
    pub fn bit(&self, cand: usize, pos: usize) -> u8 {
        ((cand >> (self.label_bits() - 1 - pos)) & 1) as u8
    }
}

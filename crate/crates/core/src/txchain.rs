//! BICM transmitter: convolutional encoding, pseudo-random interleaving, Gray
//! 16-QAM mapping and per-subcarrier symbol assembly.
//!
//! Bit order through the chain is fixed: the interleaved bit at index
//! `k·M_T·B + i·B + m` is bit `m` of the symbol sent on subcarrier `k` from
//! antenna `i` (subcarrier-major, then antenna, then bit position).

use crate::error::{BicmError, Result};
use crate::numerics::{CVector, Cx, RngStream};
use rand::Rng;

/// Convolutional code description. The defaults are the nonrecursive,
/// nonsystematic rate-1/2 code with constraint length 3 and generators
/// (5, 7) in octal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    pub constraint_length: u32,
    pub generators_octal: Vec<u32>,
}

impl Default for CodeSpec {
    fn default() -> Self {
        Self {
            constraint_length: 3,
            generators_octal: vec![0o5, 0o7],
        }
    }
}

impl CodeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.constraint_length < 2 || self.constraint_length > 16 {
            return Err(BicmError::Config(format!(
                "constraint length {} out of supported range",
                self.constraint_length
            )));
        }
        if self.generators_octal.len() < 2 {
            return Err(BicmError::Config("need at least two generators".into()));
        }
        let limit = 1u32 << self.constraint_length;
        if self.generators_octal.iter().any(|&g| g == 0 || g >= limit) {
            return Err(BicmError::Config("generator out of range".into()));
        }
        Ok(())
    }

    /// Output bits per input bit (the inverse code rate).
    pub fn outputs(&self) -> usize {
        self.generators_octal.len()
    }

    /// Tail bits required for zero-state termination.
    pub fn tail_bits(&self) -> usize {
        (self.constraint_length - 1) as usize
    }

    pub fn num_states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }
}

/// Frame geometry: `M·M_T·B` coded bits per frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSpec {
    pub subcarriers: usize,
    pub tx_antennas: usize,
    /// Bits per constellation symbol `B` (4 for 16-QAM).
    pub bits_per_symbol: usize,
    pub interleaver_seed: u64,
}

impl FrameSpec {
    pub fn validate(&self, code: &CodeSpec) -> Result<()> {
        code.validate()?;
        if self.subcarriers == 0 || self.tx_antennas == 0 {
            return Err(BicmError::Config("empty frame geometry".into()));
        }
        if self.bits_per_symbol != 4 {
            return Err(BicmError::Config(
                "only 16-QAM (4 bits per symbol) is supported".into(),
            ));
        }
        if self.coded_len() % code.outputs() != 0 {
            return Err(BicmError::Config(format!(
                "coded length {} is not a multiple of the code outputs {}",
                self.coded_len(),
                code.outputs()
            )));
        }
        if self.payload_len(code) == 0 {
            return Err(BicmError::Config("frame too short for the tail".into()));
        }
        Ok(())
    }

    /// Coded (and interleaved) bits per frame: `M·M_T·B`.
    pub fn coded_len(&self) -> usize {
        self.subcarriers * self.tx_antennas * self.bits_per_symbol
    }

    /// Trellis steps per frame (payload plus tail).
    pub fn trellis_steps(&self, code: &CodeSpec) -> usize {
        self.coded_len() / code.outputs()
    }

    /// Free information bits per frame (tail excluded).
    pub fn payload_len(&self, code: &CodeSpec) -> usize {
        self.trellis_steps(code).saturating_sub(code.tail_bits())
    }
}

/// One assembled frame.
#[derive(Debug, Clone)]
pub struct CodedFrame {
    /// Payload information bits (tail not included).
    pub info_bits: Vec<u8>,
    /// Encoder output, pre-interleaving, `(g0,g1)` pairs per step.
    pub coded_bits: Vec<u8>,
    /// Interleaved coded bits in transmit order.
    pub interleaved_bits: Vec<u8>,
    /// Per-subcarrier transmit vectors, unit average energy per antenna.
    pub symbols: Vec<CVector>,
}

/// Feedforward convolutional encoding with zero-tail termination. The tail
/// bits are appended here; `info_bits` carries only the payload.
pub fn convolutional_encode(info_bits: &[u8], spec: &CodeSpec) -> Vec<u8> {
    let memory = (spec.constraint_length - 1) as usize;
    let mut out = Vec::with_capacity((info_bits.len() + memory) * spec.outputs());
    let mut reg: u32 = 0; // bits (b_{t-1}, ..., b_{t-memory}), newest in the MSB of the window
    let push = |bit: u8, reg: &mut u32, out: &mut Vec<u8>| {
        let window = ((bit as u32) << memory) | *reg;
        for &g in &spec.generators_octal {
            out.push(((window & g).count_ones() & 1) as u8);
        }
        *reg = window >> 1;
    };
    for &b in info_bits {
        push(b & 1, &mut reg, &mut out);
    }
    for _ in 0..memory {
        push(0, &mut reg, &mut out);
    }
    out
}

/// Seeded uniform permutation over one frame (Fisher-Yates). The same seed
/// always yields the same permutation.
#[derive(Debug, Clone)]
pub struct Interleaver {
    perm: Vec<u32>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<u32> = (0..len as u32).collect();
        let mut rng = RngStream::new(seed, 0x1EAF).rng();
        for i in (1..len).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[u32] {
        &self.perm
    }

    /// `out[i] = input[perm[i]]`.
    pub fn interleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check(input.len())?;
        Ok(self.perm.iter().map(|&p| input[p as usize]).collect())
    }

    /// Inverse permutation: `out[perm[i]] = input[i]`.
    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check(input.len())?;
        let mut out = vec![T::default(); input.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p as usize] = input[i];
        }
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.perm.len() {
            return Err(BicmError::DimensionMismatch(format!(
                "interleaver length {} vs input {}",
                self.perm.len(),
                len
            )));
        }
        Ok(())
    }
}

/// Gray axis for one I or Q rail: bit pair (high, low) -> level in
/// {-3,-1,+1,+3}: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
fn gray_axis(hi: u8, lo: u8) -> f64 {
    match (hi & 1, lo & 1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        (1, 0) => 3.0,
        _ => unreachable!(),
    }
}

/// Unit-average-energy scale for 16-QAM.
pub const QAM16_SCALE: f64 = 0.316_227_766_016_837_94; // 1/sqrt(10)

/// Maps 4 bits `(b0 b1, b2 b3)` to a Gray-labelled 16-QAM point; `(b0,b1)`
/// selects the I rail and `(b2,b3)` the Q rail.
pub fn qam16_gray_map(bits: [u8; 4]) -> Cx {
    Cx::new(
        gray_axis(bits[0], bits[1]) * QAM16_SCALE,
        gray_axis(bits[2], bits[3]) * QAM16_SCALE,
    )
}

/// The 16 constellation points indexed by the 4-bit label `b0 b1 b2 b3`
/// (MSB first).
pub fn qam16_table() -> [Cx; 16] {
    std::array::from_fn(|idx| {
        let i = idx as u8;
        qam16_gray_map([(i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1])
    })
}

/// Encode, interleave and map one frame.
pub fn assemble_frame(
    info_bits: &[u8],
    frame: &FrameSpec,
    code: &CodeSpec,
    interleaver: &Interleaver,
) -> Result<CodedFrame> {
    frame.validate(code)?;
    if info_bits.len() != frame.payload_len(code) {
        return Err(BicmError::DimensionMismatch(format!(
            "payload of {} bits, frame expects {}",
            info_bits.len(),
            frame.payload_len(code)
        )));
    }
    if interleaver.len() != frame.coded_len() {
        return Err(BicmError::DimensionMismatch(format!(
            "interleaver length {} vs coded length {}",
            interleaver.len(),
            frame.coded_len()
        )));
    }
    let coded_bits = convolutional_encode(info_bits, code);
    debug_assert_eq!(coded_bits.len(), frame.coded_len());
    let interleaved_bits = interleaver.interleave(&coded_bits)?;

    let b = frame.bits_per_symbol;
    let table = qam16_table();
    let symbols = (0..frame.subcarriers)
        .map(|k| {
            CVector::from_iterator(
                frame.tx_antennas,
                (0..frame.tx_antennas).map(|i| {
                    let base = k * frame.tx_antennas * b + i * b;
                    let idx = interleaved_bits[base..base + b]
                        .iter()
                        .fold(0usize, |acc, &bit| (acc << 1) | bit as usize);
                    table[idx]
                }),
            )
        })
        .collect();

    Ok(CodedFrame {
        info_bits: info_bits.to_vec(),
        coded_bits,
        interleaved_bits,
        symbols,
    })
}

/// Draws a uniformly random payload for one frame.
pub fn random_payload(frame: &FrameSpec, code: &CodeSpec, stream: &RngStream) -> Vec<u8> {
    let mut rng = stream.rng();
    (0..frame.payload_len(code)).map(|_| rng.gen_range(0..2u8)).collect()
}

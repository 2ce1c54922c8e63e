//! Forward-backward (BCJR) decoding of the terminated rate-1/2 code.
//!
//! Inputs are per-coded-bit LLRs; outputs are exact per-step information-bit
//! posteriors and extrinsic coded-bit probabilities for the next demapping
//! pass. Both trellis ends are pinned to state zero (zero-tail termination).

use crate::error::{BicmError, Result};
use crate::rxchain::demap::LLR_CLAMP;
use crate::txchain::CodeSpec;

#[derive(Debug, Clone, Copy)]
pub struct Transition {
    pub next: usize,
    pub out: [u8; 2],
}

/// Trellis derived from a rate-1/2 feedforward code.
#[derive(Debug, Clone)]
pub struct TrellisSpec {
    pub num_states: usize,
    /// `transitions[state][input]`.
    pub transitions: Vec<[Transition; 2]>,
}

impl TrellisSpec {
    pub fn from_code(code: &CodeSpec) -> Result<Self> {
        code.validate()?;
        if code.outputs() != 2 {
            return Err(BicmError::Config(
                "the receiver trellis supports rate-1/2 codes only".into(),
            ));
        }
        let memory = (code.constraint_length - 1) as usize;
        let num_states = 1usize << memory;
        let transitions = (0..num_states)
            .map(|state| {
                let mut pair = [Transition {
                    next: 0,
                    out: [0, 0],
                }; 2];
                for (input, slot) in pair.iter_mut().enumerate() {
                    let window = ((input as u32) << memory) | state as u32;
                    let mut out = [0u8; 2];
                    for (g, o) in code.generators_octal.iter().zip(out.iter_mut()) {
                        *o = ((window & g).count_ones() & 1) as u8;
                    }
                    *slot = Transition {
                        next: (window >> 1) as usize,
                        out,
                    };
                }
                pair
            })
            .collect();
        Ok(Self {
            num_states,
            transitions,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BcjrOutput {
    /// Posterior LLR of each trellis input bit (payload and tail).
    pub info_llrs: Vec<f64>,
    /// Extrinsic probability pairs `(P⁰, P¹)` for each coded bit.
    pub extrinsic: Vec<(f64, f64)>,
}

#[inline]
fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Exact MAP decoding. `coded_llrs` holds two LLRs per trellis step.
pub fn bcjr_decode(coded_llrs: &[f64], trellis: &TrellisSpec) -> Result<BcjrOutput> {
    if coded_llrs.len() % 2 != 0 || coded_llrs.is_empty() {
        return Err(BicmError::DimensionMismatch(format!(
            "coded llr count {} is not a positive multiple of 2",
            coded_llrs.len()
        )));
    }
    if coded_llrs.iter().any(|l| !l.is_finite()) {
        return Err(BicmError::InvalidInput("non-finite llr".into()));
    }
    let steps = coded_llrs.len() / 2;
    let ns = trellis.num_states;

    // branch log-weight: bits at 1 contribute their llr, bits at 0 contribute 0
    let gamma = |t: usize, tr: &Transition| -> f64 {
        let mut g = 0.0;
        if tr.out[0] == 1 {
            g += coded_llrs[2 * t];
        }
        if tr.out[1] == 1 {
            g += coded_llrs[2 * t + 1];
        }
        g
    };

    let mut alpha = vec![vec![f64::NEG_INFINITY; ns]; steps + 1];
    alpha[0][0] = 0.0;
    for t in 0..steps {
        let mut next = vec![f64::NEG_INFINITY; ns];
        for s in 0..ns {
            let a = alpha[t][s];
            if a == f64::NEG_INFINITY {
                continue;
            }
            for tr in &trellis.transitions[s] {
                let v = a + gamma(t, tr);
                next[tr.next] = logaddexp(next[tr.next], v);
            }
        }
        let m = next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in &mut next {
            *v -= m;
        }
        alpha[t + 1] = next;
    }

    let mut beta = vec![vec![f64::NEG_INFINITY; ns]; steps + 1];
    beta[steps][0] = 0.0; // terminated in state zero
    for t in (0..steps).rev() {
        let mut cur = vec![f64::NEG_INFINITY; ns];
        for s in 0..ns {
            for tr in &trellis.transitions[s] {
                let b = beta[t + 1][tr.next];
                if b == f64::NEG_INFINITY {
                    continue;
                }
                cur[s] = logaddexp(cur[s], b + gamma(t, tr));
            }
        }
        let m = cur.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in &mut cur {
            *v -= m;
        }
        beta[t] = cur;
    }

    let mut info_llrs = Vec::with_capacity(steps);
    let mut extrinsic = Vec::with_capacity(2 * steps);
    for t in 0..steps {
        let mut info = [f64::NEG_INFINITY; 2];
        let mut coded = [[f64::NEG_INFINITY; 2]; 2]; // [bit position][value]
        for s in 0..ns {
            let a = alpha[t][s];
            if a == f64::NEG_INFINITY {
                continue;
            }
            for (input, tr) in trellis.transitions[s].iter().enumerate() {
                let b = beta[t + 1][tr.next];
                if b == f64::NEG_INFINITY {
                    continue;
                }
                let w = a + gamma(t, tr) + b;
                info[input] = logaddexp(info[input], w);
                for j in 0..2 {
                    coded[j][tr.out[j] as usize] = logaddexp(coded[j][tr.out[j] as usize], w);
                }
            }
        }
        info_llrs.push(info[1] - info[0]);
        for j in 0..2 {
            let app = coded[j][1] - coded[j][0];
            let ext = (app - coded_llrs[2 * t + j]).clamp(-LLR_CLAMP, LLR_CLAMP);
            let p1 = 1.0 / (1.0 + (-ext).exp());
            extrinsic.push((1.0 - p1, p1));
        }
    }

    Ok(BcjrOutput {
        info_llrs,
        extrinsic,
    })
}

//! Total-photon-number sectors of the two-mode space.
//!
//! The beam splitter and the phase shift both conserve `n1 + n2`, so the
//! parity signal of any two-mode vector can be assembled sector by sector.
//! Inside sector `T` the basis is `|k, T - k>` for `k = 0..=T`.

use std::f64::consts::FRAC_PI_4;

use crate::linalg::{cmul, exp_i_tridiagonal, CMatrix, CVector, C64};

/// Balanced beam splitter restricted to sector `total`, on the mode-1
/// occupations `lo..=hi`.
pub fn splitter_block(total: usize, lo: usize, hi: usize) -> CMatrix {
    if hi == lo {
        // a lone state only picks up the diagonal, which is zero for the generator
        return CMatrix::identity(1, 1);
    }
    let off: Vec<f64> = (lo..hi)
        .map(|k| (((k + 1) * (total - k)) as f64).sqrt())
        .collect();
    exp_i_tridiagonal(&off, FRAC_PI_4)
}

/// Parity expectation as a function of the encoding phase:
/// `value(t) = Re g_0 + 2 Re sum_{d>0} g_d e^{i d t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityCurve {
    coefficients: Vec<C64>,
}

impl ParityCurve {
    pub fn from_coefficients(coefficients: Vec<C64>) -> Self {
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn value(&self, phase: f64) -> f64 {
        let step = C64::from_polar(1.0, phase);
        let mut z = C64::from(1.0);
        let mut acc = 0.0;
        for (d, c) in self.coefficients.iter().enumerate() {
            let term = (c * z).re;
            acc += if d == 0 { term } else { 2.0 * term };
            z *= step;
        }
        acc
    }

    pub fn derivative(&self, phase: f64) -> f64 {
        let step = C64::from_polar(1.0, phase);
        let mut z = step;
        let mut acc = 0.0;
        for (d, c) in self.coefficients.iter().enumerate().skip(1) {
            acc -= 2.0 * d as f64 * (c * z).im;
            z *= step;
        }
        acc
    }

    /// Weighted sum of curves, used for mixtures.
    pub fn combine<'a>(items: impl IntoIterator<Item = (f64, &'a ParityCurve)>) -> ParityCurve {
        let mut out: Vec<C64> = Vec::new();
        for (w, curve) in items {
            if out.len() < curve.coefficients.len() {
                out.resize(curve.coefficients.len(), C64::from(0.0));
            }
            for (o, c) in out.iter_mut().zip(&curve.coefficients) {
                *o += c * w;
            }
        }
        ParityCurve { coefficients: out }
    }
}

/// Per-sector beam splitters and the parity operator seen through them,
/// for all sectors `T <= cutoff`.
#[derive(Debug, Clone)]
pub struct SectorFrames {
    splitters: Vec<CMatrix>,
    // B† P B, the parity measured after the output splitter
    parity_frames: Vec<CMatrix>,
}

impl SectorFrames {
    pub fn new(cutoff: usize) -> Self {
        let mut splitters = Vec::with_capacity(cutoff + 1);
        let mut parity_frames = Vec::with_capacity(cutoff + 1);
        for total in 0..=cutoff {
            let b = splitter_block(total, 0, total);
            let mut pb = b.clone();
            for k in (1..=total).step_by(2) {
                pb.row_mut(k).neg_mut();
            }
            parity_frames.push(cmul(&b.adjoint(), &pb));
            splitters.push(b);
        }
        Self {
            splitters,
            parity_frames,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.splitters.len() - 1
    }

    pub fn splitter(&self, total: usize) -> &CMatrix {
        &self.splitters[total]
    }

    /// Parity curve of a state given by its sector components
    /// (`sectors[T][k]` is the amplitude of `|k, T - k>`). With
    /// `pre_split` an input beam splitter is applied before the phase.
    /// The curve is normalized by the squared norm of the supplied components,
    /// which is returned alongside.
    pub fn curve(&self, sectors: &[CVector], pre_split: bool) -> (ParityCurve, f64) {
        let top = sectors.len().min(self.splitters.len());
        let mut coefficients = vec![C64::from(0.0); top.max(1)];
        let mut norm = 0.0;
        for (total, v) in sectors.iter().enumerate().take(top) {
            let sector_norm = v.norm_squared();
            if sector_norm == 0.0 {
                continue;
            }
            norm += sector_norm;
            let w = if pre_split {
                &self.splitters[total] * v
            } else {
                v.clone()
            };
            let frame = &self.parity_frames[total];
            // |j, T-j> carries e^{i (T-j) t}, so conj(w_j) C_jk w_k oscillates as e^{i (j-k) t}
            for (d, slot) in coefficients.iter_mut().enumerate().take(total + 1) {
                let mut acc = C64::from(0.0);
                for k in 0..=total - d {
                    acc += w[k + d].conj() * frame[(k + d, k)] * w[k];
                }
                *slot += acc;
            }
        }
        if norm > 0.0 {
            for c in coefficients.iter_mut() {
                *c /= norm;
            }
        }
        (ParityCurve { coefficients }, norm)
    }
}


//! Single-mode building blocks on the truncated number basis `0..=cutoff`.

use crate::linalg::{symmetric_eigh, CMatrix, CVector, RMatrix, C64, I};

/// `ln n!` for `n = 0..=max`.
pub fn log_factorials(max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..=max {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}

/// Truncation deficit `1 - |v|^2`.
pub fn deficit(v: &CVector) -> f64 {
    1.0 - v.norm_squared()
}

/// Coherent-state amplitudes on `0..=cutoff`, not renormalized.
pub fn coherent_amplitudes(alpha: C64, cutoff: usize) -> CVector {
    let mut v = CVector::zeros(cutoff + 1);
    v[0] = C64::from((-0.5 * alpha.norm_sqr()).exp());
    for n in 1..=cutoff {
        v[n] = v[n - 1] * alpha / (n as f64).sqrt();
    }
    v
}

/// Extra basis states carried beyond the cutoff so that the truncated
/// exponential of the squeeze generator is accurate on the kept block.
fn squeeze_padding(r: f64) -> usize {
    let t = r.abs().tanh();
    if t < 1e-300 {
        return 8;
    }
    let per_pair = -t.ln();
    // amplitudes fall off like tanh|r| per photon pair; aim for ~1e-19 past the cutoff
    let pairs = (44.0 / per_pair).ceil() as usize;
    (2 * pairs + 16).min(6000)
}

/// Columns `0..=kmax` of the squeeze operator `exp[r(a^2 - a†^2)/2]`,
/// restricted to rows `0..=cutoff`.
pub fn squeeze_columns(r: f64, cutoff: usize, kmax: usize) -> CMatrix {
    let dim = cutoff + 1;
    let mut out = CMatrix::zeros(dim, kmax + 1);
    if r == 0.0 {
        for k in 0..=kmax.min(cutoff) {
            out[(k, k)] = C64::from(1.0);
        }
        return out;
    }
    let padded = cutoff.max(kmax) + 1 + squeeze_padding(r);
    for parity in 0..2usize {
        let count = (padded - parity).div_ceil(2);
        if count == 0 {
            continue;
        }
        // D† K D = i T with D = diag(i^m), T real symmetric tridiagonal
        let mut t = RMatrix::zeros(count, count);
        for m in 1..count {
            let n = (parity + 2 * m) as f64;
            let v = (n * (n - 1.0)).sqrt() / 2.0;
            t[(m - 1, m)] = v;
            t[(m, m - 1)] = v;
        }
        let (values, vectors) = symmetric_eigh(&t);
        let phases: Vec<C64> = values.iter().map(|&l| C64::from_polar(1.0, r * l)).collect();
        for k in (parity..=kmax).step_by(2) {
            let m = k / 2;
            for mp in 0..count {
                let row = parity + 2 * mp;
                if row > cutoff {
                    break;
                }
                let mut acc = C64::from(0.0);
                for (j, ph) in phases.iter().enumerate() {
                    acc += ph * (vectors[(mp, j)] * vectors[(m, j)]);
                }
                out[(row, k)] = i_power(mp as i64 - m as i64) * acc;
            }
        }
    }
    out
}

fn i_power(e: i64) -> C64 {
    match e.rem_euclid(4) {
        0 => C64::from(1.0),
        1 => I,
        2 => C64::from(-1.0),
        _ => -I,
    }
}

/// Squeezed number state `S(r)|k>` on `0..=cutoff`, not renormalized.
pub fn squeezed_number_amplitudes(r: f64, k: usize, cutoff: usize) -> CVector {
    squeeze_columns(r, cutoff, k).column(k).into_owned()
}

/// Displacement operator `D(beta)` on `0..=cutoff`. Each entry is the exact
/// matrix element of the untruncated operator.
pub fn displacement(beta: C64, cutoff: usize) -> CMatrix {
    let dim = cutoff + 1;
    let mut d = CMatrix::zeros(dim, dim);
    let x = beta.norm_sqr();
    if x == 0.0 {
        return CMatrix::identity(dim, dim);
    }
    let mag = beta.norm();
    let phase = beta / mag;
    let lf = log_factorials(dim);
    let ln_mag = mag.ln();
    let mut up = C64::from(1.0);
    let mut down = C64::from(1.0);
    for a in 0..dim {
        // along the a-th diagonal: g_n = <n+a|D|n> / phase^a, a three-term recurrence in n
        let af = a as f64;
        let mut g = (-0.5 * x + af * ln_mag - 0.5 * lf[a]).exp();
        let mut prev = 0.0;
        for n in 0..dim - a {
            d[(n + a, n)] = up * g;
            if a > 0 {
                d[(n, n + a)] = down * g;
            }
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + af - x) * g - (nf * (nf + af)).sqrt() * prev)
                / ((nf + 1.0) * (nf + af + 1.0)).sqrt();
            prev = g;
            g = next;
        }
        up *= phase;
        down *= -phase.conj();
    }
    d
}

/// Pure-loss channel with loss probability `loss` acting elementwise on a
/// single-mode matrix.
pub fn loss_map(rho: &CMatrix, loss: f64) -> CMatrix {
    let dim = rho.nrows();
    let lf = log_factorials(dim);
    let (ln_keep, ln_loss) = ((1.0 - loss).ln(), loss.ln());
    // kraus[k][m] = <m| K_k |m + k> = sqrt(C(m+k, k) keep^m loss^k)
    let kraus: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            (0..dim - k)
                .map(|m| {
                    let ln_c = lf[m + k] - lf[k] - lf[m];
                    let powers = match (m, k) {
                        (0, 0) => 0.0,
                        (0, _) => k as f64 * ln_loss,
                        (_, 0) => m as f64 * ln_keep,
                        _ => m as f64 * ln_keep + k as f64 * ln_loss,
                    };
                    (0.5 * (ln_c + powers)).exp()
                })
                .collect()
        })
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for (k, c) in kraus.iter().enumerate() {
        if c.iter().all(|&v| v == 0.0) {
            continue;
        }
        for mp in 0..dim - k {
            if c[mp] == 0.0 {
                continue;
            }
            for m in 0..dim - k {
                out[(m, mp)] += rho[(m + k, mp + k)] * (c[m] * c[mp]);
            }
        }
    }
    out
}

/// Squeezed thermal state `sum_k p_k |r,k><r,k|` with thermal occupation `mean`;
/// the series stops once the captured weight reaches `1 - 1e-10`. Returns
/// `None` if that needs more than `cutoff + 1` terms.
pub fn squeezed_thermal(r: f64, mean: f64, cutoff: usize) -> Option<CMatrix> {
    let dim = cutoff + 1;
    let ratio = mean / (mean + 1.0);
    let mut weights = Vec::new();
    let mut total = 0.0;
    let mut p = 1.0 / (mean + 1.0);
    while total < 1.0 - 1e-10 {
        if weights.len() == dim {
            return None;
        }
        weights.push(p);
        total += p;
        p *= ratio;
        if ratio == 0.0 {
            break;
        }
    }
    let cols = squeeze_columns(r, cutoff, weights.len() - 1);
    Some(crate::linalg::weighted_outer(&cols, &weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn closed_form_squeezed_vacuum(r: f64, n: usize) -> C64 {
        if n % 2 == 1 {
            return C64::from(0.0);
        }
        let m = n / 2;
        let lf = log_factorials(n);
        let mag = (0.5 * lf[n] - lf[m] - m as f64 * 2f64.ln()).exp() * r.tanh().abs().powi(m as i32)
            / r.cosh().sqrt();
        let sign = if r > 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
        C64::from(sign * mag)
    }

    #[test]
    fn squeezed_vacuum_matches_closed_form() {
        let r = 2.5f64.sqrt().asinh();
        let v = squeezed_number_amplitudes(r, 0, 80);
        for n in 0..=80 {
            let e = closed_form_squeezed_vacuum(r, n);
            assert!((v[n] - e).norm() < 1e-13, "n = {n}: {} vs {}", v[n], e);
        }
    }

    #[test]
    fn squeezed_vacuum_mean_photon_number() {
        let r = 2.5f64.sqrt().asinh();
        let v = squeezed_number_amplitudes(r, 0, 200);
        let mean: f64 = v.iter().enumerate().map(|(n, z)| n as f64 * z.norm_sqr()).sum();
        assert!(deficit(&v) < 1e-12);
        assert!((mean - 2.5).abs() < 1e-9);
    }

    #[test]
    fn squeezed_number_states_orthonormal() {
        let cols = squeeze_columns(0.6, 120, 3);
        let gram = cols.adjoint() * &cols;
        assert!(max_abs_diff(&gram, &CMatrix::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn squeezing_reduces_x_variance() {
        let r = 0.4;
        let v = squeezed_number_amplitudes(r, 0, 60);
        // <(a + a†)^2>/2 = <a^2> re + <n> + 1/2
        let mut a2 = C64::from(0.0);
        let mut n_mean = 0.0;
        for n in 0..=60 {
            n_mean += n as f64 * v[n].norm_sqr();
            if n >= 2 {
                a2 += v[n - 2].conj() * v[n] * ((n * (n - 1)) as f64).sqrt();
            }
        }
        let var_x = a2.re + n_mean + 0.5;
        assert!((var_x - (-2.0 * r).exp() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn displacement_first_column_is_coherent() {
        let beta = C64::new(0.7, -1.1);
        let d = displacement(beta, 30);
        let c = coherent_amplitudes(beta, 30);
        assert!((d.column(0) - c).norm() < 1e-14);
    }

    #[test]
    fn displacement_matches_column_recurrence_at_low_order() {
        // D|n> = (a† - beta*) D|n-1> / sqrt(n), stable for small beta and n
        let beta = C64::new(0.3, 0.2);
        let d = displacement(beta, 40);
        for n in 1..10 {
            for m in 0..30 {
                let mut expect = -beta.conj() * d[(m, n - 1)];
                if m > 0 {
                    expect += (m as f64).sqrt() * d[(m - 1, n - 1)];
                }
                expect /= (n as f64).sqrt();
                assert!((d[(m, n)] - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn displacement_low_block_is_unitary_for_large_shift() {
        let d = displacement(C64::new(0.0, 6.0), 200);
        let cols = d.columns(0, 40).into_owned();
        let gram = cols.adjoint() * &cols;
        assert!(max_abs_diff(&gram, &CMatrix::identity(40, 40)) < 1e-12);
    }

    #[test]
    fn loss_map_is_trace_preserving_and_shrinks_coherent() {
        let alpha = C64::new(1.2, 0.5);
        let v = coherent_amplitudes(alpha, 40);
        let rho = &v * v.adjoint();
        let out = loss_map(&rho, 0.3);
        let tr_in: f64 = rho.diagonal().iter().map(|z| z.re).sum();
        let tr_out: f64 = out.diagonal().iter().map(|z| z.re).sum();
        assert!((tr_in - tr_out).abs() < 1e-14);
        let w = coherent_amplitudes(alpha * 0.7f64.sqrt(), 40);
        assert!(max_abs_diff(&out, &(&w * w.adjoint())) < 1e-13);
    }

    #[test]
    fn loss_map_extremes() {
        let v = squeezed_number_amplitudes(0.5, 0, 40);
        let rho = &v * v.adjoint();
        assert!(max_abs_diff(&loss_map(&rho, 0.0), &rho) < 1e-15);
        let vac = loss_map(&rho, 1.0);
        assert!((vac[(0, 0)].re - rho.trace().re).abs() < 1e-14);
    }
}

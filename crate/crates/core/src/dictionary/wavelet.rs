//! Periodized separable 2-D wavelet transforms.
//!
//! Coefficients are stored flat: the coarsest approximation first, then for
//! each level from coarsest to finest the `HighLow`, `LowHigh` and `HighHigh`
//! detail bands (first word: filter along rows, second: along columns).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use super::filters::FilterBank;

/// Decimated periodic filtering of one line: `out[k] = Σ f[i] x[(2k+i) mod N]`.
/// `ext` is `x` periodically extended by at least `f.len() − 1` samples.
fn down_line(ext: &[f64], f: &[f64], out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        let seg = &ext[2 * k..2 * k + f.len()];
        *o = f.iter().zip(seg).map(|(a, b)| a * b).sum();
    }
}

/// Adjoint of [`down_line`], accumulated into `out`.
fn up_line(c: &[f64], f: &[f64], out: &mut [f64]) {
    let n = out.len();
    for (k, &ck) in c.iter().enumerate() {
        let base = 2 * k;
        if base + f.len() <= n {
            for (o, &fi) in out[base..base + f.len()].iter_mut().zip(f) {
                *o += fi * ck;
            }
        } else {
            for (i, &fi) in f.iter().enumerate() {
                out[(base + i) % n] += fi * ck;
            }
        }
    }
}

/// `dst += a * src`
#[inline]
fn axpy(dst: &mut [f64], a: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

/// Orthogonal DWT of a `w × h` image with `levels` decompositions.
pub(crate) fn dwt2_forward(x: &[f64], w: usize, h: usize, levels: usize, bank: &FilterBank) -> Vec<f64> {
    let mut buf = x.to_vec();
    let mut line = vec![0.0; w + bank.lo().len()];
    let mut cols = vec![0.0; w * h];
    for level in 0..levels {
        let (cw, ch) = (w >> level, h >> level);
        // Rows of the current approximation block.
        for r in 0..ch {
            let row = &mut buf[r * w..r * w + cw];
            let ext = &mut line[..cw + bank.lo().len()];
            periodic_extend(row, ext);
            let (lo, hi) = row.split_at_mut(cw / 2);
            down_line(ext, bank.lo(), lo);
            down_line(ext, bank.hi(), hi);
        }
        // Columns, processed as combinations of whole rows.
        let out = &mut cols[..cw * ch];
        out.fill(0.0);
        for k in 0..ch / 2 {
            for (i, (&l, &g)) in bank.lo().iter().zip(bank.hi()).enumerate() {
                let src = &buf[((2 * k + i) % ch) * w..][..cw];
                axpy(&mut out[k * cw..(k + 1) * cw], l, src);
                axpy(&mut out[(k + ch / 2) * cw..(k + ch / 2 + 1) * cw], g, src);
            }
        }
        for r in 0..ch {
            buf[r * w..r * w + cw].copy_from_slice(&out[r * cw..(r + 1) * cw]);
        }
    }
    mallat_to_flat(&buf, w, h, levels)
}

pub(crate) fn dwt2_inverse(coefs: &[f64], w: usize, h: usize, levels: usize, bank: &FilterBank) -> Vec<f64> {
    let mut buf = flat_to_mallat(coefs, w, h, levels);
    let mut tmp = vec![0.0; w * h];
    let mut line = vec![0.0; w.max(h)];
    for level in (0..levels).rev() {
        let (cw, ch) = (w >> level, h >> level);
        let out = &mut tmp[..cw * ch];
        out.fill(0.0);
        for k in 0..ch / 2 {
            for (i, (&l, &g)) in bank.lo().iter().zip(bank.hi()).enumerate() {
                let dst = ((2 * k + i) % ch) * cw;
                axpy(&mut out[dst..dst + cw], l, &buf[k * w..k * w + cw]);
                axpy(&mut out[dst..dst + cw], g, &buf[(k + ch / 2) * w..(k + ch / 2) * w + cw]);
            }
        }
        for r in 0..ch {
            let (lo, hi) = out[r * cw..(r + 1) * cw].split_at(cw / 2);
            let dst = &mut line[..cw];
            dst.fill(0.0);
            up_line(lo, bank.lo(), dst);
            up_line(hi, bank.hi(), dst);
            buf[r * w..r * w + cw].copy_from_slice(dst);
        }
    }
    buf
}

/// Visits each band of the Mallat arrangement as `(row0, col0, bw, bh)` in flat order.
fn mallat_bands(w: usize, h: usize, levels: usize, mut f: impl FnMut(usize, usize, usize, usize)) {
    let (aw, ah) = (w >> levels, h >> levels);
    f(0, 0, aw, ah);
    for level in (1..=levels).rev() {
        let (bw, bh) = (w >> level, h >> level);
        f(0, bw, bw, bh); // HighLow
        f(bh, 0, bw, bh); // LowHigh
        f(bh, bw, bw, bh); // HighHigh
    }
}

fn mallat_to_flat(buf: &[f64], w: usize, h: usize, levels: usize) -> Vec<f64> {
    let mut flat = Vec::with_capacity(w * h);
    mallat_bands(w, h, levels, |r0, c0, bw, bh| {
        for r in r0..r0 + bh {
            flat.extend_from_slice(&buf[r * w + c0..r * w + c0 + bw]);
        }
    });
    flat
}

fn flat_to_mallat(flat: &[f64], w: usize, h: usize, levels: usize) -> Vec<f64> {
    let mut buf = vec![0.0; w * h];
    let mut pos = 0;
    mallat_bands(w, h, levels, |r0, c0, bw, bh| {
        for r in r0..r0 + bh {
            buf[r * w + c0..r * w + c0 + bw].copy_from_slice(&flat[pos..pos + bw]);
            pos += bw;
        }
    });
    buf
}

/// Undecimated filtering of every row with the filter dilated by `step`,
/// scaled by 1/√2: `out[r][k] = Σ f[i] x[r][(k + step·i) mod w] / √2`.
fn rows_undecimated(x: &[f64], w: usize, f: &[f64], step: usize, out: &mut [f64]) {
    let reach = step * (f.len() - 1);
    let mut ext = vec![0.0; w + reach];
    for (src, dst) in x.chunks_exact(w).zip(out.chunks_exact_mut(w)) {
        periodic_extend(src, &mut ext);
        dst.fill(0.0);
        for (i, &fi) in f.iter().enumerate() {
            axpy(dst, FRAC_1_SQRT_2 * fi, &ext[step * i..step * i + w]);
        }
    }
}

fn rows_undecimated_adjoint(c: &[f64], w: usize, f: &[f64], step: usize, out: &mut [f64]) {
    let reach = step * (f.len() - 1);
    let mut ext = vec![0.0; w + reach];
    for (src, dst) in c.chunks_exact(w).zip(out.chunks_exact_mut(w)) {
        ext.fill(0.0);
        for (i, &fi) in f.iter().enumerate() {
            axpy(&mut ext[step * i..step * i + w], FRAC_1_SQRT_2 * fi, src);
        }
        for (k, &v) in ext.iter().enumerate() {
            dst[k % w] += v;
        }
    }
}

/// `ext[j] = src[j mod w]`
fn periodic_extend(src: &[f64], ext: &mut [f64]) {
    let w = src.len();
    for (j, e) in ext.iter_mut().enumerate() {
        *e = src[j % w];
    }
}

fn cols_undecimated(x: &[f64], w: usize, h: usize, f: &[f64], step: usize, out: &mut [f64]) {
    out.fill(0.0);
    for k in 0..h {
        let dst = &mut out[k * w..(k + 1) * w];
        for (i, &fi) in f.iter().enumerate() {
            let r = (k + step * i) % h;
            axpy(dst, FRAC_1_SQRT_2 * fi, &x[r * w..(r + 1) * w]);
        }
    }
}

fn cols_undecimated_adjoint(c: &[f64], w: usize, h: usize, f: &[f64], step: usize, out: &mut [f64]) {
    for k in 0..h {
        let src = &c[k * w..(k + 1) * w];
        for (i, &fi) in f.iter().enumerate() {
            let r = (k + step * i) % h;
            axpy(&mut out[r * w..(r + 1) * w], FRAC_1_SQRT_2 * fi, src);
        }
    }
}

/// Parseval undecimated (à trous) DWT; output length `(3·levels + 1)·w·h`.
pub(crate) fn swt2_forward(x: &[f64], w: usize, h: usize, levels: usize, bank: &FilterBank) -> Vec<f64> {
    let n = w * h;
    let mut out = vec![0.0; (3 * levels + 1) * n];
    let mut approx = x.to_vec();
    let mut lo_rows = vec![0.0; n];
    let mut hi_rows = vec![0.0; n];
    let mut next = vec![0.0; n];
    for level in 1..=levels {
        let step = 1 << (level - 1);
        rows_undecimated(&approx, w, bank.lo(), step, &mut lo_rows);
        rows_undecimated(&approx, w, bank.hi(), step, &mut hi_rows);
        let base = n + (levels - level) * 3 * n;
        let (hl, rest) = out[base..base + 3 * n].split_at_mut(n);
        let (lh, hh) = rest.split_at_mut(n);
        cols_undecimated(&hi_rows, w, h, bank.lo(), step, hl);
        cols_undecimated(&lo_rows, w, h, bank.hi(), step, lh);
        cols_undecimated(&hi_rows, w, h, bank.hi(), step, hh);
        cols_undecimated(&lo_rows, w, h, bank.lo(), step, &mut next);
        core::mem::swap(&mut approx, &mut next);
    }
    out[..n].copy_from_slice(&approx);
    out
}

/// Adjoint of [`swt2_forward`]; equals its left inverse because the frame is Parseval.
pub(crate) fn swt2_adjoint(coefs: &[f64], w: usize, h: usize, levels: usize, bank: &FilterBank) -> Vec<f64> {
    let n = w * h;
    let mut approx = coefs[..n].to_vec();
    let mut lo_rows = vec![0.0; n];
    let mut hi_rows = vec![0.0; n];
    for level in (1..=levels).rev() {
        let step = 1 << (level - 1);
        let base = n + (levels - level) * 3 * n;
        let (hl, lh, hh) = (&coefs[base..base + n], &coefs[base + n..base + 2 * n], &coefs[base + 2 * n..base + 3 * n]);
        lo_rows.fill(0.0);
        hi_rows.fill(0.0);
        cols_undecimated_adjoint(&approx, w, h, bank.lo(), step, &mut lo_rows);
        cols_undecimated_adjoint(lh, w, h, bank.hi(), step, &mut lo_rows);
        cols_undecimated_adjoint(hl, w, h, bank.lo(), step, &mut hi_rows);
        cols_undecimated_adjoint(hh, w, h, bank.hi(), step, &mut hi_rows);
        approx.fill(0.0);
        rows_undecimated_adjoint(&lo_rows, w, bank.lo(), step, &mut approx);
        rows_undecimated_adjoint(&hi_rows, w, bank.hi(), step, &mut approx);
    }
    approx
}

//! Dense kernels for the small layer shapes used here.
//!
//! Outputs are accumulated in fixed-size blocks so the compiler keeps them in
//! vector registers. Each output element is always summed in index order
//! (`init + x0·w0 + x1·w1 + ...`), whichever block size handles it. When the
//! target has FMA each step is one fused multiply-add. Layer shapes known at
//! compile time take fully unrolled paths with the same summation order, so
//! they return the same bits as the general loops.

#[inline(always)]
fn madd(acc: f64, a: f64, b: f64) -> f64 {
    #[cfg(target_feature = "fma")]
    {
        a.mul_add(b, acc)
    }
    #[cfg(not(target_feature = "fma"))]
    {
        acc + a * b
    }
}

fn row_block<const R: usize, const B: usize>(
    x: &[f64],
    k_dim: usize,
    w: &[f64],
    stride: usize,
    col: usize,
    init: &[f64],
    out: &mut [f64],
) {
    let init: &[f64; B] = init[..B].try_into().unwrap();
    let mut acc = [*init; R];
    for k in 0..k_dim {
        let wk: &[f64; B] = w[k * stride + col..k * stride + col + B]
            .try_into()
            .unwrap();
        for r in 0..R {
            let xv = x[r * k_dim + k];
            for j in 0..B {
                acc[r][j] = madd(acc[r][j], xv, wk[j]);
            }
        }
    }
    for (r, a) in acc.iter().enumerate() {
        out[r * stride..r * stride + B].copy_from_slice(a);
    }
}

fn row_group<const R: usize>(
    x: &[f64],
    k_dim: usize,
    w: &[f64],
    n: usize,
    init: &[f64],
    out: &mut [f64],
) {
    let mut col = 0;
    while col + 16 <= n {
        row_block::<R, 16>(x, k_dim, w, n, col, &init[col..], &mut out[col..]);
        col += 16;
    }
    while col + 4 <= n {
        row_block::<R, 4>(x, k_dim, w, n, col, &init[col..], &mut out[col..]);
        col += 4;
    }
    while col < n {
        row_block::<R, 1>(x, k_dim, w, n, col, &init[col..], &mut out[col..]);
        col += 1;
    }
}

fn fixed_block<const R: usize, const K: usize, const N: usize>(
    x: &[[f64; K]],
    w: &[[f64; N]; K],
    init: &[f64; N],
    out: &mut [[f64; N]],
) {
    let x: &[[f64; K]; R] = x.try_into().unwrap();
    let mut acc = [*init; R];
    for (k, wk) in w.iter().enumerate() {
        for (a, xr) in acc.iter_mut().zip(x) {
            let xv = xr[k];
            for (o, &wv) in a.iter_mut().zip(wk) {
                *o = madd(*o, xv, wv);
            }
        }
    }
    out.copy_from_slice(&acc);
}

fn fixed_rows<const K: usize, const N: usize>(
    x: &[f64],
    rows: usize,
    w: &[f64],
    init: &[f64],
    out: &mut [f64],
) {
    let w: &[[f64; N]; K] = w.as_chunks::<N>().0.try_into().unwrap();
    let init: &[f64; N] = init.try_into().unwrap();
    let xs = x[..rows * K].as_chunks::<K>().0;
    let outs = out[..rows * N].as_chunks_mut::<N>().0;
    let mut xi = xs.chunks_exact(4);
    let mut oi = outs.chunks_exact_mut(4);
    for (xb, ob) in xi.by_ref().zip(oi.by_ref()) {
        fixed_block::<4, K, N>(xb, w, init, ob);
    }
    for (xr, or) in xi
        .remainder()
        .chunks(1)
        .zip(oi.into_remainder().chunks_mut(1))
    {
        fixed_block::<1, K, N>(xr, w, init, or);
    }
}

/// For every row `r`: `out[r, :] = init + Σ_k x[r, k] · w[k, :]`.
///
/// `x` is `rows × k_dim`, `w` is `k_dim × n`, `init` has length `n`, or is
/// empty for zero initialization.
pub(super) fn rows_times_matrix(
    x: &[f64],
    rows: usize,
    k_dim: usize,
    w: &[f64],
    init: &[f64],
    out: &mut [f64],
) {
    let n = w.len() / k_dim.max(1);
    let zeros;
    let init = if init.is_empty() {
        zeros = vec![0.0; n];
        &zeros[..]
    } else {
        init
    };
    #[cfg(all(target_arch = "x86_64", target_feature = "avx512f"))]
    match (k_dim, n) {
        (16, 16) => return avx512::rows16::<16>(x, rows, w, init, out),
        (3, 16) => return avx512::rows16::<3>(x, rows, w, init, out),
        (1, 16) => return avx512::rows16::<1>(x, rows, w, init, out),
        _ => {}
    }
    match (k_dim, n) {
        (16, 16) => return fixed_rows::<16, 16>(x, rows, w, init, out),
        (16, 1) => return fixed_rows::<16, 1>(x, rows, w, init, out),
        (1, 16) => return fixed_rows::<1, 16>(x, rows, w, init, out),
        (3, 16) => return fixed_rows::<3, 16>(x, rows, w, init, out),
        _ => {}
    }
    let mut r = 0;
    while r + 4 <= rows {
        row_group::<4>(&x[r * k_dim..], k_dim, w, n, init, &mut out[r * n..]);
        r += 4;
    }
    while r + 2 <= rows {
        row_group::<2>(&x[r * k_dim..], k_dim, w, n, init, &mut out[r * n..]);
        r += 2;
    }
    while r < rows {
        row_group::<1>(&x[r * k_dim..], k_dim, w, n, init, &mut out[r * n..]);
        r += 1;
    }
}

#[allow(clippy::too_many_arguments)]
fn outer_block<const O: usize, const B: usize>(
    delta: &[f64],
    rows: usize,
    n_out: usize,
    o: usize,
    a: &[f64],
    n_in: usize,
    col: usize,
    g: &mut [f64],
) {
    let mut acc = [[0.0; B]; O];
    for (q, acc_q) in acc.iter_mut().enumerate() {
        let start = (o + q) * n_in + col;
        acc_q.copy_from_slice(&g[start..start + B]);
    }
    for r in 0..rows {
        let ar: &[f64; B] = a[r * n_in + col..r * n_in + col + B].try_into().unwrap();
        for (q, acc_q) in acc.iter_mut().enumerate() {
            let d = delta[r * n_out + o + q];
            for j in 0..B {
                acc_q[j] = madd(acc_q[j], d, ar[j]);
            }
        }
    }
    for (q, acc_q) in acc.iter().enumerate() {
        let start = (o + q) * n_in + col;
        g[start..start + B].copy_from_slice(acc_q);
    }
}

fn outer_group<const O: usize>(
    delta: &[f64],
    rows: usize,
    n_out: usize,
    o: usize,
    a: &[f64],
    n_in: usize,
    g: &mut [f64],
) {
    let mut col = 0;
    while col + 16 <= n_in {
        outer_block::<O, 16>(delta, rows, n_out, o, a, n_in, col, g);
        col += 16;
    }
    while col + 4 <= n_in {
        outer_block::<O, 4>(delta, rows, n_out, o, a, n_in, col, g);
        col += 4;
    }
    while col < n_in {
        outer_block::<O, 1>(delta, rows, n_out, o, a, n_in, col, g);
        col += 1;
    }
}

fn fixed_outer_block<const O: usize, const NO: usize, const NI: usize>(
    deltas: &[[f64; NO]],
    a: &[[f64; NI]],
    o: usize,
    g: &mut [[f64; NI]],
) {
    let g: &mut [[f64; NI]; O] = (&mut g[o..o + O]).try_into().unwrap();
    let mut acc = *g;
    for (d, ar) in deltas.iter().zip(a) {
        let d: &[f64; O] = d[o..o + O].try_into().unwrap();
        for (acc_q, &dv) in acc.iter_mut().zip(d) {
            for (s, &av) in acc_q.iter_mut().zip(ar) {
                *s = madd(*s, dv, av);
            }
        }
    }
    *g = acc;
}

fn fixed_outer<const NO: usize, const NI: usize>(
    delta: &[f64],
    rows: usize,
    a: &[f64],
    g: &mut [f64],
) {
    let deltas = delta[..rows * NO].as_chunks::<NO>().0;
    let a = a[..rows * NI].as_chunks::<NI>().0;
    let g = g.as_chunks_mut::<NI>().0;
    let mut o = 0;
    while o + 4 <= NO {
        fixed_outer_block::<4, NO, NI>(deltas, a, o, g);
        o += 4;
    }
    while o < NO {
        fixed_outer_block::<1, NO, NI>(deltas, a, o, g);
        o += 1;
    }
}

/// `g[o, :] += Σ_r delta[r, o] · a[r, :]` for an `n_out × n_in` gradient.
pub(super) fn accumulate_outer(
    delta: &[f64],
    rows: usize,
    n_out: usize,
    a: &[f64],
    n_in: usize,
    g: &mut [f64],
) {
    #[cfg(all(target_arch = "x86_64", target_feature = "avx512f"))]
    if n_in == 16 {
        match n_out {
            16 => return avx512::outer16::<16>(delta, rows, a, g),
            1 => return avx512::outer16::<1>(delta, rows, a, g),
            _ => {}
        }
    }
    match (n_out, n_in) {
        (16, 16) => return fixed_outer::<16, 16>(delta, rows, a, g),
        (1, 16) => return fixed_outer::<1, 16>(delta, rows, a, g),
        (16, 3) => return fixed_outer::<16, 3>(delta, rows, a, g),
        (16, 1) => return fixed_outer::<16, 1>(delta, rows, a, g),
        _ => {}
    }
    let mut o = 0;
    while o + 4 <= n_out {
        outer_group::<4>(delta, rows, n_out, o, a, n_in, g);
        o += 4;
    }
    while o + 2 <= n_out {
        outer_group::<2>(delta, rows, n_out, o, a, n_in, g);
        o += 2;
    }
    while o < n_out {
        outer_group::<1>(delta, rows, n_out, o, a, n_in, g);
        o += 1;
    }
}

/// Explicit 512-bit versions of the 16-wide kernels. Each lane performs the
/// same fused multiply-adds in the same order as [`madd`] loops above.
#[cfg(all(target_arch = "x86_64", target_feature = "avx512f"))]
mod avx512 {
    use std::arch::x86_64::{
        __m512d, _mm512_fmadd_pd, _mm512_loadu_pd, _mm512_set1_pd, _mm512_storeu_pd,
    };

    #[inline(always)]
    fn load(v: &[f64; 8]) -> __m512d {
        // SAFETY: `v` is 8 readable doubles and the target has AVX-512F.
        unsafe { _mm512_loadu_pd(v.as_ptr()) }
    }

    #[inline(always)]
    fn store(v: __m512d, out: &mut [f64; 8]) {
        // SAFETY: `out` is 8 writable doubles and the target has AVX-512F.
        unsafe { _mm512_storeu_pd(out.as_mut_ptr(), v) }
    }

    #[inline(always)]
    fn splat(v: f64) -> __m512d {
        // SAFETY: the target has AVX-512F.
        unsafe { _mm512_set1_pd(v) }
    }

    /// `a · b + c` with one rounding, lane by lane.
    #[inline(always)]
    fn fmadd(a: __m512d, b: __m512d, c: __m512d) -> __m512d {
        // SAFETY: the target has AVX-512F.
        unsafe { _mm512_fmadd_pd(a, b, c) }
    }

    #[inline(always)]
    fn halves(v: &[f64; 16]) -> (&[f64; 8], &[f64; 8]) {
        let (a, b) = v.split_at(8);
        (a.try_into().unwrap(), b.try_into().unwrap())
    }

    #[inline(always)]
    fn halves_mut(v: &mut [f64; 16]) -> (&mut [f64; 8], &mut [f64; 8]) {
        let (a, b) = v.split_at_mut(8);
        (a.try_into().unwrap(), b.try_into().unwrap())
    }

    #[inline(always)]
    fn block<const R: usize, const K: usize>(
        x: &[[f64; K]],
        w: &[[__m512d; 2]; K],
        init: [__m512d; 2],
        out: &mut [[f64; 16]],
    ) {
        let mut acc = [init; R];
        for (k, wk) in w.iter().enumerate() {
            for (a, xr) in acc.iter_mut().zip(x) {
                let xv = splat(xr[k]);
                a[0] = fmadd(xv, wk[0], a[0]);
                a[1] = fmadd(xv, wk[1], a[1]);
            }
        }
        for (a, o) in acc.iter().zip(out) {
            let (lo, hi) = halves_mut(o);
            store(a[0], lo);
            store(a[1], hi);
        }
    }

    /// `out[r, :] = init + Σ_k x[r, k] · w[k, :]` with 16 output columns.
    pub(super) fn rows16<const K: usize>(
        x: &[f64],
        rows: usize,
        w: &[f64],
        init: &[f64],
        out: &mut [f64],
    ) {
        let w: &[[f64; 16]; K] = w.as_chunks::<16>().0.try_into().unwrap();
        let w: [[__m512d; 2]; K] = std::array::from_fn(|k| {
            let (lo, hi) = halves(&w[k]);
            [load(lo), load(hi)]
        });
        let (lo, hi) = halves(init.try_into().unwrap());
        let init = [load(lo), load(hi)];
        let xs = x[..rows * K].as_chunks::<K>().0;
        let outs = out[..rows * 16].as_chunks_mut::<16>().0;
        let mut xi = xs.chunks_exact(4);
        let mut oi = outs.chunks_exact_mut(4);
        for (xb, ob) in xi.by_ref().zip(oi.by_ref()) {
            block::<4, K>(xb, &w, init, ob);
        }
        for (xr, or) in xi
            .remainder()
            .chunks(1)
            .zip(oi.into_remainder().chunks_mut(1))
        {
            block::<1, K>(xr, &w, init, or);
        }
    }

    #[inline(always)]
    fn outer_block<const O: usize, const NO: usize>(
        deltas: &[[f64; NO]],
        a: &[[f64; 16]],
        o: usize,
        g: &mut [[f64; 16]],
    ) {
        let g: &mut [[f64; 16]; O] = (&mut g[o..o + O]).try_into().unwrap();
        let mut acc: [[__m512d; 2]; O] = std::array::from_fn(|q| {
            let (lo, hi) = halves(&g[q]);
            [load(lo), load(hi)]
        });
        for (d, ar) in deltas.iter().zip(a) {
            let (lo, hi) = halves(ar);
            let (alo, ahi) = (load(lo), load(hi));
            let d: &[f64; O] = d[o..o + O].try_into().unwrap();
            for (acc_q, &dv) in acc.iter_mut().zip(d) {
                let dv = splat(dv);
                acc_q[0] = fmadd(dv, alo, acc_q[0]);
                acc_q[1] = fmadd(dv, ahi, acc_q[1]);
            }
        }
        for (acc_q, gq) in acc.iter().zip(g.iter_mut()) {
            let (lo, hi) = halves_mut(gq);
            store(acc_q[0], lo);
            store(acc_q[1], hi);
        }
    }

    /// `g[o, :] += Σ_r delta[r, o] · a[r, :]` with 16 input columns.
    pub(super) fn outer16<const NO: usize>(delta: &[f64], rows: usize, a: &[f64], g: &mut [f64]) {
        let deltas = delta[..rows * NO].as_chunks::<NO>().0;
        let a = a[..rows * 16].as_chunks::<16>().0;
        let g = g.as_chunks_mut::<16>().0;
        let mut o = 0;
        while o + 8 <= NO {
            outer_block::<8, NO>(deltas, a, o, g);
            o += 8;
        }
        while o < NO {
            outer_block::<1, NO>(deltas, a, o, g);
            o += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_shape(rows: usize, k: usize, n: usize) {
        let x: Vec<f64> = (0..rows * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let w: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.11).cos()).collect();
        let init: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        let mut out = vec![0.0; rows * n];
        rows_times_matrix(&x, rows, k, &w, &init, &mut out);
        for r in 0..rows {
            for c in 0..n {
                let mut s = init[c];
                for kk in 0..k {
                    s = madd(s, x[r * k + kk], w[kk * n + c]);
                }
                assert_eq!(out[r * n + c], s, "{rows}x{k}x{n}");
            }
        }

        let mut g = vec![0.5; n * k];
        let delta: Vec<f64> = (0..rows * n).map(|i| (i as f64 * 0.7).sin()).collect();
        accumulate_outer(&delta, rows, n, &x, k, &mut g);
        for o in 0..n {
            for i in 0..k {
                let mut s = 0.5;
                for r in 0..rows {
                    s = madd(s, delta[r * n + o], x[r * k + i]);
                }
                assert_eq!(g[o * k + i], s, "{rows}x{k}x{n}");
            }
        }
    }

    #[test]
    fn matches_naive_products() {
        for (rows, k, n) in [
            (5, 7, 21),
            (7, 16, 16),
            (6, 3, 16),
            (5, 16, 1),
            (9, 1, 16),
            (64, 16, 16),
        ] {
            check_shape(rows, k, n);
        }
    }
}

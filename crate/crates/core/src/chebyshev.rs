//! Chebyshev series on [-1, 1]: Lobatto interpolation, Clenshaw evaluation,
//! antiderivatives and Clenshaw–Curtis weights.

use std::f64::consts::PI;

/// Chebyshev–Lobatto points `x_j = cos(pi j / m)`, `j = 0..=m`, descending.
pub fn lobatto_points(m: usize) -> Vec<f64> {
    (0..=m).map(|j| (PI * j as f64 / m as f64).cos()).collect()
}

/// Coefficients of the degree-`m` interpolant through values sampled at
/// [`lobatto_points`]`(m)` (a scaled DCT-I).
pub fn interpolate_lobatto(values: &[f64]) -> Vec<f64> {
    let m = values.len() - 1;
    assert!(m >= 1, "need at least two samples");
    let table: Vec<f64> = (0..2 * m).map(|i| (PI * i as f64 / m as f64).cos()).collect();
    let mut coeffs = vec![0.0; m + 1];
    for (k, ck) in coeffs.iter_mut().enumerate() {
        let mut s = 0.5 * (values[0] + if k % 2 == 0 { values[m] } else { -values[m] });
        let mut idx = 0usize;
        for v in &values[1..m] {
            idx = (idx + k) % (2 * m);
            s += v * table[idx];
        }
        *ck = 2.0 * s / m as f64;
    }
    coeffs[0] *= 0.5;
    coeffs[m] *= 0.5;
    coeffs
}

/// Evaluates `sum c_k T_k(x)` by Clenshaw's recurrence.
pub fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    match c.first() {
        Some(&c0) => c0 + x * b1 - b2,
        None => 0.0,
    }
}

/// Coefficients of the antiderivative that vanishes at `x = -1`.
pub fn antiderivative(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let at = |k: usize| if k < n { c[k] } else { 0.0 };
    let mut b = vec![0.0; n + 1];
    if n == 0 {
        return b;
    }
    b[1] = at(0) - 0.5 * at(2);
    for (k, bk) in b.iter_mut().enumerate().skip(2) {
        *bk = (at(k - 1) - at(k + 1)) / (2.0 * k as f64);
    }
    let mut at_minus_one = 0.0;
    for (k, bk) in b.iter().enumerate().skip(1) {
        at_minus_one += if k % 2 == 0 { *bk } else { -*bk };
    }
    b[0] = -at_minus_one;
    b
}

/// Clenshaw–Curtis weights on [-1, 1] for the nodes [`lobatto_points`]`(m)`.
pub fn clenshaw_curtis_weights(m: usize) -> Vec<f64> {
    assert!(m >= 2, "Clenshaw-Curtis needs m >= 2");
    let mf = m as f64;
    let mut w = vec![0.0; m + 1];
    let end = if m.is_multiple_of(2) { 1.0 / (mf * mf - 1.0) } else { 1.0 / (mf * mf) };
    w[0] = end;
    w[m] = end;
    for (j, wj) in w.iter_mut().enumerate().take(m).skip(1) {
        let t = PI * j as f64 / mf;
        let mut v = 1.0;
        if m.is_multiple_of(2) {
            for k in 1..m / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * t).cos() / (4.0 * kf * kf - 1.0);
            }
            v -= (mf * t).cos() / (mf * mf - 1.0);
        } else {
            for k in 1..=(m - 1) / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * t).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        *wj = 2.0 * v / mf;
    }
    w
}

/// Monomial coefficients in `s` of `sum d_j T_j(xi)`, `xi = scale s + shift`.
pub fn to_monomial(d: &[f64], scale: f64, shift: f64) -> Vec<f64> {
    let n = d.len();
    let mut out = vec![0.0; n];
    let mut t_prev = vec![0.0; n];
    let mut t_cur = vec![0.0; n];
    t_prev[0] = 1.0;
    if n > 1 {
        t_cur[0] = shift;
        t_cur[1] = scale;
    }
    for (j, &dj) in d.iter().enumerate() {
        let t = match j {
            0 => &t_prev,
            _ => &t_cur,
        };
        for (o, c) in out.iter_mut().zip(t.iter()) {
            *o += dj * c;
        }
        if j >= 1 && j + 1 < n {
            let mut next = vec![0.0; n];
            for k in 0..n {
                next[k] = 2.0 * shift * t_cur[k] - t_prev[k];
                if k > 0 {
                    next[k] += 2.0 * scale * t_cur[k - 1];
                }
            }
            t_prev = std::mem::replace(&mut t_cur, next);
        }
    }
    out
}

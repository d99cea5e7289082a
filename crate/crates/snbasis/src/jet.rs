//! Degree-3 truncated multivariate Taylor arithmetic.
//!
//! A `Jet3` carries the value, gradient, and the symmetric second- and
//! third-order Taylor coefficients of a function of `m` variables at a
//! point. Arithmetic is exact to the truncation order, so extracted
//! derivatives carry no finite-difference noise.

use std::sync::Arc;

/// Shared index layout for jets over `m` variables. Coefficients are stored
/// flat: constant, then the m linear terms, then pairs (i <= j) in
/// lexicographic order, then triples (i <= j <= k).
#[derive(Debug)]
pub struct JetSpace {
    m: usize,
    len: usize,
    pair_base: usize,
    trip_base: usize,
    /// pair_off[i] = number of pairs (a, b), a <= b, with a < i.
    pair_off: Vec<usize>,
    /// trip_off[i] = number of triples (a, b, c), a <= b <= c, with a < i.
    trip_off: Vec<usize>,
}

impl JetSpace {
    pub fn new(m: usize) -> Arc<JetSpace> {
        let n_pairs = m * (m + 1) / 2;
        let n_trips = m * (m + 1) * (m + 2) / 6;
        let mut pair_off = Vec::with_capacity(m + 1);
        let mut trip_off = Vec::with_capacity(m + 1);
        let (mut p, mut t) = (0usize, 0usize);
        for i in 0..=m {
            pair_off.push(p);
            trip_off.push(t);
            if i < m {
                let rem = m - i;
                p += rem;
                t += rem * (rem + 1) / 2;
            }
        }
        Arc::new(JetSpace {
            m,
            len: 1 + m + n_pairs + n_trips,
            pair_base: 1 + m,
            trip_base: 1 + m + n_pairs,
            pair_off,
            trip_off,
        })
    }

    pub fn vars(&self) -> usize {
        self.m
    }

    pub fn coeff_count(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn idx1(&self, i: usize) -> usize {
        1 + i
    }

    #[inline]
    pub fn idx2(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.m);
        self.pair_base + self.pair_off[i] + (j - i)
    }

    #[inline]
    pub fn idx3(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i <= j && j <= k && k < self.m);
        // within first = i: pairs (j-i, k-i) over the m-i remaining vars
        let rem = self.m - i;
        let a = j - i;
        let b = k - i;
        let local = a * (2 * rem - a + 1) / 2 + (b - a);
        self.trip_base + self.trip_off[i] + local
    }
}

/// A truncated Taylor expansion to total degree 3.
#[derive(Clone, Debug)]
pub struct Jet3 {
    space: Arc<JetSpace>,
    c: Vec<f64>,
}

impl Jet3 {
    pub fn constant(space: &Arc<JetSpace>, v: f64) -> Jet3 {
        let mut c = vec![0.0; space.len];
        c[0] = v;
        Jet3 {
            space: Arc::clone(space),
            c,
        }
    }

    /// The i-th variable seeded at `v`.
    pub fn variable(space: &Arc<JetSpace>, i: usize, v: f64) -> Jet3 {
        let mut j = Jet3::constant(space, v);
        j.c[space.idx1(i)] = 1.0;
        j
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn add(&self, o: &Jet3) -> Jet3 {
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&o.c) {
            *a += b;
        }
        out
    }

    pub fn add_assign(&mut self, o: &Jet3) {
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a += b;
        }
    }

    pub fn sub(&self, o: &Jet3) -> Jet3 {
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&o.c) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet3 {
        let mut out = self.clone();
        for a in out.c.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn add_scalar(&self, s: f64) -> Jet3 {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    /// Truncated product. Targets are enumerated in storage order so the
    /// inner loops stay branch-light.
    pub fn mul(&self, o: &Jet3) -> Jet3 {
        let sp = &self.space;
        let m = sp.m;
        let a = &self.c;
        let b = &o.c;
        let mut out = vec![0.0; sp.len];
        let (a0, b0) = (a[0], b[0]);
        out[0] = a0 * b0;
        for v in 0..m {
            let iv = sp.idx1(v);
            out[iv] = a0 * b[iv] + a[iv] * b0;
        }
        let mut t2 = sp.pair_base;
        for u in 0..m {
            let (au, bu) = (a[sp.idx1(u)], b[sp.idx1(u)]);
            for v in u..m {
                let (av, bv) = (a[sp.idx1(v)], b[sp.idx1(v)]);
                let mut s = a0 * b[t2] + a[t2] * b0 + au * bv;
                if u != v {
                    s += av * bu;
                }
                out[t2] = s;
                t2 += 1;
            }
        }
        let mut t3 = sp.trip_base;
        for u in 0..m {
            let (au, bu) = (a[sp.idx1(u)], b[sp.idx1(u)]);
            for v in u..m {
                let (av, bv) = (a[sp.idx1(v)], b[sp.idx1(v)]);
                let uv = sp.idx2(u, v);
                for w in v..m {
                    let (aw, bw) = (a[sp.idx1(w)], b[sp.idx1(w)]);
                    let vw = sp.idx2(v, w);
                    let uw = sp.idx2(u, w);
                    let mut s = a0 * b[t3] + a[t3] * b0;
                    // distinct splits single | pair of the sorted triple
                    s += au * b[vw] + a[vw] * bu;
                    if v != u {
                        s += av * b[uw] + a[uw] * bv;
                    }
                    if w != v {
                        s += aw * b[uv] + a[uv] * bw;
                    }
                    out[t3] = s;
                    t3 += 1;
                }
            }
        }
        Jet3 {
            space: Arc::clone(sp),
            c: out,
        }
    }

    /// Reciprocal via the geometric series around the constant term.
    pub fn recip(&self) -> Jet3 {
        let c0 = self.c[0];
        assert!(c0 != 0.0, "reciprocal of jet with zero constant term");
        let x = self.frac_part(); // (self - c0)/c0, zero constant term
        let x2 = x.mul(&x);
        let x3 = x2.mul(&x);
        // (1 - x + x^2 - x^3)/c0
        let mut out = Jet3::constant(&self.space, 1.0);
        out = out.sub(&x).add(&x2).sub(&x3);
        out.scale(1.0 / c0)
    }

    pub fn div(&self, o: &Jet3) -> Jet3 {
        self.mul(&o.recip())
    }

    /// Natural log; requires a positive constant term.
    pub fn ln(&self) -> Jet3 {
        let c0 = self.c[0];
        assert!(c0 > 0.0, "log of jet with nonpositive constant term {c0}");
        let x = self.frac_part();
        let x2 = x.mul(&x);
        let x3 = x2.mul(&x);
        x.sub(&x2.scale(0.5))
            .add(&x3.scale(1.0 / 3.0))
            .add_scalar(c0.ln())
    }

    /// (self - value)/value with the constant coefficient forced to zero.
    fn frac_part(&self) -> Jet3 {
        let c0 = self.c[0];
        let mut out = self.scale(1.0 / c0);
        out.c[0] = 0.0;
        out
    }

    /// First partial derivative.
    pub fn d1(&self, i: usize) -> f64 {
        self.c[self.space.idx1(i)]
    }

    /// Second partial derivative (with the multinomial factor applied).
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        let c = self.c[self.space.idx2(i, j)];
        if i == j {
            2.0 * c
        } else {
            c
        }
    }

    /// Third partial derivative (with the multinomial factor applied).
    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        let mut s = [i, j, k];
        s.sort_unstable();
        let c = self.c[self.space.idx3(s[0], s[1], s[2])];
        if s[0] == s[2] {
            6.0 * c
        } else if s[0] == s[1] || s[1] == s[2] {
            2.0 * c
        } else {
            c
        }
    }
}

/// Determinant of a square matrix of jets by Gaussian elimination without
/// pivoting; valid (and domain-checking) for positive definite matrices.
/// Returns None when a pivot's constant term is nonpositive.
pub fn det_positive_definite(mat: &mut Vec<Vec<Jet3>>) -> Option<Jet3> {
    let n = mat.len();
    let space = Arc::clone(mat[0][0].space());
    let mut det = Jet3::constant(&space, 1.0);
    for k in 0..n {
        if mat[k][k].value() <= 0.0 {
            return None;
        }
        det = det.mul(&mat[k][k]);
        let inv = mat[k][k].recip();
        for i in (k + 1)..n {
            let f = mat[i][k].mul(&inv);
            for j in (k + 1)..n {
                let t = f.mul(&mat[k][j]);
                mat[i][j] = mat[i][j].sub(&t);
            }
        }
    }
    Some(det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_layout_is_a_bijection() {
        let sp = JetSpace::new(5);
        let mut seen = vec![false; sp.coeff_count()];
        seen[0] = true;
        for i in 0..5 {
            assert!(!seen[sp.idx1(i)]);
            seen[sp.idx1(i)] = true;
        }
        for i in 0..5 {
            for j in i..5 {
                assert!(!seen[sp.idx2(i, j)]);
                seen[sp.idx2(i, j)] = true;
            }
        }
        for i in 0..5 {
            for j in i..5 {
                for k in j..5 {
                    assert!(!seen[sp.idx3(i, j, k)]);
                    seen[sp.idx3(i, j, k)] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn product_of_two_linear_factors() {
        let sp = JetSpace::new(3);
        let x = Jet3::variable(&sp, 0, 2.0);
        let y = Jet3::variable(&sp, 1, -1.0);
        // (2 + dx)(-1 + dy) = -2 + 2dy - dx + dx dy
        let p = x.mul(&y);
        assert_eq!(p.value(), -2.0);
        assert_eq!(p.d1(0), -1.0);
        assert_eq!(p.d1(1), 2.0);
        assert_eq!(p.d2(0, 1), 1.0);
        assert_eq!(p.d2(0, 0), 0.0);
        // cube has the right third derivatives: (x)^3 at x=2
        let c = x.mul(&x).mul(&x);
        assert_eq!(c.value(), 8.0);
        assert_eq!(c.d1(0), 12.0);
        assert_eq!(c.d2(0, 0), 12.0);
        assert_eq!(c.d3(0, 0, 0), 6.0);
    }

    #[test]
    fn ln_and_recip_series() {
        let sp = JetSpace::new(1);
        let x = Jet3::variable(&sp, 0, 1.0); // 1 + dx
        let l = x.ln(); // dx - dx^2/2 + dx^3/3
        assert!((l.value()).abs() < 1e-15);
        assert!((l.d1(0) - 1.0).abs() < 1e-15);
        assert!((l.d2(0, 0) + 1.0).abs() < 1e-15);
        assert!((l.d3(0, 0, 0) - 2.0).abs() < 1e-15);
        let r = x.recip(); // 1 - dx + dx^2 - dx^3
        assert!((r.value() - 1.0).abs() < 1e-15);
        assert!((r.d1(0) + 1.0).abs() < 1e-15);
        assert!((r.d2(0, 0) - 2.0).abs() < 1e-15);
        assert!((r.d3(0, 0, 0) + 6.0).abs() < 1e-15);
        // away from 1: ln(3 + dx), derivatives 1/3, -1/9, 2/27
        let y = Jet3::variable(&sp, 0, 3.0).ln();
        assert!((y.value() - 3.0f64.ln()).abs() < 1e-15);
        assert!((y.d1(0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((y.d2(0, 0) + 1.0 / 9.0).abs() < 1e-15);
        assert!((y.d3(0, 0, 0) - 2.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn division_round_trips() {
        let sp = JetSpace::new(2);
        let x = Jet3::variable(&sp, 0, 1.5);
        let y = Jet3::variable(&sp, 1, 0.5);
        let q = x.mul(&y).div(&y);
        for (a, b) in q.coeffs().iter().zip(x.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn determinant_of_constant_matrix() {
        let sp = JetSpace::new(1);
        // [[2, 1], [1, 2]] has determinant 3
        let c = |v: f64| Jet3::constant(&sp, v);
        let mut m = vec![vec![c(2.0), c(1.0)], vec![c(1.0), c(2.0)]];
        let d = det_positive_definite(&mut m).unwrap();
        assert!((d.value() - 3.0).abs() < 1e-15);
        // not positive definite: [[0, ...]]
        let mut bad = vec![vec![c(0.0), c(1.0)], vec![c(1.0), c(2.0)]];
        assert!(det_positive_definite(&mut bad).is_none());
    }

    #[test]
    fn determinant_derivative_of_2x2_gram() {
        // det [[1, g],[g, 1]] = 1 - g^2: d/dg = -2g, d2/dg2 = -2
        let sp = JetSpace::new(1);
        let g = Jet3::variable(&sp, 0, 0.25);
        let one = Jet3::constant(&sp, 1.0);
        let mut m = vec![vec![one.clone(), g.clone()], vec![g.clone(), one]];
        let d = det_positive_definite(&mut m).unwrap();
        assert!((d.value() - (1.0 - 0.0625)).abs() < 1e-15);
        assert!((d.d1(0) + 0.5).abs() < 1e-15);
        assert!((d.d2(0, 0) + 2.0).abs() < 1e-14);
        assert!(d.d3(0, 0, 0).abs() < 1e-14);
    }
}

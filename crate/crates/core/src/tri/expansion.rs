//! Floating-point expansion arithmetic after Shewchuk (1997). An expansion is
//! a sum of nonoverlapping doubles stored in increasing magnitude with zeros
//! removed; its sign is the sign of the last component.

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let x = a + b;
    let bv = x - a;
    let av = x - bv;
    (x, (a - av) + (b - bv))
}

#[inline]
pub(crate) fn two_diff(a: f64, b: f64) -> (f64, f64) {
    let x = a - b;
    let bv = a - x;
    let av = x + bv;
    (x, (a - av) + (bv - b))
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let x = a + b;
    (x, b - (x - a))
}

#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let x = a * b;
    (x, a.mul_add(b, -x))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct Expansion(Vec<f64>);

impl Expansion {
    pub fn from_f64(a: f64) -> Self {
        if a == 0.0 {
            Expansion(Vec::new())
        } else {
            Expansion(vec![a])
        }
    }

    /// Exact `a - b`.
    pub fn diff(a: f64, b: f64) -> Self {
        let (x, y) = two_diff(a, b);
        Expansion([y, x].into_iter().filter(|v| *v != 0.0).collect())
    }

    pub fn sign(&self) -> f64 {
        match self.0.last() {
            Some(v) if *v > 0.0 => 1.0,
            Some(v) if *v < 0.0 => -1.0,
            _ => 0.0,
        }
    }

    #[cfg(test)]
    pub fn estimate(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn neg(&self) -> Self {
        Expansion(self.0.iter().map(|v| -v).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.0.is_empty() {
            return other.clone();
        }
        if other.0.is_empty() {
            return self.clone();
        }
        let mut g = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            if self.0[i].abs() <= other.0[j].abs() {
                g.push(self.0[i]);
                i += 1;
            } else {
                g.push(other.0[j]);
                j += 1;
            }
        }
        g.extend_from_slice(&self.0[i..]);
        g.extend_from_slice(&other.0[j..]);
        let mut h = Vec::with_capacity(g.len());
        let mut q = g[0];
        for &x in &g[1..] {
            let (qn, hh) = two_sum(q, x);
            if hh != 0.0 {
                h.push(hh);
            }
            q = qn;
        }
        if q != 0.0 {
            h.push(q);
        }
        Expansion(h)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, b: f64) -> Self {
        let e = &self.0;
        if e.is_empty() || b == 0.0 {
            return Expansion(Vec::new());
        }
        let mut h = Vec::with_capacity(2 * e.len());
        let (mut q, hh) = two_prod(e[0], b);
        if hh != 0.0 {
            h.push(hh);
        }
        for &ei in &e[1..] {
            let (p1, p0) = two_prod(ei, b);
            let (sum, hh) = two_sum(q, p0);
            if hh != 0.0 {
                h.push(hh);
            }
            let (qn, hh) = fast_two_sum(p1, sum);
            if hh != 0.0 {
                h.push(hh);
            }
            q = qn;
        }
        if q != 0.0 {
            h.push(q);
        }
        Expansion(h)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (small, big) = if self.0.len() <= other.0.len() { (self, other) } else { (other, self) };
        small
            .0
            .iter()
            .fold(Expansion::default(), |acc, &f| acc.add(&big.scale(f)))
    }
}

/// Exact determinant of the 3x3 matrix with rows `r0, r1, r2`.
pub(crate) fn det3(r0: &[Expansion; 3], r1: &[Expansion; 3], r2: &[Expansion; 3]) -> Expansion {
    let m0 = r1[1].mul(&r2[2]).sub(&r1[2].mul(&r2[1]));
    let m1 = r1[0].mul(&r2[2]).sub(&r1[2].mul(&r2[0]));
    let m2 = r1[0].mul(&r2[1]).sub(&r1[1].mul(&r2[0]));
    r0[0].mul(&m0).sub(&r0[1].mul(&m1)).add(&r0[2].mul(&m2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_is_exact() {
        let a = Expansion::from_f64(1e16).add(&Expansion::from_f64(1.0));
        let b = a.sub(&Expansion::from_f64(1e16));
        assert_eq!(b.estimate(), 1.0);
        assert_eq!(Expansion::diff(0.1, 0.1).sign(), 0.0);
    }

    #[test]
    fn product_matches_integers() {
        let x = (1u64 << 40) as f64 + 3.0;
        let y = (1u64 << 41) as f64 + 5.0;
        let p = Expansion::from_f64(x).mul(&Expansion::from_f64(y));
        let want = (((1i128 << 40) + 3) * ((1i128 << 41) + 5)) as f64;
        assert_eq!(p.estimate(), want);
        let exact: i128 = p.0.iter().map(|v| *v as i128).sum();
        assert_eq!(exact, ((1i128 << 40) + 3) * ((1i128 << 41) + 5));
    }
}

//! Exact sizes of restriction spaces and the counting chain that compares
//! `C(m, k)` with the tail `sum_{i >= s} C(m, k - 2i)`.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Vacuous,
}

impl Verdict {
    fn of(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn ok(self) -> bool {
        self != Verdict::Fails
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceCensus {
    pub m: usize,
    pub k: usize,
    pub s: usize,
    /// `C(m, k)`.
    pub full: BigUint,
    /// `(k - 2i, C(m, k - 2i))` for `i = s ..= (k-1)/2`.
    pub terms: Vec<(usize, BigUint)>,
    pub sum: BigUint,
    /// The tail is at most twice its largest term `C(m, k - 2s)`.
    pub geometric: Verdict,
    /// `C(m,k) / C(m,k-2s) >= prod_{i<2s} (m-k+i)/(k-i)`.
    pub product: Verdict,
    /// `prod_{i<2s} (m-k+i)/(k-i) >= ((m-k)/k)^(2s)`.
    pub power: Verdict,
    /// `C(m,k) / sum >= ((m-k)/k)^(2s) / 2`.
    pub chain: Verdict,
}

impl SpaceCensus {
    pub fn all_hold(&self) -> bool {
        [self.geometric, self.product, self.power, self.chain].iter().all(|v| v.ok())
    }
}

/// Exact census for `m` centers, `k` alive and tail start `s`.
pub fn census(m: usize, k: usize, s: usize) -> SpaceCensus {
    let full = binomial(m, k);
    let vacuous = k > m || k.is_multiple_of(2) || s == 0 || 2 * s > k - 1 || m <= k;
    let mut terms = Vec::new();
    if k <= m && k % 2 == 1 {
        for i in s..=(k - 1) / 2 {
            terms.push((k - 2 * i, binomial(m, k - 2 * i)));
        }
    }
    let sum: BigUint = terms.iter().map(|(_, c)| c).sum();
    if vacuous {
        return SpaceCensus {
            m,
            k,
            s,
            full,
            terms,
            sum,
            geometric: Verdict::Vacuous,
            product: Verdict::Vacuous,
            power: Verdict::Vacuous,
            chain: Verdict::Vacuous,
        };
    }
    let big = |x: usize| BigUint::from(x);
    let top = binomial(m, k - 2 * s);
    let geometric = Verdict::of(sum <= &top * 2u32);
    let (mut pn, mut pd) = (BigUint::one(), BigUint::one());
    for i in 0..2 * s {
        pn *= big(m - k + i);
        pd *= big(k - i);
    }
    // full / top >= pn / pd
    let product = Verdict::of(&full * &pd >= &top * &pn);
    let e = 2 * s as u32;
    let (qn, qd) = (big(m - k).pow(e), big(k).pow(e));
    let power = Verdict::of(&pn * &qd >= &pd * &qn);
    // full / sum >= qn / (2 qd)
    let chain = Verdict::of(&full * &qd * 2u32 >= &sum * &qn);
    SpaceCensus { m, k, s, full, terms, sum, geometric, product, power, chain }
}

/// Census with `m = delta * n2^2`.
pub fn census_for(delta: usize, n2: usize, k: usize, s: usize) -> SpaceCensus {
    census(delta * n2 * n2, k, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(27, 9), BigUint::from(4686825u32));
        assert_eq!(binomial(5, 7), BigUint::zero());
        assert_eq!(binomial(10, 0), BigUint::one());
    }

    #[test]
    fn small_census() {
        let c = census(27, 9, 1);
        assert_eq!(c.terms.len(), 4);
        assert!(c.all_hold());
        // C(27,9) / sum >= 2
        assert!(c.full >= &c.sum * 2u32);
        let last = census(27, 9, 4);
        assert_eq!(last.terms, [(1, BigUint::from(27u32))]);
        let v = census(5, 9, 1);
        assert!(v.terms.is_empty());
        assert_eq!(v.chain, Verdict::Vacuous);
    }
}

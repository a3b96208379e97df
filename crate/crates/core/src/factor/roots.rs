use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::expr::rational_sqrt;
use crate::Rational;

// Trial division bound for the divisor enumeration.
const TRIAL_LIMIT: u64 = 1_000_000;

/// Distinct rational roots of `sum c[i] t^i`, ascending. The zero
/// polynomial has no roots by convention. Degree two and below are solved
/// in closed form; higher degrees use the rational root theorem, and give
/// up (returning the roots found so far) when a coefficient has a prime
/// factor above the trial bound.
pub fn rational_roots(c: &[Rational]) -> Vec<Rational> {
    let mut c: Vec<Rational> = c.to_vec();
    while c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    let mut out = Vec::new();
    if c.len() <= 1 {
        return out;
    }
    let low = c.iter().position(|x| !x.is_zero()).unwrap_or(0);
    if low > 0 {
        out.push(Rational::zero());
        c.drain(..low);
    }
    match c.len() {
        1 => {}
        2 => out.push(-&c[0] / &c[1]),
        3 => {
            let (a, b, k) = (&c[2], &c[1], &c[0]);
            let disc = b * b - Rational::from_integer(4.into()) * a * k;
            if let Some(s) = rational_sqrt(&disc) {
                let two_a = a * Rational::from_integer(2.into());
                out.push((-b - &s) / &two_a);
                out.push((-b + &s) / &two_a);
            }
        }
        _ => out.extend(theorem_roots(&c)),
    }
    out.sort();
    out.dedup();
    out
}

fn theorem_roots(c: &[Rational]) -> Vec<Rational> {
    let den = c.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = c.iter().map(|x| (x * Rational::from_integer(den.clone())).to_integer()).collect();
    let (Some(p), Some(q)) = (divisors(&ints[0]), divisors(ints.last().expect("non-empty"))) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for a in &p {
        for b in &q {
            for s in [1, -1] {
                let r = Rational::new(BigInt::from(s) * a, b.clone());
                if horner(&ints, &r).is_zero() {
                    out.push(r);
                }
            }
        }
    }
    out
}

fn horner(c: &[BigInt], t: &Rational) -> Rational {
    c.iter().rev().fold(Rational::zero(), |acc, k| acc * t + Rational::from_integer(k.clone()))
}

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let mut n = n.abs();
    let mut primes: Vec<(BigInt, u32)> = Vec::new();
    let mut p = 2u64;
    while BigInt::from(p) * BigInt::from(p) <= n {
        if p > TRIAL_LIMIT {
            return None;
        }
        let bp = BigInt::from(p);
        let mut e = 0;
        while (&n % &bp).is_zero() {
            n /= &bp;
            e += 1;
        }
        if e > 0 {
            primes.push((bp, e));
        }
        p += 1;
    }
    if n > BigInt::one() {
        primes.push((n, 1));
    }
    let mut out = vec![BigInt::one()];
    for (p, e) in primes {
        let mut next = Vec::new();
        for d in &out {
            let mut pk = BigInt::one();
            for _ in 0..=e {
                next.push(d * &pk);
                pk *= &p;
            }
        }
        out = next;
    }
    // Guard against pathological divisor counts.
    (out.len().to_u32().is_some_and(|k| k <= 1 << 16)).then_some(out)
}

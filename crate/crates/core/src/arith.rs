//! Integer and rational helpers shared by the number-field and ideal code:
//! primality, factorization, p-adic valuations, modular inverses and square
//! roots, square-free parts, and small exact linear algebra.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Deterministic primality test by trial division (inputs here are small).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut f = 3u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

/// Prime factorization as (prime, exponent) pairs in increasing order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            let mut e = 0;
            while n.is_multiple_of(f) {
                n /= f;
                e += 1;
            }
            out.push((f, e));
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Prime factorization of a nonzero big integer (absolute value).
pub fn factorize_big(n: &BigInt) -> Vec<(BigInt, u32)> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut f = BigInt::from(2);
    while &f * &f <= n {
        if (&n % &f).is_zero() {
            let mut e = 0;
            while (&n % &f).is_zero() {
                n /= &f;
                e += 1;
            }
            out.push((f.clone(), e));
        }
        f += 1;
    }
    if n > BigInt::one() {
        out.push((n, 1));
    }
    out
}

/// Returns `Some(p)` when `n = p^t` for a prime `p` and `t >= 1`.
pub fn prime_power_base(n: u64) -> Option<u64> {
    let f = factorize(n);
    if f.len() == 1 {
        Some(f[0].0)
    } else {
        None
    }
}

/// The exponent of `p` in the nonzero integer `n`.
pub fn val_int(n: &BigInt, p: &BigInt) -> i64 {
    assert!(!n.is_zero(), "valuation of zero");
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// The exponent of `p` in the nonzero rational `x`.
pub fn val_rat(x: &BigRational, p: &BigInt) -> i64 {
    val_int(x.numer(), p) - val_int(x.denom(), p)
}

/// Non-negative residue of `a` modulo `m`.
pub fn modp(a: &BigInt, m: &BigInt) -> BigInt {
    a.mod_floor(m)
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn modinv(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// Reduction of a rational with denominator prime to `m` into `[0, m)`.
pub fn rat_mod(x: &BigRational, m: &BigInt) -> Option<BigInt> {
    let inv = modinv(x.denom(), m)?;
    Some((x.numer() * inv).mod_floor(m))
}

/// All square roots of `a` modulo a small prime `p`, by exhaustive search.
pub fn sqrt_mod_p(a: &BigInt, p: u64) -> Vec<u64> {
    let pb = BigInt::from(p);
    let a = a.mod_floor(&pb).to_u64().unwrap();
    (0..p).filter(|x| (x * x) % p == a).collect()
}

/// Square-free part of a nonzero integer together with the square factor:
/// returns `(s, c)` with `n = s * c^2` and `s` square-free.
pub fn squarefree_part(n: &BigInt) -> (BigInt, BigInt) {
    assert!(!n.is_zero());
    let sign = if n.is_negative() {
        -BigInt::one()
    } else {
        BigInt::one()
    };
    let mut s = BigInt::one();
    let mut c = BigInt::one();
    for (p, e) in factorize_big(n) {
        c *= num_traits::pow(p.clone(), (e / 2) as usize);
        if e % 2 == 1 {
            s *= p;
        }
    }
    (sign * s, c)
}

/// Exact integer square root when `n` is a perfect square.
pub fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &(&r * &r) == n {
        Some(r)
    } else {
        None
    }
}

/// Exact square root of a rational number when it is a square.
pub fn rat_sqrt(x: &BigRational) -> Option<BigRational> {
    Some(BigRational::new(
        exact_sqrt(x.numer())?,
        exact_sqrt(x.denom())?,
    ))
}

/// Kronecker symbol `(a / p)` for a prime `p`.
pub fn kronecker(a: &BigInt, p: u64) -> i32 {
    let pb = BigInt::from(p);
    if p == 2 {
        if a.is_even() {
            return 0;
        }
        let r = a.mod_floor(&BigInt::from(8)).to_u64().unwrap();
        return if r == 1 || r == 7 { 1 } else { -1 };
    }
    let r = a.mod_floor(&pb);
    if r.is_zero() {
        return 0;
    }
    let e = BigInt::from((p - 1) / 2);
    if r.modpow(&e, &pb).is_one() {
        1
    } else {
        -1
    }
}

/// Row-style Hermite normal form of an integer matrix with `cols` columns.
/// Returns the nonzero rows, upper triangular with positive pivots and
/// entries above each pivot reduced into `[0, pivot)`.
pub fn hnf_rows(rows: &[Vec<BigInt>], cols: usize) -> Vec<Vec<BigInt>> {
    let mut m: Vec<Vec<BigInt>> = rows
        .iter()
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .cloned()
        .collect();
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    for c in 0..cols {
        // Euclid on column c among the remaining rows.
        loop {
            let nz: Vec<usize> = (0..m.len()).filter(|&i| !m[i][c].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let piv = *nz.iter().min_by_key(|&&i| m[i][c].abs()).unwrap();
            for &i in &nz {
                if i != piv {
                    let q = m[i][c].div_floor(&m[piv][c]);
                    let prow = m[piv].clone();
                    for (x, y) in m[i].iter_mut().zip(prow.iter()) {
                        *x -= &q * y;
                    }
                }
            }
        }
        if let Some(i) = (0..m.len()).find(|&i| !m[i][c].is_zero()) {
            let mut row = m.remove(i);
            if row[c].is_negative() {
                for x in row.iter_mut() {
                    *x = -x.clone();
                }
            }
            out.push(row);
        }
        m.retain(|r| r.iter().any(|x| !x.is_zero()));
    }
    // Reduce entries above pivots.
    for i in 0..out.len() {
        let pc = (0..cols).find(|&c| !out[i][c].is_zero()).unwrap();
        for j in 0..i {
            let q = out[j][pc].div_floor(&out[i][pc]);
            if !q.is_zero() {
                let r = out[i].clone();
                for (x, y) in out[j].iter_mut().zip(r.iter()) {
                    *x -= &q * y;
                }
            }
        }
    }
    out
}

/// Determinant of a square rational matrix by fraction-exact elimination.
pub fn rat_det(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let piv = m[c][c].clone();
        det *= &piv;
        for r in c + 1..n {
            if !m[r][c].is_zero() {
                let f = &m[r][c] / &piv;
                for k in c..n {
                    let t = &f * &m[c][k];
                    m[r][k] -= t;
                }
            }
        }
    }
    det
}

/// Solves `A x = b` for square nonsingular rational `A`.
pub fn rat_solve(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(p, c);
        let piv = m[c][c].clone();
        for k in c..=n {
            m[c][k] = &m[c][k] / &piv;
        }
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for k in c..=n {
                    let t = &f * &m[c][k];
                    m[r][k] -= t;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

/// Rank of a matrix over the prime field `F_p` (entries already reduced).
pub fn rank_mod_p(rows: &[Vec<i64>], p: i64) -> usize {
    let mut m: Vec<Vec<i64>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.rem_euclid(p)).collect())
        .collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = modinv(&BigInt::from(m[rank][c]), &BigInt::from(p))
            .unwrap()
            .to_i64()
            .unwrap();
        for k in 0..cols {
            m[rank][k] = (m[rank][k] * inv).rem_euclid(p);
        }
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let f = m[r][c];
                for k in 0..cols {
                    m[r][k] = (m[r][k] - f * m[rank][k]).rem_euclid(p);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Nullspace basis of a rational matrix (rows x cols), as column vectors.
pub fn rat_nullspace(a: &[Vec<BigRational>], cols: usize) -> Vec<Vec<BigRational>> {
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let piv = m[row][c].clone();
        for k in 0..cols {
            m[row][k] = &m[row][k] / &piv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for k in 0..cols {
                    let t = &f * &m[row][k];
                    m[r][k] -= t;
                }
            }
        }
        pivots.push(c);
        row += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[i][f].clone();
            }
            v
        })
        .collect()
}

/// Integer coefficients `λ` with `Σ λ_i gens[i] = target`, if the target
/// lies in the Z-span of the generators.
pub fn int_express(gens: &[Vec<BigInt>], target: &[BigInt]) -> Option<Vec<BigInt>> {
    let cols = target.len();
    let m = gens.len();
    let aug: Vec<Vec<BigInt>> = gens
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut r = g.clone();
            r.extend((0..m).map(|j| {
                if i == j {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            }));
            r
        })
        .collect();
    let h = hnf_rows(&aug, cols);
    let mut rest = target.to_vec();
    let mut coef = vec![BigInt::zero(); m];
    for row in &h {
        let Some(pc) = (0..cols).find(|&c| !row[c].is_zero()) else {
            continue;
        };
        let (q, r) = rest[pc].div_rem(&row[pc]);
        if !r.is_zero() {
            return None;
        }
        for c in 0..cols {
            rest[c] -= &q * &row[c];
        }
        for j in 0..m {
            coef[j] += &q * &row[cols + j];
        }
    }
    rest.iter().all(|x| x.is_zero()).then_some(coef)
}

/// Smith normal form of a nonsingular square integer matrix `a`.
/// Returns the diagonal `d` (each entry dividing the next) and a unimodular
/// `v` with `u a v = diag(d)` for some unimodular `u`.
pub fn smith_diagonal(a: &[Vec<BigInt>]) -> (Vec<BigInt>, Vec<Vec<BigInt>>) {
    let n = a.len();
    let mut m = a.to_vec();
    let mut v: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                })
                .collect()
        })
        .collect();
    for t in 0..n {
        loop {
            // Move the smallest nonzero entry of the remaining block to (t, t).
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if !m[i][j].is_zero()
                        && best.is_none_or(|(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return (m.iter().enumerate().map(|(i, r)| r[i].clone()).collect(), v);
            };
            m.swap(t, bi);
            for row in m.iter_mut() {
                row.swap(t, bj);
            }
            for row in v.iter_mut() {
                row.swap(t, bj);
            }
            let piv = m[t][t].clone();
            let mut clean = true;
            for i in t + 1..n {
                let q = m[i][t].div_floor(&piv);
                if !q.is_zero() {
                    let rt = m[t].clone();
                    for (x, y) in m[i].iter_mut().zip(&rt) {
                        *x -= &q * y;
                    }
                }
                clean &= m[i][t].is_zero();
            }
            for j in t + 1..n {
                let q = m[t][j].div_floor(&piv);
                if !q.is_zero() {
                    for row in m.iter_mut() {
                        let x = row[t].clone();
                        row[j] -= &q * x;
                    }
                    for row in v.iter_mut() {
                        let x = row[t].clone();
                        row[j] -= &q * x;
                    }
                }
                clean &= m[t][j].is_zero();
            }
            if !clean {
                continue;
            }
            // Enforce divisibility of the rest of the block by the pivot.
            let bad = (t + 1..n)
                .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !(&m[i][j] % &piv).is_zero());
            match bad {
                Some((i, _)) => {
                    let ri = m[i].clone();
                    for (x, y) in m[t].iter_mut().zip(&ri) {
                        *x += y;
                    }
                }
                None => break,
            }
        }
        if m[t][t].is_negative() {
            for x in m[t].iter_mut() {
                *x = -x.clone();
            }
        }
    }
    (m.iter().enumerate().map(|(i, r)| r[i].clone()).collect(), v)
}

/// Inverse of a unimodular integer matrix.
pub fn unimodular_inverse(v: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = v.len();
    let q: Vec<Vec<BigRational>> = v
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| BigRational::from_integer(x.clone()))
                .collect()
        })
        .collect();
    let cols: Vec<Vec<BigRational>> = (0..n)
        .map(|j| {
            let e: Vec<BigRational> = (0..n)
                .map(|i| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect();
            rat_solve(&q, &e).expect("unimodular matrix is invertible")
        })
        .collect();
    (0..n)
        .map(|i| (0..n).map(|j| cols[j][i].to_integer()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn factorization_roundtrip() {
        for n in 2..500u64 {
            let f = factorize(n);
            let prod: u64 = f.iter().map(|(p, e)| p.pow(*e)).product();
            assert_eq!(prod, n);
            assert!(f.iter().all(|(p, _)| is_prime(*p)));
        }
    }

    #[test]
    fn squarefree_parts() {
        assert_eq!(squarefree_part(&bi(-20)), (bi(-5), bi(2)));
        assert_eq!(squarefree_part(&bi(12)), (bi(3), bi(2)));
        assert_eq!(squarefree_part(&bi(-1)), (bi(-1), bi(1)));
    }

    #[test]
    fn kronecker_small() {
        assert_eq!(kronecker(&bi(-20), 3), 1);
        assert_eq!(kronecker(&bi(-20), 11), -1);
        assert_eq!(kronecker(&bi(-20), 2), 0);
        assert_eq!(kronecker(&bi(5), 2), -1);
        assert_eq!(kronecker(&bi(17), 2), 1);
    }

    #[test]
    fn hnf_basic() {
        let rows = vec![vec![bi(4), bi(6)], vec![bi(2), bi(2)]];
        let h = hnf_rows(&rows, 2);
        assert_eq!(h, vec![vec![bi(2), bi(0)], vec![bi(0), bi(2)]]);
    }

    #[test]
    fn express_combination() {
        let gens = vec![vec![bi(6), bi(0)], vec![bi(10), bi(0)], vec![bi(0), bi(3)]];
        let c = int_express(&gens, &[bi(2), bi(9)]).unwrap();
        let x: BigInt = c[0].clone() * 6 + c[1].clone() * 10;
        assert_eq!(x, bi(2));
        assert_eq!(c[2], bi(3));
        assert!(int_express(&gens, &[bi(1), bi(0)]).is_none());
    }

    #[test]
    fn smith_form() {
        let a = vec![vec![bi(2), bi(4)], vec![bi(6), bi(8)]];
        let (d, v) = smith_diagonal(&a);
        assert_eq!(d, vec![bi(2), bi(4)]);
        let vi = unimodular_inverse(&v);
        assert_eq!(
            rat_det(
                vi.iter()
                    .map(|r| r
                        .iter()
                        .map(|x| BigRational::from_integer(x.clone()))
                        .collect())
                    .collect()
            )
            .abs(),
            BigRational::one()
        );
    }
}

//! Exact dense linear algebra over [`Rational`] for the small matrices
//! (dimension ≤ ~20) that occur here. Matrices are row-major `Vec<QVec>`.

use num_traits::{One, Zero};

use crate::rational::{zeros, QVec, Rational};

pub type QMat = Vec<QVec>;

pub fn identity(n: usize) -> QMat {
    (0..n)
        .map(|i| {
            let mut r = zeros(n);
            r[i] = Rational::one();
            r
        })
        .collect()
}

pub fn dot(u: &[Rational], v: &[Rational]) -> Rational {
    u.iter().zip(v).fold(Rational::zero(), |acc, (a, b)| {
        if a.is_zero() || b.is_zero() {
            acc
        } else {
            acc + a * b
        }
    })
}

pub fn add(u: &[Rational], v: &[Rational]) -> QVec {
    u.iter().zip(v).map(|(a, b)| a + b).collect()
}

pub fn sub(u: &[Rational], v: &[Rational]) -> QVec {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

pub fn scale(u: &[Rational], c: &Rational) -> QVec {
    u.iter().map(|a| a * c).collect()
}

/// `u + c v`
pub fn axpy(u: &[Rational], c: &Rational, v: &[Rational]) -> QVec {
    u.iter().zip(v).map(|(a, b)| a + c * b).collect()
}

pub fn transpose(m: &[QVec]) -> QMat {
    if m.is_empty() {
        return Vec::new();
    }
    let cols = m[0].len();
    (0..cols).map(|j| m.iter().map(|r| r[j]).collect()).collect()
}

pub fn mat_vec(m: &[QVec], v: &[Rational]) -> QVec {
    m.iter().map(|r| dot(r, v)).collect()
}

/// Row vector times matrix: `Σ_i v_i m[i]`.
pub fn vec_mat(v: &[Rational], m: &[QVec], cols: usize) -> QVec {
    let mut out = zeros(cols);
    for (c, row) in v.iter().zip(m) {
        if c.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(row) {
            if !x.is_zero() {
                *o += c * x;
            }
        }
    }
    out
}

pub fn mat_mul(a: &[QVec], b: &[QVec]) -> QMat {
    let cols = b.first().map_or(0, Vec::len);
    a.iter().map(|row| vec_mat(row, b, cols)).collect()
}

/// Reduced row echelon form. Returns the nonzero rows and their pivot columns.
pub fn rref(rows: &[QVec]) -> (QMat, Vec<usize>) {
    let mut m: QMat = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c];
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    if !p.is_zero() {
                        *x -= f * p;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

pub fn rank(rows: &[QVec]) -> usize {
    rref(rows).1.len()
}

/// Canonical basis (RREF rows) of the span of `vectors`.
pub fn span_basis(vectors: &[QVec]) -> QMat {
    rref(vectors).0
}

/// Indices of a greedy maximal independent subset, in input order.
pub fn independent_subset(vectors: &[QVec]) -> Vec<usize> {
    let mut chosen: QMat = Vec::new();
    let mut idx = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let mut trial = chosen.clone();
        trial.push(v.clone());
        if rank(&trial) > chosen.len() {
            chosen.push(v.clone());
            idx.push(i);
        }
    }
    idx
}

/// Basis of `{x : m x = 0}` for an `r × c` matrix.
pub fn nullspace(m: &[QVec], cols: usize) -> QMat {
    let (r, pivots) = rref(m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = zeros(cols);
            x[f] = Rational::one();
            for (row, &p) in r.iter().zip(&pivots) {
                x[p] = -row[f];
            }
            x
        })
        .collect()
}

/// A solution of `m x = b` (free variables set to zero), if one exists.
pub fn solve(m: &[QVec], b: &[Rational], cols: usize) -> Option<QVec> {
    let aug: QMat = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(*bi);
            r
        })
        .collect();
    let (r, pivots) = rref(&aug);
    if pivots.contains(&cols) {
        return None;
    }
    let mut x = zeros(cols);
    for (row, &p) in r.iter().zip(&pivots) {
        x[p] = row[cols];
    }
    Some(x)
}

/// Coordinates of `v` in the given (independent) family, if `v` lies in its span.
pub fn coordinates_in(family: &[QVec], v: &[Rational]) -> Option<QVec> {
    let m = transpose(family);
    if family.is_empty() {
        return v.iter().all(Zero::is_zero).then(Vec::new);
    }
    solve(&m, v, family.len())
}

pub fn in_span(family: &[QVec], v: &[Rational]) -> bool {
    coordinates_in(family, v).is_some()
}

pub fn inverse(m: &[QVec]) -> Option<QMat> {
    let n = m.len();
    let aug: QMat = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    let (r, pivots) = rref(&aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(r.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// If `b` is not in the column space of `m`, returns `y` with `yᵀ m = 0` and
/// `yᵀ b ≠ 0`, an exact certificate of non-membership.
pub fn separating_functional(m: &[QVec], b: &[Rational]) -> Option<QVec> {
    let rows = m.len();
    let mt = transpose(m);
    let left_null = if mt.is_empty() {
        crate::linalg::identity(rows)
    } else {
        nullspace(&mt, rows)
    };
    left_null.into_iter().find(|y| !dot(y, b).is_zero())
}

/// All integer solutions of `m x = b` with `x_i ∈ ranges[i]` (inclusive),
/// in lexicographic order of the free variables.
pub fn integer_solutions_in_box(m: &[QVec], b: &[Rational], ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let cols = ranges.len();
    let aug: QMat = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(*bi);
            r
        })
        .collect();
    let (r, pivots) = rref(&aug);
    if pivots.contains(&cols) {
        return Vec::new();
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut out = Vec::new();
    let mut x = vec![0i64; cols];
    fn rec(
        k: usize,
        free: &[usize],
        ranges: &[(i64, i64)],
        r: &QMat,
        pivots: &[usize],
        cols: usize,
        x: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        if k == free.len() {
            for (row, &p) in r.iter().zip(pivots) {
                let mut v = row[cols];
                for &f in free {
                    if !row[f].is_zero() {
                        v -= row[f] * Rational::from_integer(x[f] as i128);
                    }
                }
                if !v.is_integer() {
                    return;
                }
                let vi = *v.numer() as i64;
                if vi < ranges[p].0 || vi > ranges[p].1 {
                    return;
                }
                x[p] = vi;
            }
            out.push(x.clone());
            return;
        }
        let f = free[k];
        for v in ranges[f].0..=ranges[f].1 {
            x[f] = v;
            rec(k + 1, free, ranges, r, pivots, cols, x, out);
        }
    }
    rec(0, &free, ranges, &r, &pivots, cols, &mut x, &mut out);
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use proptest::prelude::*;

    fn m(rows: &[&[i128]]) -> QMat {
        rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()
    }

    #[test]
    fn rank_and_nullspace_of_singular_matrix() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(rank(&a), 2);
        let ns = nullspace(&a, 3);
        assert_eq!(ns.len(), 1);
        assert!(mat_vec(&a, &ns[0]).iter().all(Zero::is_zero));
    }

    #[test]
    fn solve_detects_inconsistency() {
        let a = m(&[&[1, 1], &[2, 2]]);
        assert!(solve(&a, &[qi(1), qi(3)], 2).is_none());
        let x = solve(&a, &[qi(1), qi(2)], 2).unwrap();
        assert_eq!(mat_vec(&a, &x), vec![qi(1), qi(2)]);
    }

    #[test]
    fn inverse_of_triangular() {
        let a = vec![vec![qi(2), q(1, 2)], vec![qi(0), qi(4)]];
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), identity(2));
        assert!(inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn separating_functional_certifies_non_membership() {
        let a = m(&[&[1, 0], &[0, 0], &[0, 1]]);
        let b = vec![qi(0), qi(1), qi(0)];
        let y = separating_functional(&a, &b).unwrap();
        assert!(vec_mat(&y, &a, 2).iter().all(Zero::is_zero));
        assert!(!dot(&y, &b).is_zero());
        assert!(separating_functional(&a, &[qi(3), qi(0), qi(1)]).is_none());
    }

    fn small_matrix() -> impl Strategy<Value = QMat> {
        proptest::collection::vec(proptest::collection::vec(-4i128..5, 4), 4)
            .prop_map(|rows| rows.into_iter().map(|r| r.into_iter().map(qi).collect()).collect())
    }

    proptest! {
        #[test]
        fn rank_nullity(a in small_matrix()) {
            prop_assert_eq!(rank(&a) + nullspace(&a, 4).len(), 4);
        }

        #[test]
        fn inverse_round_trip(a in small_matrix()) {
            if let Some(inv) = inverse(&a) {
                prop_assert_eq!(mat_mul(&inv, &a), identity(4));
            } else {
                prop_assert!(rank(&a) < 4);
            }
        }
    }
}

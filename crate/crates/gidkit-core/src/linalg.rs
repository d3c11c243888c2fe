//! Exact linear algebra over the rationals.
//!
//! The counterexample construction needs two small primitives, both exact:
//! an incrementally built row space to test whether a new evaluation vector
//! is linearly dependent on the ones already collected, and a solver for a
//! vector orthogonal to that span with a prescribed inner product against
//! one more row. Everything runs on arbitrary-precision integers and
//! rationals; the dimensions involved are tiny, so simplicity beats
//! cleverness here.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Rat;

/// Inner product of two equal-length rational vectors.
///
/// # Panics
/// Panics if the lengths differ.
pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    let mut acc = Rat::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Clear denominators and common factors: the unique primitive integer
/// vector that is a positive rational multiple of `v` (zero stays zero).
fn to_primitive_integer(v: &[Rat]) -> Vec<BigInt> {
    let mut scale = BigInt::one();
    for x in v {
        scale = scale.lcm(x.denom());
    }
    let mut out: Vec<BigInt> = v
        .iter()
        .map(|x| x.numer() * (&scale / x.denom()))
        .collect();
    let mut g = BigInt::zero();
    for x in &out {
        g = g.gcd(x);
    }
    if !g.is_zero() {
        for x in out.iter_mut() {
            *x = &*x / &g;
        }
    }
    if let Some(first) = out.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in out.iter_mut() {
                *x = -&*x;
            }
        }
    }
    out
}

fn pivot_of(v: &[BigInt]) -> Option<usize> {
    v.iter().position(|x| !x.is_zero())
}

/// A row space in echelon form, built incrementally from rational rows.
///
/// Rows are stored as primitive integer vectors with strictly increasing
/// pivot columns, so membership and rank queries are exact and cheap at the
/// dimensions this crate works with.
#[derive(Clone, Debug)]
pub struct RowSpace {
    cols: usize,
    rows: Vec<Vec<BigInt>>,
}

impl RowSpace {
    /// An empty row space of vectors with `cols` entries.
    pub fn new(cols: usize) -> Self {
        RowSpace { cols, rows: Vec::new() }
    }

    /// Number of columns (vector length).
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Dimension of the span so far.
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// The echelon basis rows, pivot order, as primitive integer vectors.
    pub fn rows(&self) -> impl Iterator<Item = &[BigInt]> + '_ {
        self.rows.iter().map(|r| r.as_slice())
    }

    /// Eliminate `v` against every stored row by cross-multiplication.
    /// Afterwards `v` is zero at every pivot column, and is the zero vector
    /// exactly when the original lay in the span.
    fn reduce(&self, v: &mut [BigInt]) {
        for row in &self.rows {
            let p = pivot_of(row).expect("stored rows are nonzero");
            if v[p].is_zero() {
                continue;
            }
            let (a, b) = (row[p].clone(), v[p].clone());
            for (x, r) in v.iter_mut().zip(row) {
                *x = &*x * &a - r * &b;
            }
        }
    }

    /// Add a rational vector to the space. Returns `true` when the rank
    /// grew, `false` when the vector was already in the span.
    ///
    /// # Panics
    /// Panics if `v.len() != self.cols()`.
    pub fn insert(&mut self, v: &[Rat]) -> bool {
        assert_eq!(v.len(), self.cols, "insert: length mismatch");
        let mut w = to_primitive_integer(v);
        self.reduce(&mut w);
        let Some(p) = pivot_of(&w) else {
            return false;
        };
        let mut g = BigInt::zero();
        for x in &w {
            g = g.gcd(x);
        }
        for x in w.iter_mut() {
            *x = &*x / &g;
        }
        if w[p].is_negative() {
            for x in w.iter_mut() {
                *x = -&*x;
            }
        }
        let at = self
            .rows
            .iter()
            .position(|r| pivot_of(r).expect("stored rows are nonzero") > p)
            .unwrap_or(self.rows.len());
        self.rows.insert(at, w);
        true
    }

    /// Does `v` lie in the current span?
    ///
    /// # Panics
    /// Panics if `v.len() != self.cols()`.
    pub fn contains(&self, v: &[Rat]) -> bool {
        assert_eq!(v.len(), self.cols, "contains: length mismatch");
        let mut w = to_primitive_integer(v);
        self.reduce(&mut w);
        pivot_of(&w).is_none()
    }
}

/// Find `β` with `β · r = 0` for every row `r` of `space` and
/// `β · target = 1`, or `None` when no such vector exists — which happens
/// exactly when `target` lies in the span of `space`.
///
/// Among the solutions, the one with all free variables set to zero is
/// returned, so the output is deterministic.
///
/// # Panics
/// Panics if `target.len() != space.cols()`.
pub fn solve_orthogonal(space: &RowSpace, target: &[Rat]) -> Option<Vec<Rat>> {
    let d = space.cols();
    assert_eq!(target.len(), d, "solve_orthogonal: length mismatch");
    // Stack the constraints [r · β = 0; target · β = 1] and run
    // Gauss-Jordan on the augmented system.
    let mut lhs: Vec<Vec<Rat>> = space
        .rows()
        .map(|r| r.iter().map(|x| Rat::from_integer(x.clone())).collect())
        .collect();
    let mut rhs: Vec<Rat> = vec![Rat::zero(); lhs.len()];
    lhs.push(target.to_vec());
    rhs.push(Rat::one());

    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut next_row = 0;
    for col in 0..d {
        let Some(pr) = (next_row..lhs.len()).find(|&r| !lhs[r][col].is_zero()) else {
            continue;
        };
        lhs.swap(next_row, pr);
        rhs.swap(next_row, pr);
        let scale = lhs[next_row][col].clone();
        for x in lhs[next_row].iter_mut() {
            *x = &*x / &scale;
        }
        let scaled = &rhs[next_row] / &scale;
        rhs[next_row] = scaled;
        for r in 0..lhs.len() {
            if r == next_row || lhs[r][col].is_zero() {
                continue;
            }
            let factor = lhs[r][col].clone();
            for c in 0..d {
                let delta = &lhs[next_row][c] * &factor;
                lhs[r][c] -= delta;
            }
            let delta = &rhs[next_row] * &factor;
            rhs[r] -= delta;
        }
        pivots.push((next_row, col));
        next_row += 1;
        if next_row == lhs.len() {
            break;
        }
    }
    for (r, b) in rhs.iter().enumerate() {
        if lhs[r].iter().all(Zero::is_zero) && !b.is_zero() {
            return None;
        }
    }
    let mut beta = vec![Rat::zero(); d];
    for (r, c) in pivots {
        beta[c] = rhs[r].clone();
    }
    Some(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn rv(xs: &[(i64, i64)]) -> Vec<Rat> {
        xs.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    fn iv(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&n| rat(n, 1)).collect()
    }

    #[test]
    fn insert_tracks_rank() {
        let mut s = RowSpace::new(2);
        assert!(s.insert(&iv(&[1, 2])));
        assert!(!s.insert(&iv(&[2, 4])));
        assert_eq!(s.rank(), 1);
        assert!(s.insert(&iv(&[0, 1])));
        assert_eq!(s.rank(), 2);
        assert!(!s.insert(&iv(&[7, -3])));
    }

    #[test]
    fn membership_in_a_plane() {
        let mut s = RowSpace::new(3);
        s.insert(&iv(&[1, 0, 1]));
        s.insert(&iv(&[0, 1, 1]));
        assert!(s.contains(&iv(&[2, -2, 0])));
        assert!(s.contains(&iv(&[0, 0, 0])));
        assert!(!s.contains(&iv(&[1, 1, 1])));
    }

    #[test]
    fn rational_rows_are_cleared_to_integers() {
        let mut s = RowSpace::new(2);
        assert!(s.insert(&rv(&[(1, 2), (1, 3)])));
        assert!(s.contains(&iv(&[3, 2])));
        assert!(!s.insert(&iv(&[3, 2])));
        assert_eq!(s.rank(), 1);
        assert_eq!(s.rows().next().unwrap(), &[3.into(), 2.into()]);
    }

    #[test]
    fn solve_simple_system() {
        let mut s = RowSpace::new(3);
        s.insert(&iv(&[1, 1, 0]));
        s.insert(&iv(&[0, 0, 1]));
        let beta = solve_orthogonal(&s, &iv(&[1, 0, 0])).unwrap();
        assert_eq!(beta, iv(&[1, -1, 0]));
    }

    #[test]
    fn solve_leaves_free_variables_at_zero() {
        let mut s = RowSpace::new(3);
        s.insert(&iv(&[1, 0, 0]));
        let beta = solve_orthogonal(&s, &iv(&[0, 1, 1])).unwrap();
        assert_eq!(beta, iv(&[0, 1, 0]));
        assert_eq!(dot(&beta, &iv(&[0, 1, 1])), rat(1, 1));
    }

    #[test]
    fn dependent_target_has_no_solution() {
        let mut s = RowSpace::new(2);
        s.insert(&iv(&[1, 0]));
        s.insert(&iv(&[0, 1]));
        assert!(solve_orthogonal(&s, &iv(&[1, 1])).is_none());

        let mut s = RowSpace::new(2);
        s.insert(&iv(&[1, 2]));
        assert!(solve_orthogonal(&s, &iv(&[2, 4])).is_none());
        assert!(solve_orthogonal(&s, &iv(&[0, 0])).is_none());
    }

    #[test]
    fn solution_is_orthogonal_to_the_whole_span() {
        let mut s = RowSpace::new(4);
        let rows = [iv(&[1, 2, 3, 4]), iv(&[0, 1, 1, 0]), iv(&[5, 0, 0, 2])];
        for r in &rows {
            s.insert(r);
        }
        let target = rv(&[(1, 3), (0, 1), (7, 2), (1, 1)]);
        let beta = solve_orthogonal(&s, &target).unwrap();
        for r in &rows {
            assert_eq!(dot(&beta, r), rat(0, 1));
        }
        assert_eq!(dot(&beta, &target), rat(1, 1));
    }
}

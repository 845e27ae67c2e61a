//! Maximum-weight bipartite matching on dense nonnegative matrices.
//!
//! [`km_max_matching`] runs the Kuhn-Munkres (Hungarian) algorithm on the
//! matrix zero-padded to square, then walks the equality subgraph of the
//! optimal dual to pick the lexicographically smallest optimal pair list.
//! [`brute_force_matching`] enumerates every injection and serves as the
//! test oracle.

use thiserror::Error;

use crate::model::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssignmentError {
    #[error("entry ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("brute force limited to min(n, m) <= 8, got {size}")]
    TooLarge { size: usize },
}

/// A set of (row, column) pairs, sorted by row, and the sum of their entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub value: f64,
}

impl Matching {
    fn from_pairs(w: &Matrix, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        let value = pairs.iter().map(|&(i, j)| w.get(i, j)).sum();
        Self { pairs, value }
    }
}

fn check(w: &Matrix) -> Result<(), AssignmentError> {
    for row in 0..w.rows() {
        for col in 0..w.cols() {
            let value = w.get(row, col);
            if !value.is_finite() {
                return Err(AssignmentError::NonFiniteEntry { row, col });
            }
            if value < 0.0 {
                return Err(AssignmentError::NegativeEntry { row, col, value });
            }
        }
    }
    Ok(())
}

struct Solution {
    /// `row_to_col[i]` for the padded square problem.
    row_to_col: Vec<usize>,
    /// Dual potentials for rows and columns of the cost matrix `-w`.
    u: Vec<f64>,
    v: Vec<f64>,
}

/// Hungarian algorithm minimizing `-w` over the zero-padded `size x size` square.
fn hungarian(w: &Matrix, size: usize) -> Solution {
    let cost = |i: usize, j: usize| -> f64 {
        if i < w.rows() && j < w.cols() {
            -w.get(i, j)
        } else {
            0.0
        }
    };
    let n = size;
    // 1-based arrays; index 0 is the virtual root column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    Solution {
        row_to_col,
        u: u[1..].to_vec(),
        v: v[1..].to_vec(),
    }
}

/// Optimal value only; skips the tie-break pass.
pub fn km_max_value(w: &Matrix) -> Result<f64, AssignmentError> {
    check(w)?;
    if w.is_empty() {
        return Ok(0.0);
    }
    let size = w.rows().max(w.cols());
    let sol = hungarian(w, size);
    Ok(sol
        .row_to_col
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < w.rows() && j < w.cols())
        .map(|(i, &j)| w.get(i, j))
        .sum())
}

/// Maximum-weight matching with deterministic, lexicographically smallest
/// pairs among optimal matchings. Reports `min(n, m)` pairs.
pub fn km_max_matching(w: &Matrix) -> Result<Matching, AssignmentError> {
    check(w)?;
    if w.is_empty() {
        return Ok(Matching {
            pairs: Vec::new(),
            value: 0.0,
        });
    }
    let (n, m) = (w.rows(), w.cols());
    let size = n.max(m);
    let sol = hungarian(w, size);
    let scale = w.as_slice().iter().fold(1.0f64, |a, &b| a.max(b));
    let eps = 1e-11 * scale;
    let entry = |i: usize, j: usize| if i < n && j < m { w.get(i, j) } else { 0.0 };
    // Equality subgraph of the optimal dual: u_i + v_j == -w_ij.
    let tight = |i: usize, j: usize| (-entry(i, j) - sol.u[i] - sol.v[j]).abs() <= eps;

    let mut row_to_col = sol.row_to_col.clone();
    let mut col_to_row = vec![0; size];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut row_fixed = vec![false; size];
    let mut col_fixed = vec![false; size];

    for r in 0..n {
        for c in 0..size {
            if col_fixed[c] || !tight(r, c) {
                continue;
            }
            if row_to_col[r] == c {
                row_fixed[r] = true;
                col_fixed[c] = true;
                break;
            }
            // Reroute: r takes c, c's partner must reach r's old column.
            let displaced = col_to_row[c];
            let freed = row_to_col[r];
            row_fixed[r] = true;
            col_fixed[c] = true;
            let mut trial_r2c = row_to_col.clone();
            let mut trial_c2r = col_to_row.clone();
            trial_r2c[r] = c;
            trial_c2r[c] = r;
            // Temporarily mark the freed column as unmatched.
            trial_c2r[freed] = usize::MAX;
            let mut visited = vec![false; size];
            if augment(
                displaced,
                &tight,
                &col_fixed,
                &mut visited,
                &mut trial_r2c,
                &mut trial_c2r,
            ) {
                row_to_col = trial_r2c;
                col_to_row = trial_c2r;
                break;
            }
            row_fixed[r] = false;
            col_fixed[c] = false;
        }
        debug_assert!(row_fixed[r], "row {r} found no tight column");
    }

    let pairs = row_to_col
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < n && j < m)
        .map(|(i, &j)| (i, j))
        .collect();
    Ok(Matching::from_pairs(w, pairs))
}

/// Kuhn-style augmenting search over tight edges, avoiding fixed columns.
fn augment(
    row: usize,
    tight: &impl Fn(usize, usize) -> bool,
    col_fixed: &[bool],
    visited: &mut [bool],
    r2c: &mut [usize],
    c2r: &mut [usize],
) -> bool {
    for c in 0..c2r.len() {
        if col_fixed[c] || visited[c] || !tight(row, c) {
            continue;
        }
        visited[c] = true;
        let partner = c2r[c];
        if partner == usize::MAX || augment(partner, tight, col_fixed, visited, r2c, c2r) {
            r2c[row] = c;
            c2r[c] = row;
            return true;
        }
    }
    false
}

/// Exhaustive enumeration of all matchings of size `min(n, m)`.
///
/// Ties resolve to the lexicographically smallest pair list, matching
/// [`km_max_matching`] on exact ties.
pub fn brute_force_matching(w: &Matrix) -> Result<Matching, AssignmentError> {
    check(w)?;
    let (n, m) = (w.rows(), w.cols());
    let size = n.min(m);
    if size > 8 {
        return Err(AssignmentError::TooLarge { size });
    }
    struct Search<'a> {
        w: &'a Matrix,
        need: usize,
        used: Vec<bool>,
        current: Vec<(usize, usize)>,
        best: Option<(f64, Vec<(usize, usize)>)>,
    }
    impl Search<'_> {
        fn run(&mut self, row: usize, acc: f64) {
            if self.current.len() == self.need {
                if self.best.as_ref().is_none_or(|(v, _)| acc > *v) {
                    self.best = Some((acc, self.current.clone()));
                }
                return;
            }
            let remaining_rows = self.w.rows() - row;
            if remaining_rows < self.need - self.current.len() {
                return;
            }
            for c in 0..self.w.cols() {
                if self.used[c] {
                    continue;
                }
                self.used[c] = true;
                self.current.push((row, c));
                self.run(row + 1, acc + self.w.get(row, c));
                self.current.pop();
                self.used[c] = false;
            }
            self.run(row + 1, acc);
        }
    }
    let mut search = Search {
        w,
        need: size,
        used: vec![false; m],
        current: Vec::new(),
        best: None,
    };
    search.run(0, 0.0);
    let pairs = search.best.map(|(_, p)| p).unwrap_or_default();
    Ok(Matching::from_pairs(w, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Matrix {
        Matrix::from_fn(n, m, |_, _| rng.random::<f64>())
    }

    #[test]
    fn identity() {
        let w = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]);
        let got = km_max_matching(&w).unwrap();
        assert_eq!(got.value, 2.0);
        assert_eq!(got.pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn two_by_two_beats_greedy_swap() {
        // brute force: diagonal 0.9 + 0.7 = 1.6, anti-diagonal 0.1 + 0.8 = 0.9
        let w = Matrix::from_rows(&[[0.9, 0.1], [0.8, 0.7]]);
        let got = km_max_matching(&w).unwrap();
        assert!((got.value - 1.6).abs() < 1e-12);
        assert_eq!(got.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(brute_force_matching(&w).unwrap().pairs, got.pairs);
    }

    #[test]
    fn tall_rectangular() {
        // six injections of two columns into three rows; best is 0.5 + 0.9
        let w = Matrix::from_rows(&[[0.5, 0.2], [0.4, 0.9], [0.3, 0.1]]);
        let got = km_max_matching(&w).unwrap();
        assert!((got.value - 1.4).abs() < 1e-12);
        assert_eq!(got.pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn wide_rectangular_matches_every_row() {
        let w = Matrix::from_rows(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let got = km_max_matching(&w).unwrap();
        assert_eq!(got.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(got.value, 0.0);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let w = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        assert_eq!(km_max_matching(&w).unwrap().pairs, vec![(0, 0), (1, 1)]);
        // row 0 can only sit out if something better exists elsewhere
        let w = Matrix::from_rows(&[[0.5], [0.5], [0.5]]);
        assert_eq!(km_max_matching(&w).unwrap().pairs, vec![(0, 0)]);
        let w = Matrix::from_rows(&[[0.2], [0.5], [0.5]]);
        assert_eq!(km_max_matching(&w).unwrap().pairs, vec![(1, 0)]);
        // forced reroute: the Hungarian pass may prefer (0,1),(1,0)
        let w = Matrix::from_rows(&[[0.3, 0.3, 0.0], [0.3, 0.3, 0.0], [0.0, 0.0, 0.3]]);
        assert_eq!(km_max_matching(&w).unwrap().pairs, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn empty_and_single() {
        let empty = Matrix::zeros(0, 4);
        assert_eq!(km_max_matching(&empty).unwrap().pairs, vec![]);
        assert_eq!(brute_force_matching(&empty).unwrap().value, 0.0);
        let one = Matrix::from_rows(&[[0.37]]);
        assert_eq!(brute_force_matching(&one).unwrap().value, 0.37);
        assert_eq!(km_max_matching(&one).unwrap().value, 0.37);
    }

    #[test]
    fn rejects_bad_entries() {
        let w = Matrix::from_rows(&[[0.1, -0.5]]);
        assert!(matches!(
            km_max_matching(&w),
            Err(AssignmentError::NegativeEntry { row: 0, col: 1, .. })
        ));
        let w = Matrix::from_rows(&[[f64::NAN]]);
        assert!(matches!(
            km_max_value(&w),
            Err(AssignmentError::NonFiniteEntry { row: 0, col: 0 })
        ));
        assert!(matches!(
            brute_force_matching(&Matrix::zeros(9, 9)),
            Err(AssignmentError::TooLarge { size: 9 })
        ));
    }

    #[test]
    fn random_two_by_three_agrees_with_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = random(&mut rng, 2, 3);
        let km = km_max_matching(&w).unwrap();
        let bf = brute_force_matching(&w).unwrap();
        assert!((km.value - bf.value).abs() < 1e-12);
        assert_eq!(km.pairs, bf.pairs);
    }

    #[test]
    fn oracle_equivalence_on_seeded_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..300 {
            let n = rng.random_range(0..=7);
            let m = rng.random_range(0..=7);
            let w = random(&mut rng, n, m);
            let km = km_max_matching(&w).unwrap();
            let bf = brute_force_matching(&w).unwrap();
            assert!((km.value - bf.value).abs() < 1e-9, "{w:?}");
            assert!((km_max_value(&w).unwrap() - bf.value).abs() < 1e-9);
            assert_eq!(km.pairs.len(), n.min(m));
        }
    }

    fn matrix_strategy() -> impl Strategy<Value = Matrix> {
        (0usize..6, 0usize..6).prop_flat_map(|(n, m)| {
            proptest::collection::vec(0.0f64..1.0, n * m)
                .prop_map(move |data| Matrix::new(n, m, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn transpose_symmetry(w in matrix_strategy()) {
            let a = km_max_matching(&w).unwrap().value;
            let b = km_max_matching(&w.transpose()).unwrap().value;
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn matching_is_injective(w in matrix_strategy()) {
            let got = km_max_matching(&w).unwrap();
            let mut rows: Vec<_> = got.pairs.iter().map(|p| p.0).collect();
            let mut cols: Vec<_> = got.pairs.iter().map(|p| p.1).collect();
            rows.dedup();
            cols.sort_unstable();
            cols.dedup();
            prop_assert_eq!(rows.len(), got.pairs.len());
            prop_assert_eq!(cols.len(), got.pairs.len());
            prop_assert_eq!(got.pairs.len(), w.rows().min(w.cols()));
        }

        #[test]
        fn monotone_in_each_entry(w in matrix_strategy(), bump in 0.0f64..2.0, pick in any::<prop::sample::Index>()) {
            prop_assume!(!w.is_empty());
            let idx = pick.index(w.rows() * w.cols());
            let mut raised = w.clone();
            let (i, j) = (idx / w.cols(), idx % w.cols());
            raised.set(i, j, w.get(i, j) + bump);
            let before = km_max_value(&w).unwrap();
            let after = km_max_value(&raised).unwrap();
            prop_assert!(after >= before - 1e-12);
        }

        #[test]
        fn permutation_invariance(w in matrix_strategy(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rp: Vec<usize> = (0..w.rows()).collect();
            let mut cp: Vec<usize> = (0..w.cols()).collect();
            rp.shuffle(&mut rng);
            cp.shuffle(&mut rng);
            let permuted = Matrix::from_fn(w.rows(), w.cols(), |i, j| w.get(rp[i], cp[j]));
            let a = km_max_value(&w).unwrap();
            let b = km_max_value(&permuted).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn scaling(w in matrix_strategy(), c in 0.01f64..100.0) {
            let scaled = Matrix::from_fn(w.rows(), w.cols(), |i, j| c * w.get(i, j));
            let a = km_max_value(&w).unwrap();
            let b = km_max_value(&scaled).unwrap();
            prop_assert!((c * a - b).abs() < 1e-9 * (1.0 + c));
        }
    }
}

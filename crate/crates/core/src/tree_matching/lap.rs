//! Maximum-weight assignment (Hungarian method with potentials).

use std::ops::{Add, Sub};

/// Score types accepted by [`lap_max`]. Integer scores are solved exactly.
pub trait LapScore: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> {
    fn zero() -> Self;
    fn unbounded() -> Self;
}

impl LapScore for i64 {
    fn zero() -> Self {
        0
    }
    fn unbounded() -> Self {
        i64::MAX / 4
    }
}

impl LapScore for f64 {
    fn zero() -> Self {
        0.0
    }
    fn unbounded() -> Self {
        f64::INFINITY
    }
}

/// Maximum-score partial matching of a rectangular non-negative matrix.
///
/// Returns `assignment[row] = Some(col)` and the optimal total. With
/// non-negative scores an optimum saturating the smaller side exists; rows
/// left over on a tall matrix get `None`.
pub fn lap_max<T: LapScore>(score: &[Vec<T>]) -> (Vec<Option<usize>>, T) {
    let rows = score.len();
    let cols = score.first().map_or(0, Vec::len);
    assert!(score.iter().all(|r| r.len() == cols), "ragged score matrix");
    if rows == 0 || cols == 0 {
        return (vec![None; rows], T::zero());
    }
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let at = |i: usize, j: usize| if transpose { score[j][i] } else { score[i][j] };
    let mut top = T::zero();
    for i in 0..n {
        for j in 0..m {
            let v = at(i, j);
            assert!(v >= T::zero(), "lap_max needs non-negative scores");
            if v > top {
                top = v;
            }
        }
    }
    let col_of_row = hungarian_min(n, m, |i, j| top - at(i, j));
    let mut assignment = vec![None; rows];
    let mut value = T::zero();
    for (i, &j) in col_of_row.iter().enumerate() {
        value = value + at(i, j);
        if transpose {
            assignment[j] = Some(i);
        } else {
            assignment[i] = Some(j);
        }
    }
    (assignment, value)
}

/// Min-cost assignment of every row of an n×m cost matrix (n ≤ m).
pub(crate) fn hungarian_min<T: LapScore>(n: usize, m: usize, cost: impl Fn(usize, usize) -> T) -> Vec<usize> {
    debug_assert!(n <= m);
    let inf = T::unbounded();
    let zero = T::zero();
    let mut u = vec![zero; n + 1];
    let mut v = vec![zero; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![inf; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = inf);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
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
            for j in 0..=m {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
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
    let mut col_of_row = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            col_of_row[p[j] - 1] = j - 1;
        }
    }
    col_of_row
}

/// Optimal value for a small row-major `u32` matrix, with shortcuts for the
/// shapes that dominate the matching-weight recursion.
pub(crate) fn lap_value_u32(mat: &[u32], rows: usize, cols: usize) -> u32 {
    match (rows, cols) {
        (0, _) | (_, 0) => 0,
        (1, _) => mat.iter().copied().max().unwrap_or(0),
        (_, 1) => mat.iter().copied().max().unwrap_or(0),
        (2, 2) => (mat[0] + mat[3]).max(mat[1] + mat[2]),
        _ => {
            let live_rows: Vec<usize> = (0..rows).filter(|&i| mat[i * cols..(i + 1) * cols].iter().any(|&x| x > 0)).collect();
            let live_cols: Vec<usize> = (0..cols).filter(|&j| (0..rows).any(|i| mat[i * cols + j] > 0)).collect();
            let (r, c) = (live_rows.len(), live_cols.len());
            if r == 0 || c == 0 {
                return 0;
            }
            let at = |i: usize, j: usize| i64::from(mat[live_rows[i] * cols + live_cols[j]]);
            if r == 1 || c == 1 {
                let mut best = 0;
                for i in 0..r {
                    for j in 0..c {
                        best = best.max(at(i, j));
                    }
                }
                return best as u32;
            }
            let top = i64::from(*mat.iter().max().expect("non-empty"));
            let total: i64 = if r <= c {
                let a = hungarian_min(r, c, |i, j| top - at(i, j));
                a.iter().enumerate().map(|(i, &j)| at(i, j)).sum()
            } else {
                let a = hungarian_min(c, r, |j, i| top - at(i, j));
                a.iter().enumerate().map(|(j, &i)| at(i, j)).sum()
            };
            total as u32
        }
    }
}

//! Minimum-cost perfect matching on square cost matrices.

/// Returns `assignment[row] = column` minimising the summed cost.
///
/// Small problems (n <= 6) are enumerated exhaustively in lexicographic permutation
/// order so ties resolve to the first permutation found; larger ones use the
/// O(n^3) Hungarian method.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    debug_assert!(cost.iter().all(|row| row.len() == n));
    if n == 0 {
        return Vec::new();
    }
    if n <= 6 {
        exhaustive(cost)
    } else {
        hungarian(cost)
    }
}

pub fn assignment_cost(cost: &[Vec<f64>], assignment: &[usize]) -> f64 {
    assignment.iter().enumerate().map(|(r, &c)| cost[r][c]).sum()
}

fn exhaustive(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = assignment_cost(cost, &perm);
    while next_permutation(&mut perm) {
        let c = assignment_cost(cost, &perm);
        if c < best_cost {
            best_cost = c;
            best.copy_from_slice(&perm);
        }
    }
    best
}

/// Advances `perm` to the next lexicographic permutation; false after the last one.
pub(crate) fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    // Potentials formulation, 1-based with a virtual column 0.
    let n = cost.len();
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
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
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
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn permutation_walk_covers_all() {
        let mut perm = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut perm) {
            count += 1;
        }
        assert_eq!(count, 24);
    }

    #[test]
    fn dominant_diagonal() {
        let cost = vec![vec![1.0, 50.0], vec![50.0, 1.0]];
        assert_eq!(min_cost_assignment(&cost), vec![0, 1]);
    }

    proptest! {
        #[test]
        fn hungarian_matches_enumeration(n in 1usize..7, seed in proptest::collection::vec(0.0..100.0f64, 36)) {
            let cost: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| seed[r * 6 + c]).collect()).collect();
            let h = hungarian(&cost);
            let e = exhaustive(&cost);
            prop_assert!((assignment_cost(&cost, &h) - assignment_cost(&cost, &e)).abs() < 1e-9);
            let mut cols = h.clone();
            cols.sort();
            prop_assert_eq!(cols, (0..n).collect::<Vec<_>>());
        }
    }
}

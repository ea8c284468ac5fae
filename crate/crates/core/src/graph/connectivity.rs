use std::collections::VecDeque;

use super::SparseMatrix;

/// Whether the logical matrix is irreducible, i.e. its digraph is strongly
/// connected. A positive shift connects every pair of nodes.
pub fn is_strongly_connected(a: &SparseMatrix) -> bool {
    let n = a.n();
    if n == 0 {
        return false;
    }
    if a.shift() > 0.0 || n == 1 {
        return true;
    }
    let t = a.explicit_transpose();
    reaches_all(a, 0) && reaches_all(&t, 0)
}

fn reaches_all(a: &SparseMatrix, start: usize) -> bool {
    let n = a.n();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if v > 0.0 && !seen[j] {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == n
}

/// Whether `A + Aᵀ` is primitive. For a symmetric pattern this holds iff the
/// undirected graph is connected and not bipartite; a loop breaks bipartiteness.
pub fn is_primitive_symmetrized(a: &SparseMatrix) -> bool {
    let n = a.n();
    if n == 0 {
        return false;
    }
    if a.shift() > 0.0 {
        return true;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut has_loop = false;
    for (i, j, v) in a.triplets() {
        if v > 0.0 {
            if i == j {
                has_loop = true;
            } else {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut color: Vec<Option<bool>> = vec![None; n];
    let mut queue = VecDeque::from([0usize]);
    color[0] = Some(false);
    let mut visited = 1;
    let mut bipartite = true;
    while let Some(i) = queue.pop_front() {
        let ci = color[i].unwrap();
        for &j in &adj[i] {
            match color[j] {
                None => {
                    color[j] = Some(!ci);
                    visited += 1;
                    queue.push_back(j);
                }
                Some(cj) if cj == ci => bipartite = false,
                Some(_) => {}
            }
        }
    }
    visited == n && (has_loop || !bipartite)
}

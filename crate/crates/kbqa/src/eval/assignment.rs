//! Maximum-weight bipartite matching over sparse edge lists.
//!
//! Weights are generic over signed integers so callers can scale exact
//! rational scores to integers and keep the optimization free of rounding.

use num_traits::{PrimInt, Signed};
use std::collections::VecDeque;

/// Integer weight usable in the matching solver.
pub trait Weight: PrimInt + Signed {}

impl<T: PrimInt + Signed> Weight for T {}

/// One candidate pairing between a left node and a right node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchEdge<W> {
    pub left: usize,
    pub right: usize,
    pub weight: W,
}

/// Result of the matching: chosen pairs (sorted by left index) and their
/// total weight. Pairs form a partial one-to-one matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching<W> {
    pub pairs: Vec<(usize, usize)>,
    pub total: W,
}

/// Finds a matching maximizing the total weight. Edges with weight ≤ 0 are
/// ignored: leaving a node unmatched is always preferable to a non-positive
/// pairing.
///
/// The edge graph is split into connected components first (row overlap is
/// sparse in practice, so most components are a handful of nodes), then each
/// component is solved by successive shortest augmenting paths: starting from
/// the empty matching, repeatedly augment along the path with the largest net
/// gain until no augmentation improves the total. Intermediate matchings are
/// cost-optimal for their cardinality, so the residual graph never contains a
/// negative cycle and a Bellman-Ford queue search finds the best path.
pub fn max_weight_matching<W: Weight>(
    n_left: usize,
    n_right: usize,
    edges: &[MatchEdge<W>],
) -> Matching<W> {
    let zero = W::zero();
    let positive: Vec<MatchEdge<W>> = edges
        .iter()
        .copied()
        .inspect(|e| assert!(e.left < n_left && e.right < n_right, "edge out of bounds"))
        .filter(|e| e.weight > zero)
        .collect();

    let mut pairs = Vec::new();
    let mut total = zero;
    for component in split_components(n_left, n_right, &positive) {
        let m = solve_component(&component);
        total = total + m.total;
        pairs.extend(m.pairs);
    }
    pairs.sort_unstable();
    Matching { pairs, total }
}

/// Edges of one connected component, with original node ids preserved.
struct Component<W> {
    lefts: Vec<usize>,
    rights: Vec<usize>,
    /// (local left, local right, weight)
    edges: Vec<(usize, usize, W)>,
}

fn split_components<W: Weight>(
    n_left: usize,
    n_right: usize,
    edges: &[MatchEdge<W>],
) -> Vec<Component<W>> {
    // union-find over left ∪ right node ids
    let mut parent: Vec<usize> = (0..n_left + n_right).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = x;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    for e in edges {
        let a = find(&mut parent, e.left);
        let b = find(&mut parent, n_left + e.right);
        parent[a] = b;
    }

    let mut by_root: std::collections::HashMap<usize, Component<W>> =
        std::collections::HashMap::new();
    let mut left_local = vec![usize::MAX; n_left];
    let mut right_local = vec![usize::MAX; n_right];
    for e in edges {
        let root = find(&mut parent, e.left);
        let comp = by_root.entry(root).or_insert_with(|| Component {
            lefts: Vec::new(),
            rights: Vec::new(),
            edges: Vec::new(),
        });
        if left_local[e.left] == usize::MAX {
            left_local[e.left] = comp.lefts.len();
            comp.lefts.push(e.left);
        }
        if right_local[e.right] == usize::MAX {
            right_local[e.right] = comp.rights.len();
            comp.rights.push(e.right);
        }
        comp.edges
            .push((left_local[e.left], right_local[e.right], e.weight));
    }
    by_root.into_values().collect()
}

fn solve_component<W: Weight>(comp: &Component<W>) -> Matching<W> {
    let n = comp.lefts.len();
    let m = comp.rights.len();
    let zero = W::zero();

    // dense weight lookup within the component; parallel edges keep the max
    let mut weight = vec![zero; n * m];
    for &(i, j, w) in &comp.edges {
        if w > weight[i * m + j] {
            weight[i * m + j] = w;
        }
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..m {
            if weight[i * m + j] > zero {
                adj[i].push(j);
            }
        }
    }

    let mut match_left: Vec<Option<usize>> = vec![None; n];
    let mut match_right: Vec<Option<usize>> = vec![None; m];
    let mut total = zero;

    loop {
        // Bellman-Ford queue over node costs. Node ids: 0..n left, n..n+m right.
        // Arc costs: unmatched left->right = -w (we gain w), matched
        // right->left = +w (we give w back). Start from all unmatched lefts.
        let inf = W::max_value();
        let nodes = n + m;
        let mut dist = vec![inf; nodes];
        let mut prev: Vec<Option<usize>> = vec![None; nodes];
        let mut in_queue = vec![false; nodes];
        let mut queue = VecDeque::new();
        for (i, matched) in match_left.iter().enumerate() {
            if matched.is_none() {
                dist[i] = zero;
                in_queue[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            let du = dist[u];
            if u < n {
                for &j in &adj[u] {
                    if match_left[u] == Some(j) {
                        continue;
                    }
                    let nd = du - weight[u * m + j];
                    let v = n + j;
                    if nd < dist[v] {
                        dist[v] = nd;
                        prev[v] = Some(u);
                        if !in_queue[v] {
                            in_queue[v] = true;
                            queue.push_back(v);
                        }
                    }
                }
            } else {
                let j = u - n;
                if let Some(i) = match_right[j] {
                    let nd = du + weight[i * m + j];
                    if nd < dist[i] {
                        dist[i] = nd;
                        prev[i] = Some(u);
                        if !in_queue[i] {
                            in_queue[i] = true;
                            queue.push_back(i);
                        }
                    }
                }
            }
        }

        // The augmenting path ends at an unmatched right node; take the one
        // with the biggest gain (most negative cost), if any gain remains.
        let mut best: Option<(W, usize)> = None;
        for j in 0..m {
            if match_right[j].is_none()
                && dist[n + j] < inf
                && dist[n + j] < zero
                && best.is_none_or(|(c, _)| dist[n + j] < c)
            {
                best = Some((dist[n + j], n + j));
            }
        }
        let Some((cost, end)) = best else { break };
        total = total - cost;

        let mut v = end;
        while let Some(u) = prev[v] {
            if v >= n && u < n {
                match_left[u] = Some(v - n);
                match_right[v - n] = Some(u);
            }
            v = u;
        }
    }

    let pairs = match_left
        .iter()
        .enumerate()
        .filter_map(|(i, mj)| mj.map(|j| (comp.lefts[i], comp.rights[j])))
        .collect();
    Matching { pairs, total }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive maximizer over all injective pairings; the oracle the
    /// solver is checked against.
    fn brute_force_total(n_left: usize, n_right: usize, edges: &[MatchEdge<i64>]) -> i64 {
        let mut weight = vec![vec![0i64; n_right]; n_left];
        for e in edges {
            if e.weight > 0 {
                weight[e.left][e.right] = weight[e.left][e.right].max(e.weight);
            }
        }
        fn rec(i: usize, weight: &[Vec<i64>], used: &mut [bool]) -> i64 {
            if i == weight.len() {
                return 0;
            }
            let mut best = rec(i + 1, weight, used);
            for j in 0..used.len() {
                if !used[j] && weight[i][j] > 0 {
                    used[j] = true;
                    best = best.max(weight[i][j] + rec(i + 1, weight, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(0, &weight, &mut vec![false; n_right])
    }

    #[test]
    fn picks_the_heavier_cross_pairing() {
        let edges = vec![
            MatchEdge { left: 0, right: 0, weight: 1i64 },
            MatchEdge { left: 0, right: 1, weight: 5 },
            MatchEdge { left: 1, right: 0, weight: 5 },
            MatchEdge { left: 1, right: 1, weight: 1 },
        ];
        let m = max_weight_matching(2, 2, &edges);
        assert_eq!(m.total, 10);
        assert_eq!(m.pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn leaves_nodes_unmatched_when_no_positive_edge() {
        let edges = vec![MatchEdge { left: 0, right: 1, weight: 3i64 }];
        let m = max_weight_matching(3, 2, &edges);
        assert_eq!(m.total, 3);
        assert_eq!(m.pairs, vec![(0, 1)]);
    }

    #[test]
    fn empty_graph() {
        let m = max_weight_matching::<i64>(0, 0, &[]);
        assert_eq!(m.total, 0);
        assert!(m.pairs.is_empty());
    }

    #[test]
    fn prefers_two_moderate_edges_over_one_heavy() {
        // 0-0 weighs 7; splitting into 0-1 and 1-0 yields 9.
        let edges = vec![
            MatchEdge { left: 0, right: 0, weight: 7i64 },
            MatchEdge { left: 0, right: 1, weight: 4 },
            MatchEdge { left: 1, right: 0, weight: 5 },
        ];
        let m = max_weight_matching(2, 2, &edges);
        assert_eq!(m.total, 9);
    }

    #[test]
    fn ignores_non_positive_edges() {
        let edges = vec![
            MatchEdge { left: 0, right: 0, weight: 0i64 },
            MatchEdge { left: 1, right: 1, weight: -4 },
            MatchEdge { left: 1, right: 0, weight: 2 },
        ];
        let m = max_weight_matching(2, 2, &edges);
        assert_eq!(m.total, 2);
        assert_eq!(m.pairs, vec![(1, 0)]);
    }

    #[test]
    fn matches_brute_force_on_random_sparse_graphs() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(0xA55E55);
        for _ in 0..500 {
            let n = rng.random_range(0..=6);
            let m = rng.random_range(0..=6);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..m {
                    if rng.random_bool(0.5) {
                        edges.push(MatchEdge {
                            left: i,
                            right: j,
                            weight: rng.random_range(1..=20i64),
                        });
                    }
                }
            }
            let got = max_weight_matching(n, m, &edges);
            let want = brute_force_total(n, m, &edges);
            assert_eq!(got.total, want, "n={n} m={m} edges={edges:?}");
            // the reported pairs must really add up to the reported total
            let mut sum = 0;
            let mut seen_l = std::collections::HashSet::new();
            let mut seen_r = std::collections::HashSet::new();
            for &(i, j) in &got.pairs {
                assert!(seen_l.insert(i) && seen_r.insert(j), "not injective");
                sum += edges
                    .iter()
                    .filter(|e| e.left == i && e.right == j)
                    .map(|e| e.weight)
                    .max()
                    .expect("pair uses an existing edge");
            }
            assert_eq!(sum, got.total);
        }
    }
}

//! Correlation sparsity pattern: csp matrix/graph, maximal cliques (with
//! chordal extension when the graph is not chordal) and clique orderings
//! satisfying the running intersection property.

use crate::polynomial::Poly;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CspGraph {
    pub n: usize,
    /// symmetric adjacency with true diagonal
    pub adj: Vec<Vec<bool>>,
}

impl CspGraph {
    pub fn empty(n: usize) -> Self {
        let mut adj = vec![vec![false; n]; n];
        for (i, row) in adj.iter_mut().enumerate() {
            row[i] = true;
        }
        CspGraph { n, adj }
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        self.adj[i][j] = true;
        self.adj[j][i] = true;
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| j != i && self.adj[i][j]).collect()
    }

    pub fn edge_count(&self) -> usize {
        let mut c = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.adj[i][j] {
                    c += 1;
                }
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueSet {
    pub cliques: Vec<BTreeSet<usize>>,
}

impl CliqueSet {
    pub fn sizes(&self) -> Vec<usize> {
        self.cliques.iter().map(|c| c.len()).collect()
    }

    /// True when every variable set in `sets` is contained in some clique.
    pub fn covers(&self, sets: &[BTreeSet<usize>]) -> bool {
        sets.iter()
            .all(|s| self.cliques.iter().any(|c| s.is_subset(c)))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("no running-intersection ordering exists; first witness at position {0}")]
pub struct RipFailure(pub usize);

/// csp matrix: R(i,j)=1 iff i=j, some objective monomial involves both,
/// or some constraint involves both.
pub fn csp_graph(objective: &Poly, constraints: &[Poly]) -> CspGraph {
    let n = objective.nvars;
    let mut g = CspGraph::empty(n);
    for m in objective.terms.keys() {
        let vars: Vec<usize> = m.vars().collect();
        for a in 0..vars.len() {
            for b in (a + 1)..vars.len() {
                g.add_edge(vars[a], vars[b]);
            }
        }
    }
    for c in constraints {
        let vars: Vec<usize> = c.var_occurrences().into_iter().collect();
        for a in 0..vars.len() {
            for b in (a + 1)..vars.len() {
                g.add_edge(vars[a], vars[b]);
            }
        }
    }
    g
}

/// Exact maximal cliques of an arbitrary graph (Bron–Kerbosch with pivot),
/// returned in a deterministic order.
pub fn maximal_cliques_raw(g: &CspGraph) -> CliqueSet {
    let mut out: Vec<BTreeSet<usize>> = Vec::new();
    let mut r = BTreeSet::new();
    let p: BTreeSet<usize> = (0..g.n).collect();
    let x = BTreeSet::new();
    bron_kerbosch(g, &mut r, p, x, &mut out);
    out.sort();
    CliqueSet { cliques: out }
}

fn bron_kerbosch(
    g: &CspGraph,
    r: &mut BTreeSet<usize>,
    mut p: BTreeSet<usize>,
    mut x: BTreeSet<usize>,
    out: &mut Vec<BTreeSet<usize>>,
) {
    if p.is_empty() && x.is_empty() {
        out.push(r.clone());
        return;
    }
    // pivot: vertex of P ∪ X with most neighbors in P
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&v| v != u && g.adj[u][v]).count());
    let candidates: Vec<usize> = match pivot {
        Some(u) => p.iter().copied().filter(|&v| v == u || !g.adj[u][v]).collect(),
        None => p.iter().copied().collect(),
    };
    for v in candidates {
        r.insert(v);
        let np: BTreeSet<usize> = p.iter().copied().filter(|&w| w != v && g.adj[v][w]).collect();
        let nx: BTreeSet<usize> = x.iter().copied().filter(|&w| w != v && g.adj[v][w]).collect();
        bron_kerbosch(g, r, np, nx, out);
        r.remove(&v);
        p.remove(&v);
        x.insert(v);
    }
}

/// Maximum cardinality search; returns an elimination order that is
/// perfect iff the graph is chordal.
fn mcs_order(g: &CspGraph) -> Vec<usize> {
    let n = g.n;
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !visited[v])
            .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
            .unwrap();
        visited[v] = true;
        order.push(v);
        for w in 0..n {
            if !visited[w] && g.adj[v][w] {
                weight[w] += 1;
            }
        }
    }
    order.reverse(); // elimination order: last visited first
    order
}

/// Check whether eliminating in `order` produces no fill.
fn is_perfect_elimination(g: &CspGraph, order: &[usize]) -> bool {
    let n = g.n;
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    for (i, &v) in order.iter().enumerate() {
        let later: Vec<usize> = g
            .neighbors(v)
            .into_iter()
            .filter(|&w| pos[w] > i)
            .collect();
        for a in 0..later.len() {
            for b in (a + 1)..later.len() {
                if !g.adj[later[a]][later[b]] {
                    return false;
                }
            }
        }
    }
    true
}

/// Cliques of the (possibly chordally extended) graph, one per eliminated
/// vertex, pruned to the maximal ones. When the input is chordal, these
/// are exactly its maximal cliques.
pub fn maximal_cliques(g: &CspGraph) -> CliqueSet {
    let order = mcs_order(g);
    let (work, order) = if is_perfect_elimination(g, &order) {
        (g.clone(), order)
    } else {
        min_degree_extension(g)
    };
    elimination_cliques(&work, &order)
}

/// Chordal extension by minimum-degree elimination. Returns the extended
/// graph and the elimination order used (a PEO of the extension).
pub fn min_degree_extension(g: &CspGraph) -> (CspGraph, Vec<usize>) {
    let n = g.n;
    let mut ext = g.clone();
    let mut work = g.clone();
    let mut alive: Vec<bool> = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| {
                let deg = (0..n).filter(|&w| alive[w] && w != v && work.adj[v][w]).count();
                (deg, v)
            })
            .unwrap();
        let nbrs: Vec<usize> = (0..n)
            .filter(|&w| alive[w] && w != v && work.adj[v][w])
            .collect();
        for a in 0..nbrs.len() {
            for b in (a + 1)..nbrs.len() {
                work.add_edge(nbrs[a], nbrs[b]);
                ext.add_edge(nbrs[a], nbrs[b]);
            }
        }
        alive[v] = false;
        order.push(v);
    }
    (ext, order)
}

fn elimination_cliques(g: &CspGraph, order: &[usize]) -> CliqueSet {
    let n = g.n;
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut cliques: Vec<BTreeSet<usize>> = Vec::new();
    for (i, &v) in order.iter().enumerate() {
        let mut c: BTreeSet<usize> = g
            .neighbors(v)
            .into_iter()
            .filter(|&w| pos[w] > i)
            .collect();
        c.insert(v);
        cliques.push(c);
    }
    // keep only maximal ones
    let mut keep: Vec<BTreeSet<usize>> = Vec::new();
    cliques.sort_by_key(|c| std::cmp::Reverse(c.len()));
    for c in cliques {
        if !keep.iter().any(|k| c.is_subset(k)) {
            keep.push(c);
        }
    }
    keep.sort();
    CliqueSet { cliques: keep }
}

/// Direct check of Definition-style running intersection.
pub fn verify_rip(cliques: &[BTreeSet<usize>]) -> Result<(), usize> {
    let mut union: BTreeSet<usize> = BTreeSet::new();
    for (i, c) in cliques.iter().enumerate() {
        if i > 0 {
            let inter: BTreeSet<usize> = c.intersection(&union).copied().collect();
            if !inter.is_empty() && !cliques[..i].iter().any(|l| inter.is_subset(l)) {
                return Err(i);
            }
        }
        union.extend(c.iter().copied());
    }
    Ok(())
}

/// Reorder cliques to satisfy the running intersection property via a
/// maximum-weight spanning tree on intersection sizes (junction tree),
/// then verify. Fails only for clique sets that admit no RIP order at
/// all (e.g. the edge cliques of a chordless cycle).
pub fn rip_order(cs: &CliqueSet) -> Result<CliqueSet, RipFailure> {
    let m = cs.cliques.len();
    if m <= 1 {
        return Ok(cs.clone());
    }
    // Prim's algorithm, maximizing |C_i ∩ C_j|
    let mut in_tree = vec![false; m];
    in_tree[0] = true;
    let mut order = vec![0usize];
    while order.len() < m {
        let mut best: Option<(usize, usize)> = None; // (weight, idx)
        for i in 0..m {
            if in_tree[i] {
                continue;
            }
            let w = order
                .iter()
                .map(|&j| cs.cliques[i].intersection(&cs.cliques[j]).count())
                .max()
                .unwrap_or(0);
            if best.map(|(bw, bi)| (w, std::cmp::Reverse(i)) > (bw, std::cmp::Reverse(bi))).unwrap_or(true) {
                best = Some((w, i));
            }
        }
        let (_, i) = best.unwrap();
        in_tree[i] = true;
        order.push(i);
    }
    let reordered: Vec<BTreeSet<usize>> = order.iter().map(|&i| cs.cliques[i].clone()).collect();
    match verify_rip(&reordered) {
        Ok(()) => Ok(CliqueSet { cliques: reordered }),
        Err(w) => Err(RipFailure(w)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn kepler0_poly() -> Poly {
        let src = "\
let box_k x1 x2 x3 x4 x5 x6 = [(4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36)];;
let obj_k x1 x2 x3 x4 x5 x6 = [(x2 * x5 + x3 * x6 - x2 * x3 - x5 * x6 + x1 * ( - x1 + x2 + x3 - x4 + x5 + x6), 0)];;";
        parse_program(src).unwrap().objective.to_poly(6).unwrap()
    }

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn kepler0_csp_matrix() {
        let g = csp_graph(&kepler0_poly(), &[]);
        // published 6×6 pattern (1-indexed rows):
        // x1 adjacent to all; x2:{1,3,5}; x3:{1,2,6}; x4:{1}; x5:{1,2,6}; x6:{1,3,5}
        let expect = [
            [1, 1, 1, 1, 1, 1],
            [1, 1, 1, 0, 1, 0],
            [1, 1, 1, 0, 0, 1],
            [1, 0, 0, 1, 0, 0],
            [1, 1, 0, 0, 1, 1],
            [1, 0, 1, 0, 1, 1],
        ];
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(g.adj[i][j], expect[i][j] == 1, "mismatch at ({i},{j})");
            }
        }
    }

    #[test]
    fn kepler0_raw_maximal_cliques_match_published_list() {
        let g = csp_graph(&kepler0_poly(), &[]);
        let cs = maximal_cliques_raw(&g);
        let expect: Vec<BTreeSet<usize>> = vec![
            set(&[0, 1, 2]),
            set(&[0, 1, 4]),
            set(&[0, 2, 5]),
            set(&[0, 3]),
            set(&[0, 4, 5]),
        ];
        assert_eq!(cs.cliques, expect);
    }

    #[test]
    fn kepler0_raw_cliques_admit_no_rip_order() {
        // The kepler0 csp graph contains the chordless cycle x2-x3-x6-x5, so
        // its raw maximal cliques cannot be ordered with running
        // intersection; the analyzer works on the chordal extension instead.
        let g = csp_graph(&kepler0_poly(), &[]);
        let raw = maximal_cliques_raw(&g);
        assert!(rip_order(&raw).is_err());
        let ext = maximal_cliques(&g);
        assert!(ext.cliques.iter().all(|c| c.len() <= 4));
        let ordered = rip_order(&ext).unwrap();
        assert!(verify_rip(&ordered.cliques).is_ok());
        // chordal-extension cliques still cover everything the raw ones did
        assert!(ext.covers(&raw.cliques));
    }

    #[test]
    fn identity_adjacency_for_separable_objective() {
        // f = x1 + x2: no cross terms, no constraints
        let mut p = Poly::zero(2);
        p.add_term(crate::polynomial::Monomial::var(0), crate::rational::rat_int(1));
        p.add_term(crate::polynomial::Monomial::var(1), crate::rational::rat_int(1));
        let g = csp_graph(&p, &[]);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn constraint_edges_present_regardless_of_objective() {
        let p = Poly::var(4, 0); // objective touches only x0
        let mut g13 = Poly::var(4, 1).mul(&Poly::var(4, 3)); // constraint on {1,3}
        g13 = g13.add(&Poly::constant(4, crate::rational::rat_int(1)));
        let g = csp_graph(&p, &[g13]);
        assert!(g.adj[1][3] && g.adj[3][1]);
        assert!(!g.adj[0][1]);
    }

    #[test]
    fn complete_graph_single_clique() {
        let mut g = CspGraph::empty(4);
        for i in 0..4 {
            for j in (i + 1)..4 {
                g.add_edge(i, j);
            }
        }
        let cs = maximal_cliques(&g);
        assert_eq!(cs.cliques, vec![set(&[0, 1, 2, 3])]);
        assert_eq!(maximal_cliques_raw(&g).cliques, vec![set(&[0, 1, 2, 3])]);
    }

    #[test]
    fn path_graph_cliques_by_brute_force() {
        // path 0-1-2: brute-force over all vertex subsets confirms the
        // maximal cliques are {0,1} and {1,2}
        let mut g = CspGraph::empty(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        let mut brute: Vec<BTreeSet<usize>> = Vec::new();
        for mask in 1u32..8 {
            let s: BTreeSet<usize> = (0..3).filter(|&i| mask >> i & 1 == 1).collect();
            let is_clique = s
                .iter()
                .all(|&a| s.iter().all(|&b| a == b || g.adj[a][b]));
            if is_clique {
                brute.push(s);
            }
        }
        let maximal: Vec<BTreeSet<usize>> = brute
            .iter()
            .filter(|s| !brute.iter().any(|t| *s != t && s.is_subset(t)))
            .cloned()
            .collect();
        let cs = maximal_cliques(&g);
        let mut got = cs.cliques.clone();
        got.sort();
        let mut want = maximal.clone();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn single_clique_is_trivially_rip() {
        let cs = CliqueSet { cliques: vec![set(&[0, 1, 2])] };
        assert!(rip_order(&cs).is_ok());
    }

    #[test]
    fn triangle_edge_cliques_fail_rip_exhaustively() {
        // {0,1},{1,2},{0,2}: verify all 6 orderings fail, and rip_order
        // reports failure
        let cliques = [set(&[0, 1]), set(&[1, 2]), set(&[0, 2])];
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for perm in perms {
            let ordered: Vec<BTreeSet<usize>> = perm.iter().map(|&i| cliques[i].clone()).collect();
            assert!(verify_rip(&ordered).is_err(), "ordering {perm:?} unexpectedly satisfies RIP");
        }
        let cs = CliqueSet { cliques: cliques.to_vec() };
        assert!(matches!(rip_order(&cs), Err(RipFailure(_))));
    }

    #[test]
    fn chordal_extension_is_monotone() {
        let g = csp_graph(&kepler0_poly(), &[]);
        let (ext, _) = min_degree_extension(&g);
        for i in 0..g.n {
            for j in 0..g.n {
                if g.adj[i][j] {
                    assert!(ext.adj[i][j]);
                }
            }
        }
    }
}

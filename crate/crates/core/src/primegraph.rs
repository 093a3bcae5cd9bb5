//! Prime graphs of element-order spectra.

use crate::chartab::OrderList;
use crate::cyclotomic::is_prime;
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("order list is empty")]
    Empty,
    #[error("order list does not contain 1")]
    NoIdentity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeGraph {
    pub vertices: BTreeSet<u64>,
    /// Unordered pairs stored as `(p, q)` with `p < q`.
    pub edges: BTreeSet<(u64, u64)>,
}

fn primes_of(n: u64) -> Vec<u64> {
    (2..=n).filter(|&p| n.is_multiple_of(p) && is_prime(p)).collect()
}

pub fn build_graph(orders: &OrderList) -> Result<PrimeGraph, GraphError> {
    if orders.orders.is_empty() {
        return Err(GraphError::Empty);
    }
    if !orders.orders.contains(&1) {
        return Err(GraphError::NoIdentity);
    }
    let mut vertices = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for &m in &orders.orders {
        let ps = primes_of(m);
        for (i, &p) in ps.iter().enumerate() {
            vertices.insert(p);
            for &q in &ps[i + 1..] {
                edges.insert((p, q));
            }
        }
    }
    Ok(PrimeGraph { vertices, edges })
}

impl PrimeGraph {
    /// Connected components, each sorted, ordered by their least vertex.
    pub fn components(&self) -> Vec<BTreeSet<u64>> {
        let verts: Vec<u64> = self.vertices.iter().copied().collect();
        let idx = |v: u64| verts.binary_search(&v).expect("edge endpoint is a vertex");
        let mut uf = UnionFind::<usize>::new(verts.len());
        for &(p, q) in &self.edges {
            uf.union(idx(p), idx(q));
        }
        let mut comps: Vec<BTreeSet<u64>> = Vec::new();
        let mut root_of: Vec<(usize, usize)> = Vec::new();
        for (i, &v) in verts.iter().enumerate() {
            let r = uf.find(i);
            match root_of.iter().find(|(root, _)| *root == r) {
                Some(&(_, c)) => {
                    comps[c].insert(v);
                }
                None => {
                    root_of.push((r, comps.len()));
                    comps.push(BTreeSet::from([v]));
                }
            }
        }
        comps
    }

    pub fn isolated(&self) -> BTreeSet<u64> {
        self.vertices
            .iter()
            .copied()
            .filter(|v| !self.edges.iter().any(|&(p, q)| p == *v || q == *v))
            .collect()
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("graph \"{name}\" {{\n");
        for v in &self.vertices {
            let _ = writeln!(s, "  {v};");
        }
        for (p, q) in &self.edges {
            let _ = writeln!(s, "  {p} -- {q};");
        }
        s.push_str("}\n");
        s
    }
}

/// Labelled equality.
pub fn graph_equal(g1: &PrimeGraph, g2: &PrimeGraph) -> bool {
    g1 == g2
}

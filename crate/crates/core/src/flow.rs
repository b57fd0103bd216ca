//! Exact min-cost flow and the transportation problem built on it.
//!
//! Negative-cost arcs are saturated up front so every residual arc starts
//! with a nonnegative cost, then flow is routed by successive shortest paths
//! (Dijkstra over reduced costs, potentials seeded by Bellman–Ford).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: BigInt,
    pub cost: BigInt,
}

/// `supply[v] > 0` is a source of that many units, `< 0` a sink.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub arcs: Vec<Arc>,
    pub supply: Vec<BigInt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult {
    /// Flow on each arc, in input order.
    pub flow: Vec<BigInt>,
    pub cost: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error("no flow meets the supplies and capacities")]
    Infeasible,
    #[error("malformed network: {0}")]
    Malformed(String),
}

struct Edge {
    to: usize,
    cap: BigInt,
    cost: BigInt,
}

struct Residual {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn new(nodes: usize) -> Self {
        Residual {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    /// Adds an arc and its reverse; returns the forward edge index. The
    /// reverse edge is always `index ^ 1`.
    fn add(&mut self, from: usize, to: usize, cap: BigInt, rev_cap: BigInt, cost: BigInt) -> usize {
        let e = self.edges.len();
        self.edges.push(Edge {
            to,
            cap,
            cost: cost.clone(),
        });
        self.edges.push(Edge {
            to: from,
            cap: rev_cap,
            cost: -cost,
        });
        self.adj[from].push(e);
        self.adj[to].push(e + 1);
        e
    }

    fn bellman_ford(&self, source: usize) -> Vec<Option<BigInt>> {
        let n = self.adj.len();
        let mut dist: Vec<Option<BigInt>> = vec![None; n];
        dist[source] = Some(BigInt::zero());
        for _ in 0..n {
            let mut changed = false;
            for v in 0..n {
                let Some(dv) = dist[v].clone() else { continue };
                for &e in &self.adj[v] {
                    let edge = &self.edges[e];
                    if edge.cap.is_positive() {
                        let nd = &dv + &edge.cost;
                        if dist[edge.to].as_ref().map_or(true, |d| nd < *d) {
                            dist[edge.to] = Some(nd);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    fn dijkstra(&self, source: usize, pot: &[BigInt]) -> (Vec<Option<BigInt>>, Vec<Option<usize>>) {
        let n = self.adj.len();
        let mut dist: Vec<Option<BigInt>> = vec![None; n];
        let mut via: Vec<Option<usize>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[source] = Some(BigInt::zero());
        heap.push(Reverse((BigInt::zero(), source)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if dist[v].as_ref().is_some_and(|best| d > *best) {
                continue;
            }
            for &e in &self.adj[v] {
                let edge = &self.edges[e];
                if !edge.cap.is_positive() {
                    continue;
                }
                let nd = &d + &edge.cost + &pot[v] - &pot[edge.to];
                debug_assert!(nd >= d, "negative reduced cost");
                if dist[edge.to].as_ref().map_or(true, |cur| nd < *cur) {
                    dist[edge.to] = Some(nd.clone());
                    via[edge.to] = Some(e);
                    heap.push(Reverse((nd, edge.to)));
                }
            }
        }
        (dist, via)
    }
}

pub fn min_cost_flow(net: &FlowNetwork) -> Result<FlowResult, FlowError> {
    if net.supply.len() != net.nodes {
        return Err(FlowError::Malformed(format!(
            "{} supplies for {} nodes",
            net.supply.len(),
            net.nodes
        )));
    }
    if let Some(a) = net
        .arcs
        .iter()
        .find(|a| a.from >= net.nodes || a.to >= net.nodes || a.capacity.is_negative())
    {
        return Err(FlowError::Malformed(format!(
            "arc {} -> {} with capacity {}",
            a.from, a.to, a.capacity
        )));
    }
    if !net.supply.iter().sum::<BigInt>().is_zero() {
        return Err(FlowError::Infeasible);
    }

    let (source, sink) = (net.nodes, net.nodes + 1);
    let mut g = Residual::new(net.nodes + 2);
    let mut balance = net.supply.clone();
    let mut arc_edges = Vec::with_capacity(net.arcs.len());
    for a in &net.arcs {
        let e = if a.cost.is_negative() {
            balance[a.from] -= &a.capacity;
            balance[a.to] += &a.capacity;
            g.add(a.from, a.to, BigInt::zero(), a.capacity.clone(), a.cost.clone())
        } else {
            g.add(a.from, a.to, a.capacity.clone(), BigInt::zero(), a.cost.clone())
        };
        arc_edges.push(e);
    }
    let mut required = BigInt::zero();
    for (v, bal) in balance.iter().enumerate() {
        if bal.is_positive() {
            required += bal;
            g.add(source, v, bal.clone(), BigInt::zero(), BigInt::zero());
        } else if bal.is_negative() {
            g.add(v, sink, -bal, BigInt::zero(), BigInt::zero());
        }
    }

    let mut pot: Vec<BigInt> = g
        .bellman_ford(source)
        .into_iter()
        .map(Option::unwrap_or_default)
        .collect();
    let mut routed = BigInt::zero();
    while routed < required {
        let (dist, via) = g.dijkstra(source, &pot);
        let Some(dt) = dist[sink].clone() else { break };
        for (p, d) in pot.iter_mut().zip(&dist) {
            *p += d.as_ref().map_or(&dt, |d| d.min(&dt));
        }
        let mut push = &required - &routed;
        let mut v = sink;
        while let Some(e) = via[v] {
            push = push.min(g.edges[e].cap.clone());
            v = g.edges[e ^ 1].to;
        }
        let mut v = sink;
        while let Some(e) = via[v] {
            g.edges[e].cap -= &push;
            g.edges[e ^ 1].cap += &push;
            v = g.edges[e ^ 1].to;
        }
        routed += push;
    }
    if routed < required {
        return Err(FlowError::Infeasible);
    }

    let flow: Vec<BigInt> = arc_edges.iter().map(|&e| g.edges[e ^ 1].cap.clone()).collect();
    let cost = net
        .arcs
        .iter()
        .zip(&flow)
        .map(|(a, f)| &a.cost * f)
        .sum();
    Ok(FlowResult { flow, cost })
}

/// Integral transportation polytope with cell bounds: row sums equal
/// `row_totals`, column sums equal `col_totals`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportProblem {
    pub row_totals: Vec<BigInt>,
    pub col_totals: Vec<BigInt>,
    pub cell_lower: Vec<Vec<BigInt>>,
    pub cell_upper: Vec<Vec<BigInt>>,
    pub cell_profit: Vec<Vec<BigInt>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportSolution {
    pub cells: Vec<Vec<BigInt>>,
    pub objective: BigInt,
}

/// Maximizes total profit. Returns `None` when the polytope is empty.
pub fn solve_transport(p: &TransportProblem) -> Option<TransportSolution> {
    let (rows, cols) = (p.row_totals.len(), p.col_totals.len());
    let mut supply = vec![BigInt::zero(); rows + cols];
    supply[..rows].clone_from_slice(&p.row_totals);
    for (h, c) in p.col_totals.iter().enumerate() {
        supply[rows + h] = -c;
    }
    let mut arcs = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for h in 0..cols {
            let (lo, hi) = (&p.cell_lower[i][h], &p.cell_upper[i][h]);
            if lo > hi {
                return None;
            }
            supply[i] -= lo;
            supply[rows + h] += lo;
            arcs.push(Arc {
                from: i,
                to: rows + h,
                capacity: hi - lo,
                cost: -&p.cell_profit[i][h],
            });
        }
    }
    let net = FlowNetwork {
        nodes: rows + cols,
        arcs,
        supply,
    };
    let result = min_cost_flow(&net).ok()?;
    let mut cells = vec![Vec::with_capacity(cols); rows];
    let mut objective = BigInt::zero();
    for i in 0..rows {
        for h in 0..cols {
            let v = &p.cell_lower[i][h] + &result.flow[i * cols + h];
            objective += &v * &p.cell_profit[i][h];
            cells[i].push(v);
        }
    }
    Some(TransportSolution { cells, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn arc(from: usize, to: usize, cap: i64, cost: i64) -> Arc {
        Arc {
            from,
            to,
            capacity: big(cap),
            cost: big(cost),
        }
    }

    #[test]
    fn single_arc() {
        let net = FlowNetwork {
            nodes: 2,
            arcs: vec![arc(0, 1, 3, 2)],
            supply: vec![big(3), big(-3)],
        };
        let r = min_cost_flow(&net).unwrap();
        assert_eq!(r.flow, vec![big(3)]);
        assert_eq!(r.cost, big(6));
    }

    #[test]
    fn zero_supply() {
        let net = FlowNetwork {
            nodes: 2,
            arcs: vec![arc(0, 1, 3, 2)],
            supply: vec![big(0), big(0)],
        };
        let r = min_cost_flow(&net).unwrap();
        assert_eq!((r.flow, r.cost), (vec![big(0)], big(0)));
    }

    #[test]
    fn negative_cycle_is_used() {
        let net = FlowNetwork {
            nodes: 2,
            arcs: vec![arc(0, 1, 2, -3), arc(1, 0, 5, 1)],
            supply: vec![big(0), big(0)],
        };
        let r = min_cost_flow(&net).unwrap();
        assert_eq!(r.cost, big(-4));
    }

    #[test]
    fn capacity_shortfall() {
        let net = FlowNetwork {
            nodes: 2,
            arcs: vec![arc(0, 1, 2, 1)],
            supply: vec![big(3), big(-3)],
        };
        assert_eq!(min_cost_flow(&net), Err(FlowError::Infeasible));
    }

    #[test]
    fn one_cell_transport() {
        let p = TransportProblem {
            row_totals: vec![big(5)],
            col_totals: vec![big(5)],
            cell_lower: vec![vec![big(0)]],
            cell_upper: vec![vec![big(5)]],
            cell_profit: vec![vec![big(1)]],
        };
        let s = solve_transport(&p).unwrap();
        assert_eq!(s.cells, vec![vec![big(5)]]);
    }

    #[test]
    fn totals_mismatch() {
        let p = TransportProblem {
            row_totals: vec![big(5)],
            col_totals: vec![big(4)],
            cell_lower: vec![vec![big(0)]],
            cell_upper: vec![vec![big(5)]],
            cell_profit: vec![vec![big(1)]],
        };
        assert!(solve_transport(&p).is_none());
    }
}

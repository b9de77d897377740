//! Closed-form graph sizes and reassembly counts.
//!
//! The graph with outsiders is a prefix tree: each node places the next
//! fragment on one of the free slots or labels it an outsider. Node and edge
//! totals follow the recursions
//!
//! ```text
//! n(f, p) = p n(f-1, p-1) + n(f-1, p) + 1,  n(1, p) = p + 2,  n(f, 0) = f + 1
//! e(f, p) = p e(f-1, p-1) + e(f-1, p) + 1,  e(1, p) = 2p + 3, e(f, 0) = f + 2
//! ```
//!
//! with `N = n(f, p) + 1` and `E = e(f, p) - 1`. The edge recursion reads
//! `e(f-1, p-1)` in its first term; exhaustive enumeration of built graphs
//! confirms this reading (see the graph tests).

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GraphSizeQuery {
    /// Lateral fragments (outsiders included).
    pub f: u32,
    /// Available lateral slots.
    pub p: u32,
}

impl GraphSizeQuery {
    pub fn new(f: u32, p: u32) -> Result<Self> {
        if f < 1 {
            return Err(Error::Validation(
                "at least one lateral fragment is required".into(),
            ));
        }
        if p > 8 {
            return Err(Error::Validation(format!(
                "{p} available positions exceeds 8"
            )));
        }
        Ok(GraphSizeQuery { f, p })
    }
}

fn overflow() -> Error {
    Error::Validation("count overflows 128 bits".into())
}

/// Evaluates `r(f, p) = p r(f-1, p-1) + r(f-1, p) + 1` bottom-up.
fn recurrence(
    q: GraphSizeQuery,
    first_row: impl Fn(u128) -> u128,
    first_col: impl Fn(u128) -> u128,
) -> Result<u128> {
    let (f, p) = (q.f as usize, q.p as usize);
    // table[j] holds r(i, j) for the current fragment count i.
    let mut table: Vec<u128> = (0..=p).map(|j| first_row(j as u128)).collect();
    for i in 2..=f {
        let mut next = vec![0u128; p + 1];
        next[0] = first_col(i as u128);
        for j in 1..=p {
            next[j] = (j as u128)
                .checked_mul(table[j - 1])
                .and_then(|v| v.checked_add(table[j]))
                .and_then(|v| v.checked_add(1))
                .ok_or_else(overflow)?;
        }
        table = next;
    }
    Ok(table[p])
}

/// Total nodes `N` of the uncut graph with outsiders, sink included.
pub fn node_count(q: GraphSizeQuery) -> Result<u128> {
    let n = recurrence(q, |p| p + 2, |f| f + 1)?;
    n.checked_add(1).ok_or_else(overflow)
}

/// Total edges `E` of the uncut graph with outsiders.
pub fn edge_count(q: GraphSizeQuery) -> Result<u128> {
    Ok(recurrence(q, |p| 2 * p + 3, |f| f + 2)? - 1)
}

/// Falling factorial `n (n-1) ... (n-k+1)`.
fn falling(n: u128, k: u128) -> Result<u128> {
    (0..k).try_fold(1u128, |acc, i| acc.checked_mul(n - i).ok_or_else(overflow))
}

/// Lower bound on the number of complete reassemblies.
///
/// `p! / (p-f)!` when every fragment fits on the board, and
/// `(f+1)! / (f+1-p)!` when outsiders absorb the surplus `f > p`.
pub fn reassembly_lower_bound(f: u32, p: u32, outsiders_allowed: bool) -> Result<u128> {
    GraphSizeQuery::new(f, p)?;
    if f <= p {
        falling(p as u128, f as u128)
    } else if outsiders_allowed {
        falling(f as u128 + 1, p as u128)
    } else {
        Err(Error::Domain {
            what: "more fragments than positions without outsiders",
            value: f as f64,
        })
    }
}

//! Face enumeration by closing active sets under implied equalities.

use super::lp::{is_feasible, lp_minimize, LpResult};
use super::poly::{Face, HPoly};
use std::collections::{BTreeSet, VecDeque};

/// All inequalities tight everywhere on `p` with `active` tightened.
/// `None` when that set is empty.
pub fn closure(p: &HPoly, active: &BTreeSet<usize>) -> Option<BTreeSet<usize>> {
    let carrier = p.tighten(active);
    if !is_feasible(&carrier) {
        return None;
    }
    let mut out = active.clone();
    for (i, c) in p.ineqs.iter().enumerate() {
        if active.contains(&i) {
            continue;
        }
        let slack_possible = match lp_minimize(&carrier, &c.normal).expect("well-formed") {
            LpResult::Optimal { value, .. } => value < c.rhs,
            LpResult::Unbounded => true,
            LpResult::Infeasible(_) => unreachable!(),
        };
        if !slack_possible {
            out.insert(i);
        }
    }
    Some(out)
}

/// Every nonempty face of `p`, identified by its maximal active set.
pub fn enumerate_faces(p: &HPoly) -> Vec<Face> {
    let Some(root) = closure(p, &BTreeSet::new()) else {
        return vec![];
    };
    let mut seen: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    let mut queue = VecDeque::from([root.clone()]);
    seen.insert(root);
    while let Some(s) = queue.pop_front() {
        for i in 0..p.ineqs.len() {
            if s.contains(&i) {
                continue;
            }
            let mut t = s.clone();
            t.insert(i);
            if let Some(c) = closure(p, &t) {
                if seen.insert(c.clone()) {
                    queue.push_back(c);
                }
            }
        }
    }
    seen.into_iter().map(|s| Face { carrier: p.tighten(&s), active_ineq_indices: s }).collect()
}

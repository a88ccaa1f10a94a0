//! Support graphs, strongly connected components and end components.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::mdp::{ActionId, Mdp, StateId, StationaryPolicy};
use crate::scalar::Scalar;

/// Directed graph on states: `(i, j)` is an edge iff some `a` has
/// `p_ij(a) π_ia > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportGraph {
    successors: Vec<Vec<StateId>>,
}

impl SupportGraph {
    pub fn from_successors(mut successors: Vec<Vec<StateId>>) -> Self {
        for s in &mut successors {
            s.sort_unstable();
            s.dedup();
        }
        Self { successors }
    }

    pub fn num_vertices(&self) -> usize {
        self.successors.len()
    }

    pub fn successors(&self, i: StateId) -> &[StateId] {
        &self.successors[i]
    }

    pub fn has_edge(&self, i: StateId, j: StateId) -> bool {
        self.successors[i].binary_search(&j).is_ok()
    }

    pub fn edges(&self) -> BTreeSet<(StateId, StateId)> {
        self.successors
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&j| (i, j)))
            .collect()
    }

    /// Vertices reachable from `start` (including `start`).
    pub fn reachable_from(&self, start: StateId) -> Vec<bool> {
        let mut seen = vec![false; self.num_vertices()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &w in &self.successors[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Strongly connected components restricted to vertices with `mask[v]`.
    pub fn sccs_within(&self, mask: &[bool]) -> Vec<Vec<StateId>> {
        tarjan(&self.successors, mask)
    }

    pub fn sccs(&self) -> Vec<Vec<StateId>> {
        self.sccs_within(&vec![true; self.num_vertices()])
    }

    /// An SCC is nontrivial when it has an internal edge.
    pub fn is_nontrivial(&self, component: &[StateId]) -> bool {
        component.len() > 1 || self.has_edge(component[0], component[0])
    }
}

/// Support graph of `pi` in `m`.
pub fn support_graph<T: Scalar>(m: &Mdp<T>, pi: &StationaryPolicy<T>) -> Result<SupportGraph> {
    pi.check_against(m)?;
    let successors = (0..m.num_states())
        .map(|i| {
            (0..m.num_states())
                .filter(|&j| {
                    (0..m.num_actions(i))
                        .any(|a| pi.weight(i, a).is_pos() && m.prob(i, a, j).is_pos())
                })
                .collect()
        })
        .collect();
    Ok(SupportGraph { successors })
}

/// Whether the part of `g` reachable from `i` has exactly one maximal
/// nontrivial SCC, i.e. one nontrivial component from which no other
/// nontrivial component is reachable. On stochastic graphs these are the
/// closed classes.
pub fn is_unichain_from(g: &SupportGraph, i: StateId) -> Result<bool> {
    Ok(maximal_nontrivial_sccs(g, i)?.len() == 1)
}

/// The maximal nontrivial SCCs of the subgraph reachable from `i`.
pub fn maximal_nontrivial_sccs(g: &SupportGraph, i: StateId) -> Result<Vec<Vec<StateId>>> {
    if i >= g.num_vertices() {
        return Err(Error::UnknownState(i));
    }
    let reach = g.reachable_from(i);
    let comps = g.sccs_within(&reach);
    let n = g.num_vertices();
    let mut comp_of = vec![usize::MAX; n];
    for (c, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }
    let nontrivial: Vec<bool> = comps.iter().map(|c| g.is_nontrivial(c)).collect();
    // Tarjan emits components in reverse topological order: successors of a
    // component always come first, so one pass propagates "reaches a
    // nontrivial component strictly below".
    let mut reaches_nontrivial_below = vec![false; comps.len()];
    for (c, comp) in comps.iter().enumerate() {
        let mut below = false;
        for &v in comp {
            for &w in g.successors(v) {
                let d = comp_of[w];
                if d != c && d != usize::MAX && (nontrivial[d] || reaches_nontrivial_below[d]) {
                    below = true;
                }
            }
        }
        reaches_nontrivial_below[c] = below;
    }
    Ok(comps
        .into_iter()
        .enumerate()
        .filter(|(c, _)| nontrivial[*c] && !reaches_nontrivial_below[*c])
        .map(|(_, comp)| comp)
        .collect())
}

/// The graph with an edge `i -> j` whenever some action reaches `j`.
pub fn any_action_graph<T: Scalar>(m: &Mdp<T>) -> SupportGraph {
    let successors = (0..m.num_states())
        .map(|i| {
            (0..m.num_states())
                .filter(|&j| (0..m.num_actions(i)).any(|a| m.prob(i, a, j).is_pos()))
                .collect()
        })
        .collect();
    SupportGraph { successors }
}

/// An end component: states plus the actions that keep play inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndComponent {
    pub states: Vec<StateId>,
    pub actions: Vec<Vec<ActionId>>,
}

/// Maximal end components by iterated SCC refinement.
pub fn maximal_end_components<T: Scalar>(m: &Mdp<T>) -> Vec<EndComponent> {
    let n = m.num_states();
    let mut allowed: Vec<Vec<bool>> = (0..n).map(|i| vec![true; m.num_actions(i)]).collect();
    let mut alive = vec![true; n];
    loop {
        let successors: Vec<Vec<StateId>> = (0..n)
            .map(|i| {
                if !alive[i] {
                    return Vec::new();
                }
                (0..n)
                    .filter(|&j| {
                        alive[j]
                            && (0..m.num_actions(i))
                                .any(|a| allowed[i][a] && m.prob(i, a, j).is_pos())
                    })
                    .collect()
            })
            .collect();
        let g = SupportGraph::from_successors(successors);
        let comps = g.sccs_within(&alive);
        let mut comp_of = vec![usize::MAX; n];
        for (c, comp) in comps.iter().enumerate() {
            for &v in comp {
                comp_of[v] = c;
            }
        }
        let mut changed = false;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for a in 0..m.num_actions(i) {
                if !allowed[i][a] {
                    continue;
                }
                let leaves = (0..n)
                    .any(|j| m.prob(i, a, j).is_pos() && (!alive[j] || comp_of[j] != comp_of[i]));
                if leaves {
                    allowed[i][a] = false;
                    changed = true;
                }
            }
            if !allowed[i].iter().any(|&x| x) {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            let mut out: Vec<EndComponent> = comps
                .into_iter()
                .filter(|comp| alive[comp[0]])
                .map(|mut states| {
                    states.sort_unstable();
                    let actions = states
                        .iter()
                        .map(|&i| (0..m.num_actions(i)).filter(|&a| allowed[i][a]).collect())
                        .collect();
                    EndComponent { states, actions }
                })
                .collect();
            out.sort_by(|a, b| a.states.cmp(&b.states));
            return out;
        }
    }
}

/// Whether every state can reach every other under some deterministic
/// stationary policy, i.e. the whole state space is one end component.
pub fn is_communicating<T: Scalar>(m: &Mdp<T>) -> bool {
    let n = m.num_states();
    if n == 0 {
        return false;
    }
    let mecs = maximal_end_components(m);
    mecs.len() == 1 && mecs[0].states.len() == n
}

fn tarjan(succ: &[Vec<StateId>], mask: &[bool]) -> Vec<Vec<StateId>> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if !mask[root] || index[root] != usize::MAX {
            continue;
        }
        // (vertex, next successor position)
        let mut call: Vec<(StateId, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&(v, pos)) = call.last() {
            if pos < succ[v].len() {
                let w = succ[v][pos];
                call.last_mut().expect("frame").1 += 1;
                if !mask[w] {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{induce_chain, Mdp};

    fn cycle3() -> Mdp {
        Mdp::new(
            vec![
                vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]],
                vec![vec![0.0, 0.0, 1.0]],
                vec![vec![1.0, 0.0, 0.0]],
            ],
            vec![vec![0.0, 0.0], vec![0.0], vec![0.0]],
        )
        .unwrap()
    }

    #[test]
    fn deterministic_cycle_has_three_edges() {
        let m = cycle3();
        let pi = StationaryPolicy::deterministic(&m.structure(), &[0, 0, 0]).unwrap();
        let g = support_graph(&m, &pi).unwrap();
        assert_eq!(g.edges(), [(0, 1), (1, 2), (2, 0)].into_iter().collect());
    }

    #[test]
    fn zero_weight_action_adds_no_edges() {
        let m = cycle3();
        let pi = StationaryPolicy::new(vec![vec![1.0, 0.0], vec![1.0], vec![1.0]]).unwrap();
        let g = support_graph(&m, &pi).unwrap();
        assert!(!g.has_edge(0, 0));
    }

    #[test]
    fn support_graph_matches_induced_chain() {
        let m = cycle3();
        let pi = StationaryPolicy::new(vec![vec![0.5, 0.5], vec![1.0], vec![1.0]]).unwrap();
        let g = support_graph(&m, &pi).unwrap();
        let c = induce_chain(&m, &pi).unwrap();
        let from_chain: BTreeSet<_> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| *c.prob(i, j) > 0.0)
            .collect();
        assert_eq!(g.edges(), from_chain);
    }

    #[test]
    fn two_cycle_is_unichain() {
        let g = SupportGraph::from_successors(vec![vec![1], vec![0]]);
        assert!(is_unichain_from(&g, 0).unwrap());
        assert!(is_unichain_from(&g, 1).unwrap());
    }

    #[test]
    fn two_absorbing_branches_are_not_unichain() {
        let g = SupportGraph::from_successors(vec![vec![1, 2], vec![1], vec![2]]);
        assert!(!is_unichain_from(&g, 0).unwrap());
        assert!(is_unichain_from(&g, 1).unwrap());
    }

    #[test]
    fn transient_cycle_feeding_a_closed_class_is_unichain() {
        // 0 <-> 1 leaks into the closed class {2}.
        let g = SupportGraph::from_successors(vec![vec![1], vec![0, 2], vec![2]]);
        assert!(is_unichain_from(&g, 0).unwrap());
    }

    #[test]
    fn unknown_vertex_is_an_error() {
        let g = SupportGraph::from_successors(vec![vec![0]]);
        assert!(matches!(is_unichain_from(&g, 3), Err(Error::UnknownState(3))));
    }

    #[test]
    fn single_self_loop_state_communicates() {
        let m = Mdp::new(vec![vec![vec![1.0]]], vec![vec![0.0]]).unwrap();
        assert!(is_communicating(&m));
    }

    #[test]
    fn unreachable_state_breaks_communication() {
        let m = Mdp::new(
            vec![vec![vec![1.0, 0.0]], vec![vec![0.5, 0.5]]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap();
        assert!(!is_communicating(&m));
        assert!(is_communicating(&cycle3()));
    }

    #[test]
    fn end_components_drop_leaking_actions() {
        // state 0: action 0 stays, action 1 leaks to absorbing 1.
        let m = Mdp::new(
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0]]],
            vec![vec![0.0, 0.0], vec![0.0]],
        )
        .unwrap();
        let mecs = maximal_end_components(&m);
        assert_eq!(mecs.len(), 2);
        assert_eq!(mecs[0].states, vec![0]);
        assert_eq!(mecs[0].actions, vec![vec![0]]);
    }
}

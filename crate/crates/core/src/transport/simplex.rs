//! Primal network simplex for the dense bipartite transportation problem.
//!
//! Spanning-tree bookkeeping (parent / thread / succ_num / last_succ) follows
//! the classical LEMON layout. All arcs are uncapacitated, so non-tree arcs
//! always sit at zero flow and only tree-arc flows are stored (per node, on
//! the arc to its parent). The leaving-arc rule keeps the tree strongly
//! feasible, which rules out cycling on degenerate pivots.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

pub(crate) struct SimplexSolution {
    /// (row, column, mass) with mass > 0.
    pub flows: Vec<(usize, usize, f64)>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cost: f64,
}

struct Tree<'a> {
    n: usize,
    m: usize,
    arc_num: usize,
    root: usize,
    cost: &'a [f64],
    scale: f64,
    art_cost: f64,
    art_up: Vec<bool>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    up: Vec<bool>,
    pi: Vec<f64>,
    flow: Vec<f64>,
    dirty_revs: Vec<usize>,
}

impl<'a> Tree<'a> {
    #[inline]
    fn src(&self, e: usize) -> usize {
        if e < self.arc_num {
            e / self.m
        } else {
            let u = e - self.arc_num;
            if self.art_up[u] {
                u
            } else {
                self.root
            }
        }
    }
    #[inline]
    fn tgt(&self, e: usize) -> usize {
        if e < self.arc_num {
            self.n + e % self.m
        } else {
            let u = e - self.arc_num;
            if self.art_up[u] {
                self.root
            } else {
                u
            }
        }
    }
    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.arc_num {
            self.cost[e] * self.scale
        } else if self.art_up[e - self.arc_num] {
            0.0
        } else {
            self.art_cost
        }
    }
}

pub(crate) fn network_simplex(cost: &[f64], n: usize, m: usize, a: &[f64], b: &[f64]) -> Result<SimplexSolution> {
    assert_eq!(cost.len(), n * m);
    assert_eq!(a.len(), n);
    assert_eq!(b.len(), m);
    let node_num = n + m;
    let root = node_num;
    let arc_num = n * m;
    let max_cost = cost.iter().cloned().fold(0.0f64, f64::max);
    let scale = if max_cost > 0.0 { 1.0 / max_cost } else { 1.0 };
    let art_cost = 2.0 * (node_num as f64 + 1.0);

    let mut supply: Vec<f64> = a.iter().cloned().chain(b.iter().map(|x| -x)).collect();
    let sum: f64 = supply.iter().sum();
    supply.push(-sum);

    let mut t = Tree {
        n,
        m,
        arc_num,
        root,
        cost,
        scale,
        art_cost,
        art_up: vec![false; node_num],
        parent: vec![NONE; node_num + 1],
        pred: vec![NONE; node_num + 1],
        thread: vec![0; node_num + 1],
        rev_thread: vec![0; node_num + 1],
        succ_num: vec![0; node_num + 1],
        last_succ: vec![0; node_num + 1],
        up: vec![true; node_num + 1],
        pi: vec![0.0; node_num + 1],
        flow: vec![0.0; node_num + 1],
        dirty_revs: Vec::new(),
    };
    t.thread[root] = 0;
    t.rev_thread[0] = root;
    t.succ_num[root] = node_num + 1;
    t.last_succ[root] = root - 1;
    for u in 0..node_num {
        t.parent[u] = root;
        t.pred[u] = arc_num + u;
        t.thread[u] = u + 1;
        t.rev_thread[u + 1] = u;
        t.succ_num[u] = 1;
        t.last_succ[u] = u;
        if supply[u] >= 0.0 {
            t.art_up[u] = true;
            t.up[u] = true;
            t.pi[u] = 0.0;
            t.flow[u] = supply[u];
        } else {
            t.art_up[u] = false;
            t.up[u] = false;
            t.pi[u] = art_cost;
            t.flow[u] = -supply[u];
        }
    }

    let block = ((arc_num as f64).sqrt() as usize).max(10).min(arc_num.max(1));
    let eps = 1e-12;
    let mut next_arc = 0usize;
    let max_iter = 100 * (arc_num + node_num) + 10_000;
    let mut iter = 0usize;

    loop {
        // Block search pivot.
        let mut in_arc = NONE;
        let mut min = -eps;
        let mut cnt = block;
        let mut e = next_arc;
        let mut scanned = 0usize;
        while scanned < arc_num {
            let i = e / m;
            let j = n + e % m;
            let c = cost[e] * scale + t.pi[i] - t.pi[j];
            if c < min {
                min = c;
                in_arc = e;
            }
            e += 1;
            if e == arc_num {
                e = 0;
            }
            scanned += 1;
            cnt -= 1;
            if cnt == 0 {
                if in_arc != NONE {
                    break;
                }
                cnt = block;
            }
        }
        if in_arc == NONE {
            break;
        }
        next_arc = e;
        iter += 1;
        if iter > max_iter {
            return Err(Error::NonConvergence(format!("network simplex exceeded {max_iter} pivots")));
        }

        // Join node.
        let mut u = t.src(in_arc);
        let mut v = t.tgt(in_arc);
        while u != v {
            if t.succ_num[u] < t.succ_num[v] {
                u = t.parent[u];
            } else {
                v = t.parent[v];
            }
        }
        let join = u;

        // Leaving arc.
        let first = t.src(in_arc);
        let second = t.tgt(in_arc);
        let mut delta = f64::INFINITY;
        let mut result = 0;
        let mut u_out = NONE;
        let mut u = first;
        while u != join {
            if t.up[u] && t.flow[u] < delta {
                delta = t.flow[u];
                u_out = u;
                result = 1;
            }
            u = t.parent[u];
        }
        let mut u = second;
        while u != join {
            if !t.up[u] && t.flow[u] <= delta {
                delta = t.flow[u];
                u_out = u;
                result = 2;
            }
            u = t.parent[u];
        }
        if result == 0 {
            return Err(Error::NonConvergence("unbounded transport problem".into()));
        }
        let (u_in, v_in) = if result == 1 { (first, second) } else { (second, first) };

        // Augment along the cycle.
        let in_flow = delta;
        if delta > 0.0 {
            let mut u = first;
            while u != join {
                if t.up[u] {
                    t.flow[u] -= delta;
                } else {
                    t.flow[u] += delta;
                }
                u = t.parent[u];
            }
            let mut u = second;
            while u != join {
                if t.up[u] {
                    t.flow[u] += delta;
                } else {
                    t.flow[u] -= delta;
                }
                u = t.parent[u];
            }
        }

        update_tree(&mut t, in_arc, in_flow, join, u_in, v_in, u_out);

        // Potentials of the re-hung subtree.
        let sigma = if t.up[u_in] {
            t.pi[v_in] - t.pi[u_in] - t.arc_cost(in_arc)
        } else {
            t.pi[v_in] - t.pi[u_in] + t.arc_cost(in_arc)
        };
        let end = t.thread[t.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            t.pi[u] += sigma;
            u = t.thread[u];
        }
    }

    let mut flows = Vec::new();
    let mut total = 0.0;
    for u in 0..node_num {
        let e = t.pred[u];
        if e < arc_num && t.flow[u] > 0.0 {
            let i = e / m;
            let j = e % m;
            flows.push((i, j, t.flow[u]));
            total += t.flow[u] * cost[e];
        }
    }
    flows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let uvec = (0..n).map(|i| -t.pi[i] * max_cost.max(f64::MIN_POSITIVE)).collect::<Vec<_>>();
    let vvec = (0..m).map(|j| t.pi[n + j] * max_cost.max(f64::MIN_POSITIVE)).collect::<Vec<_>>();
    let (uvec, vvec) = if max_cost > 0.0 { (uvec, vvec) } else { (vec![0.0; n], vec![0.0; m]) };
    // Shift potentials so that min φ = 0 (dual objective is invariant).
    let shift = uvec.iter().cloned().fold(f64::INFINITY, f64::min);
    let uvec = uvec.iter().map(|x| x - shift).collect();
    let vvec = vvec.iter().map(|x| x + shift).collect();
    Ok(SimplexSolution { flows, u: uvec, v: vvec, cost: total })
}

#[allow(clippy::too_many_arguments)]
fn update_tree(t: &mut Tree, in_arc: usize, in_flow: f64, join: usize, u_in: usize, v_in: usize, u_out: usize) {
    let old_rev_thread = t.rev_thread[u_out];
    let old_succ_num = t.succ_num[u_out];
    let old_last_succ = t.last_succ[u_out];
    let v_out = t.parent[u_out];
    let in_up = u_in == t.src(in_arc);

    if u_in == u_out {
        t.parent[u_in] = v_in;
        t.pred[u_in] = in_arc;
        t.up[u_in] = in_up;
        t.flow[u_in] = in_flow;
        if t.thread[v_in] != u_out {
            let mut after = t.thread[old_last_succ];
            t.thread[old_rev_thread] = after;
            t.rev_thread[after] = old_rev_thread;
            after = t.thread[v_in];
            t.thread[v_in] = u_out;
            t.rev_thread[u_out] = v_in;
            t.thread[old_last_succ] = after;
            t.rev_thread[after] = old_last_succ;
        }
    } else {
        let thread_continue = if old_rev_thread == v_in { t.thread[old_last_succ] } else { t.thread[v_in] };

        let mut stem = u_in;
        let mut par_stem = v_in;
        let mut last = t.last_succ[u_in];
        let mut after = t.thread[last];
        t.thread[v_in] = u_in;
        t.dirty_revs.clear();
        t.dirty_revs.push(v_in);
        while stem != u_out {
            let next_stem = t.parent[stem];
            t.thread[last] = next_stem;
            t.dirty_revs.push(last);

            let before = t.rev_thread[stem];
            t.thread[before] = after;
            t.rev_thread[after] = before;

            t.parent[stem] = par_stem;
            par_stem = stem;
            stem = next_stem;

            last = if t.last_succ[stem] == t.last_succ[par_stem] { t.rev_thread[par_stem] } else { t.last_succ[stem] };
            after = t.thread[last];
        }
        t.parent[u_out] = par_stem;
        t.thread[last] = thread_continue;
        t.rev_thread[thread_continue] = last;
        t.last_succ[u_out] = last;

        if old_rev_thread != v_in {
            t.thread[old_rev_thread] = after;
            t.rev_thread[after] = old_rev_thread;
        }

        for k in 0..t.dirty_revs.len() {
            let u = t.dirty_revs[k];
            let th = t.thread[u];
            t.rev_thread[th] = u;
        }

        let mut tmp_sc = 0usize;
        let tmp_ls = t.last_succ[u_out];
        let mut u = u_out;
        let mut p = t.parent[u];
        while u != u_in {
            t.pred[u] = t.pred[p];
            t.up[u] = !t.up[p];
            t.flow[u] = t.flow[p];
            tmp_sc = tmp_sc + t.succ_num[u] - t.succ_num[p];
            t.succ_num[u] = tmp_sc;
            t.last_succ[p] = tmp_ls;
            u = p;
            p = t.parent[u];
        }
        t.pred[u_in] = in_arc;
        t.up[u_in] = in_up;
        t.flow[u_in] = in_flow;
        t.succ_num[u_in] = old_succ_num;
    }

    let up_limit_out = if t.last_succ[join] == v_in { join } else { NONE };
    let last_succ_out = t.last_succ[u_out];
    let mut u = v_in;
    while u != NONE && t.last_succ[u] == v_in {
        t.last_succ[u] = last_succ_out;
        u = t.parent[u];
    }

    if join != old_rev_thread && v_in != old_rev_thread {
        let mut u = v_out;
        while u != up_limit_out && u != NONE && t.last_succ[u] == old_last_succ {
            t.last_succ[u] = old_rev_thread;
            u = t.parent[u];
        }
    } else if last_succ_out != old_last_succ {
        let mut u = v_out;
        while u != up_limit_out && u != NONE && t.last_succ[u] == old_last_succ {
            t.last_succ[u] = last_succ_out;
            u = t.parent[u];
        }
    }

    let mut u = v_in;
    while u != join {
        t.succ_num[u] += old_succ_num;
        u = t.parent[u];
    }
    let mut u = v_out;
    while u != join {
        t.succ_num[u] -= old_succ_num;
        u = t.parent[u];
    }
}

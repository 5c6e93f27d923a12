//! Finite Markov decision processes with exactly computable values.
//!
//! Text format (whitespace separated, `#` starts a comment):
//!
//! ```text
//! states 5
//! discount 1          # optional, default 1
//! horizon 10          # optional finite horizon
//! terminal 4
//! action 0 -2.0 1:0.5 2:0.5   # action <state> <utility> <next>:<prob> ...
//! ```
//!
//! Actions of a state are numbered in file order from zero.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::metrics::{weighted_moments, Moments};

pub const CONVERGENCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 100_000;
const ROW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("state {state}: {msg}")]
    Invalid { state: usize, msg: String },
    #[error("discount {0} outside (0, 1]")]
    Discount(f64),
    #[error("value iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("singular policy evaluation system")]
    Singular,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub utility: f64,
    /// `(next state, probability)` pairs.
    pub transitions: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    pub actions: Vec<Vec<Action>>,
    pub terminal: Vec<bool>,
    pub discount: f64,
    pub horizon: Option<usize>,
}

impl TabularMdp {
    pub fn new(states: usize, discount: f64) -> TabularMdp {
        TabularMdp {
            actions: vec![Vec::new(); states],
            terminal: vec![false; states],
            discount,
            horizon: None,
        }
    }

    pub fn states(&self) -> usize {
        self.actions.len()
    }

    pub fn add_action(&mut self, state: usize, utility: f64, transitions: &[(usize, f64)]) -> usize {
        self.actions[state].push(Action {
            utility,
            transitions: transitions.to_vec(),
        });
        self.actions[state].len() - 1
    }

    pub fn set_terminal(&mut self, state: usize) {
        self.terminal[state] = true;
    }

    pub fn validate(&self) -> Result<(), MdpError> {
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(MdpError::Discount(self.discount));
        }
        let n = self.states();
        let invalid = |state, msg: &str| MdpError::Invalid {
            state,
            msg: msg.to_string(),
        };
        for s in 0..n {
            match (self.terminal[s], self.actions[s].is_empty()) {
                (true, false) => return Err(invalid(s, "terminal state has actions")),
                (false, true) => return Err(invalid(s, "non-terminal state has no actions")),
                _ => {}
            }
            for a in &self.actions[s] {
                if !a.utility.is_finite() {
                    return Err(invalid(s, "utility is not finite"));
                }
                let mut sum = 0.0;
                for &(t, p) in &a.transitions {
                    if t >= n {
                        return Err(invalid(s, "transition to unknown state"));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        return Err(invalid(s, "probability outside [0, 1]"));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(invalid(s, &format!("transition row sums to {sum}")));
                }
            }
        }
        Ok(())
    }

    /// States in an order where every successor comes first, if the
    /// positive-probability transition graph is acyclic.
    fn reverse_topological(&self) -> Option<Vec<usize>> {
        let n = self.states();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; n];
        let mut order = Vec::with_capacity(n);
        for root in 0..n {
            if mark[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            mark[root] = 1;
            while let Some(&mut (s, ref mut next)) = stack.last_mut() {
                let succ: Vec<usize> = self.actions[s]
                    .iter()
                    .flat_map(|a| a.transitions.iter().filter(|t| t.1 > 0.0).map(|t| t.0))
                    .collect();
                if *next < succ.len() {
                    let t = succ[*next];
                    *next += 1;
                    match mark[t] {
                        0 => {
                            mark[t] = 1;
                            stack.push((t, 0));
                        }
                        1 => return None,
                        _ => {}
                    }
                } else {
                    mark[s] = 2;
                    order.push(s);
                    stack.pop();
                }
            }
        }
        Some(order)
    }

    /// Applies the Bellman operator once: `u + γ Σ P max_a Q`.
    fn backup(&self, q: &QTable) -> QTable {
        let v = q.values();
        QTable {
            q: self
                .actions
                .iter()
                .map(|acts| {
                    acts.iter()
                        .map(|a| {
                            a.utility
                                + self.discount
                                    * a.transitions.iter().map(|&(t, p)| p * v[t]).sum::<f64>()
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<TabularMdp, MdpError> {
        let mut mdp: Option<TabularMdp> = None;
        let mut discount = 1.0;
        let mut horizon = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: &str| MdpError::Parse {
                line,
                msg: msg.to_string(),
            };
            let body = raw.split('#').next().unwrap_or("").trim();
            let mut words = body.split_whitespace();
            let Some(head) = words.next() else { continue };
            let num = |w: Option<&str>| -> Result<f64, MdpError> {
                w.and_then(|v| v.parse().ok()).ok_or_else(|| err("expected a number"))
            };
            let idx = |w: Option<&str>| -> Result<usize, MdpError> {
                w.and_then(|v| v.parse().ok()).ok_or_else(|| err("expected a state index"))
            };
            match head {
                "states" => {
                    if mdp.is_some() {
                        return Err(err("duplicate 'states'"));
                    }
                    mdp = Some(TabularMdp::new(idx(words.next())?, 1.0));
                }
                "discount" => discount = num(words.next())?,
                "horizon" => horizon = Some(idx(words.next())?),
                "terminal" | "action" => {
                    let m = mdp.as_mut().ok_or_else(|| err("'states' must come first"))?;
                    let n = m.states();
                    if head == "terminal" {
                        for w in words {
                            let s = idx(Some(w))?;
                            if s >= n {
                                return Err(err("state out of range"));
                            }
                            m.set_terminal(s);
                        }
                    } else {
                        let s = idx(words.next())?;
                        if s >= n {
                            return Err(err("state out of range"));
                        }
                        let u = num(words.next())?;
                        let mut transitions = Vec::new();
                        for w in words {
                            let (t, p) = w.split_once(':').ok_or_else(|| err("expected next:prob"))?;
                            transitions.push((idx(Some(t))?, num(Some(p))?));
                        }
                        m.add_action(s, u, &transitions);
                    }
                }
                _ => return Err(err(&format!("unknown directive '{head}'"))),
            }
        }
        let mut mdp = mdp.ok_or(MdpError::Parse {
            line: 0,
            msg: "missing 'states'".into(),
        })?;
        mdp.discount = discount;
        mdp.horizon = horizon;
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn render(&self) -> String {
        let mut out = format!("states {}\ndiscount {}\n", self.states(), self.discount);
        if let Some(h) = self.horizon {
            let _ = writeln!(out, "horizon {h}");
        }
        let terminals: Vec<String> = (0..self.states())
            .filter(|&s| self.terminal[s])
            .map(|s| s.to_string())
            .collect();
        if !terminals.is_empty() {
            let _ = writeln!(out, "terminal {}", terminals.join(" "));
        }
        for (s, acts) in self.actions.iter().enumerate() {
            for a in acts {
                let _ = write!(out, "action {s} {}", a.utility);
                for (t, p) in &a.transitions {
                    let _ = write!(out, " {t}:{p}");
                }
                out.push('\n');
            }
        }
        out
    }

    /// Relabels states: old state `s` becomes `perm[s]`.
    pub fn permuted(&self, perm: &[usize]) -> TabularMdp {
        let n = self.states();
        let mut out = TabularMdp::new(n, self.discount);
        out.horizon = self.horizon;
        for s in 0..n {
            out.terminal[perm[s]] = self.terminal[s];
            out.actions[perm[s]] = self.actions[s]
                .iter()
                .map(|a| Action {
                    utility: a.utility,
                    transitions: a.transitions.iter().map(|&(t, p)| (perm[t], p)).collect(),
                })
                .collect();
        }
        out
    }

    /// Multiplies every utility by `lambda`.
    pub fn scaled(&self, lambda: f64) -> TabularMdp {
        let mut out = self.clone();
        for a in out.actions.iter_mut().flatten() {
            a.utility *= lambda;
        }
        out
    }
}

/// Action values, one row per state (terminal rows are empty).
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    pub q: Vec<Vec<f64>>,
}

impl QTable {
    pub fn zeros(mdp: &TabularMdp) -> QTable {
        QTable {
            q: mdp.actions.iter().map(|a| vec![0.0; a.len()]).collect(),
        }
    }

    /// `max_a Q(s, a)`, zero for terminal states.
    pub fn value(&self, s: usize) -> f64 {
        self.q[s].iter().copied().fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x)))).unwrap_or(0.0)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.q.len()).map(|s| self.value(s)).collect()
    }

    /// Lowest-index maximiser, `None` for terminal states.
    pub fn best_action(&self, s: usize) -> Option<usize> {
        let row = &self.q[s];
        let mut best: Option<usize> = None;
        for (i, &x) in row.iter().enumerate() {
            if best.is_none_or(|b| x > row[b]) {
                best = Some(i);
            }
        }
        best
    }

    pub fn policy(&self) -> Vec<Option<usize>> {
        (0..self.q.len()).map(|s| self.best_action(s)).collect()
    }

    fn distance(&self, other: &QTable) -> f64 {
        self.q
            .iter()
            .flatten()
            .zip(other.q.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Solves for the optimal action values: backward induction for a finite
/// horizon or an acyclic undiscounted problem, value iteration otherwise.
pub fn solve(mdp: &TabularMdp) -> Result<QTable, MdpError> {
    mdp.validate()?;
    if let Some(h) = mdp.horizon {
        let mut q = QTable::zeros(mdp);
        for _ in 0..h {
            q = mdp.backup(&q);
        }
        return Ok(q);
    }
    if mdp.discount == 1.0 {
        if let Some(order) = mdp.reverse_topological() {
            let mut q = QTable::zeros(mdp);
            let mut v = vec![0.0; mdp.states()];
            for s in order {
                for (i, a) in mdp.actions[s].iter().enumerate() {
                    q.q[s][i] = a.utility + a.transitions.iter().map(|&(t, p)| p * v[t]).sum::<f64>();
                }
                v[s] = q.value(s);
            }
            return Ok(q);
        }
    }
    let mut q = QTable::zeros(mdp);
    for _ in 0..MAX_ITERATIONS {
        let next = mdp.backup(&q);
        let delta = next.distance(&q);
        q = next;
        if delta < CONVERGENCE {
            return Ok(q);
        }
    }
    Err(MdpError::NoConvergence(MAX_ITERATIONS))
}

/// `max |Q(s,a) - u(s,a) - γ Σ P V(s*)|` for the stationary operator.
pub fn bellman_residual(mdp: &TabularMdp, q: &QTable) -> f64 {
    mdp.backup(q).distance(q)
}

/// Actions with negative value whose every reachable successor has
/// strictly positive value.
pub fn find_gambit_actions(mdp: &TabularMdp, q: &QTable) -> Vec<(usize, usize)> {
    let v = q.values();
    let mut out = Vec::new();
    for (s, acts) in mdp.actions.iter().enumerate() {
        for (i, a) in acts.iter().enumerate() {
            let upside = a.transitions.iter().filter(|t| t.1 > 0.0).all(|&(t, _)| v[t] > 0.0);
            if q.q[s][i] < 0.0 && upside {
                out.push((s, i));
            }
        }
    }
    out
}

/// Mean, spread and skew of successor values under the action's transition
/// probabilities.
pub fn continuation_skew(mdp: &TabularMdp, q: &QTable, s: usize, a: usize) -> Moments {
    let v = q.values();
    let (p, x): (Vec<f64>, Vec<f64>) = mdp.actions[s][a]
        .transitions
        .iter()
        .map(|&(t, p)| (p, v[t]))
        .unzip();
    weighted_moments(&p, &x)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn linear_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, MdpError> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-14 {
            return Err(MdpError::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

/// Values of a stationary policy (`None` at terminal states).
pub fn evaluate_policy(mdp: &TabularMdp, policy: &[Option<usize>]) -> Result<Vec<f64>, MdpError> {
    let n = mdp.states();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        a[s][s] = 1.0;
        if let Some(i) = policy[s] {
            let act = &mdp.actions[s][i];
            b[s] = act.utility;
            for &(t, p) in &act.transitions {
                a[s][t] -= mdp.discount * p;
            }
        }
    }
    linear_solve(a, b)
}

/// Exhaustive search over all stationary deterministic policies. Returns
/// the first policy (in lexicographic order) whose values are within `tol`
/// of the best found at every state, with those values.
pub fn brute_force_optimum(
    mdp: &TabularMdp,
    tol: f64,
) -> Result<(Vec<Option<usize>>, Vec<f64>), MdpError> {
    let n = mdp.states();
    let counts: Vec<usize> = mdp.actions.iter().map(|a| a.len()).collect();
    let mut all = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        let policy: Vec<Option<usize>> = (0..n)
            .map(|s| (counts[s] > 0).then_some(choice[s]))
            .collect();
        let v = evaluate_policy(mdp, &policy)?;
        all.push((policy, v));
        // Odometer increment, last state fastest.
        let mut s = n;
        loop {
            if s == 0 {
                let best: Vec<f64> = (0..n)
                    .map(|i| all.iter().map(|(_, v)| v[i]).fold(f64::NEG_INFINITY, f64::max))
                    .collect();
                let winner = all
                    .into_iter()
                    .find(|(_, v)| v.iter().zip(&best).all(|(a, b)| (a - b).abs() <= tol))
                    .ok_or(MdpError::Singular)?;
                return Ok(winner);
            }
            s -= 1;
            if counts[s] == 0 {
                continue;
            }
            choice[s] += 1;
            if choice[s] < counts[s] {
                break;
            }
            choice[s] = 0;
        }
    }
}

/// A random MDP without terminal states: every state gets between one and
/// `max_actions` actions with utilities in `[-1, 1]` and random transition
/// rows.
pub fn random_mdp<R: Rng>(rng: &mut R, states: usize, max_actions: usize, discount: f64) -> TabularMdp {
    let mut mdp = TabularMdp::new(states, discount);
    for s in 0..states {
        for _ in 0..rng.gen_range(1..=max_actions) {
            let weights: Vec<f64> = (0..states)
                .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() })
                .collect();
            let total: f64 = weights.iter().sum();
            let row: Vec<(usize, f64)> = if total == 0.0 {
                vec![(rng.gen_range(0..states), 1.0)]
            } else {
                weights
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(t, &w)| (t, w / total))
                    .collect()
            };
            mdp.add_action(s, rng.gen_range(-1.0..=1.0), &row);
        }
    }
    mdp
}

/// Five states with one planted gambit: from state 0, action 1 costs two
/// units but leads only to states worth 1 and 0.5. State 3 has a negative
/// action into the terminal state 4, which is worth zero.
pub fn seeded_gambit_mdp() -> TabularMdp {
    let mut m = TabularMdp::new(5, 1.0);
    m.add_action(0, 0.1, &[(4, 1.0)]);
    m.add_action(0, -2.0, &[(1, 0.5), (2, 0.5)]);
    m.add_action(1, 1.0, &[(4, 1.0)]);
    m.add_action(2, 0.5, &[(4, 1.0)]);
    m.add_action(3, -1.0, &[(4, 1.0)]);
    m.set_terminal(4);
    m
}

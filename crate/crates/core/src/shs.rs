//! Generic finite-state age machinery: a discrete Markov chain coupled to a
//! continuous age vector that grows at unit rate and is remapped by a binary
//! matrix whenever a transition fires. Solves for the stationary distribution
//! of the chain and for the stationary age correlation vectors, whose sum
//! gives the long-run average age.

use nalgebra::{DMatrix, DVector};

use crate::error::AoiError;

/// Binary matrix applied to the age row vector when a transition fires:
/// the post-transition age is `x' = x * A`.
///
/// Entries are restricted to {0, 1}; a column of zeros resets that component,
/// a column with a single one copies a component, and the identity leaves the
/// vector untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResetMap {
    dim: usize,
    /// Row-major `dim * dim` entries, each 0 or 1.
    entries: Vec<u8>,
}

impl ResetMap {
    /// Identity map: the age vector passes through the transition unchanged.
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0u8; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        ResetMap { dim, entries }
    }

    /// Builds a map from explicit rows. All rows must have the same length as
    /// the row count and every entry must be 0 or 1.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self, AoiError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(AoiError::InvalidModel("reset map must be non-empty".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(AoiError::InvalidModel(format!(
                    "reset map must be square: got a row of length {} in a {dim}-row map",
                    row.len()
                )));
            }
            for &e in *row {
                if e > 1 {
                    return Err(AoiError::InvalidModel(format!(
                        "reset map entries must be 0 or 1, got {e}"
                    )));
                }
                entries.push(e);
            }
        }
        Ok(ResetMap { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry in row `i`, column `j`.
    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.dim + j]
    }

    /// Applies the map to a row vector: `out_j = sum_i x_i * A_ij`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(
            x.len(),
            self.dim,
            "age vector length must match map dimension"
        );
        let mut out = vec![0.0; self.dim];
        for (i, &xi) in x.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                if self.entry(i, j) == 1 {
                    *o += xi;
                }
            }
        }
        out
    }

    fn is_identity(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.entry(i, j) == u8::from(i == j)))
    }
}

impl std::fmt::Display for ResetMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.entry(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Directed edge of the discrete chain: fires at `rate`, moves the chain from
/// `from` to `to`, and remaps the age vector by `reset`.
///
/// Self-transitions (`from == to`) and parallel transitions between the same
/// state pair with different resets are both permitted.
#[derive(Debug, Clone)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub reset: ResetMap,
}

/// Tolerances for the linear solves. The defaults match the accuracy the
/// dense solver delivers with at most a few hundred states; loosen them only
/// for deliberately ill-conditioned experiments.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Maximum componentwise relative residual accepted for the age system.
    pub residual_tol: f64,
    /// Solution components below `-negative_tol` are treated as a modeling
    /// error; components in `[-negative_tol, 0)` are rounded up to zero.
    pub negative_tol: f64,
    /// Maximum balance-equation residual for the stationary distribution,
    /// relative to the largest transition rate.
    pub stationary_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            residual_tol: 1e-10,
            negative_tol: 1e-9,
            stationary_tol: 1e-12,
        }
    }
}

/// Output of the age fixed point.
#[derive(Debug, Clone)]
pub struct AgeSolution {
    /// Stationary distribution of the discrete chain.
    pub pi: Vec<f64>,
    /// Per-state age correlation vectors, `v[q][j] = E[x_j * 1{state q}]`
    /// in stationarity; all components are non-negative.
    pub v: Vec<Vec<f64>>,
    /// Expected age vector `E[x] = sum_q v[q]`.
    pub age_vector: Vec<f64>,
    /// Average age at the monitor: the last component of `age_vector`.
    pub delta: f64,
}

/// A finite-state chain with per-state age drift and reset maps on every
/// transition. `age_dim` is the length of the continuous age vector; the
/// monitor age is by convention its last component.
#[derive(Debug, Clone)]
pub struct ShsModel {
    num_states: usize,
    age_dim: usize,
    transitions: Vec<Transition>,
    /// Growth rate of each age component in each state; `drift[q][j]` is the
    /// slope of component `j` while the chain sits in state `q`.
    drift: Vec<Vec<f64>>,
}

impl ShsModel {
    /// Builds a model with unit drift (every age component grows at rate 1 in
    /// every state), validating indices, rates, and reset dimensions.
    pub fn new(
        num_states: usize,
        age_dim: usize,
        transitions: Vec<Transition>,
    ) -> Result<Self, AoiError> {
        let drift = vec![vec![1.0; age_dim]; num_states];
        Self::with_drift(num_states, age_dim, transitions, drift)
    }

    /// Builds a model with an explicit per-state drift vector.
    pub fn with_drift(
        num_states: usize,
        age_dim: usize,
        transitions: Vec<Transition>,
        drift: Vec<Vec<f64>>,
    ) -> Result<Self, AoiError> {
        if num_states == 0 {
            return Err(AoiError::InvalidModel("num_states must be positive".into()));
        }
        if age_dim == 0 {
            return Err(AoiError::InvalidModel("age_dim must be positive".into()));
        }
        if drift.len() != num_states || drift.iter().any(|d| d.len() != age_dim) {
            return Err(AoiError::InvalidModel(format!(
                "drift must provide one length-{age_dim} vector per state"
            )));
        }
        if drift.iter().flatten().any(|d| !d.is_finite()) {
            return Err(AoiError::InvalidModel(
                "drift entries must be finite".into(),
            ));
        }
        for (idx, t) in transitions.iter().enumerate() {
            if t.from >= num_states || t.to >= num_states {
                return Err(AoiError::InvalidModel(format!(
                    "transition {idx} references state {} -> {} outside 0..{num_states}",
                    t.from, t.to
                )));
            }
            if !(t.rate > 0.0 && t.rate.is_finite()) {
                return Err(AoiError::InvalidModel(format!(
                    "transition {idx} has non-positive or non-finite rate {}",
                    t.rate
                )));
            }
            if t.reset.dim() != age_dim {
                return Err(AoiError::InvalidModel(format!(
                    "transition {idx} has a {}x{} reset map in an age_dim={age_dim} model",
                    t.reset.dim(),
                    t.reset.dim()
                )));
            }
        }
        let model = ShsModel {
            num_states,
            age_dim,
            transitions,
            drift,
        };
        model.check_strongly_connected()?;
        Ok(model)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn age_dim(&self) -> usize {
        self.age_dim
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Total rate out of state `q`, self-transitions included.
    fn out_rate(&self, q: usize) -> f64 {
        self.transitions
            .iter()
            .filter(|t| t.from == q)
            .map(|t| t.rate)
            .sum()
    }

    fn max_rate(&self) -> f64 {
        self.transitions.iter().map(|t| t.rate).fold(0.0, f64::max)
    }

    /// Every state must reach every other state through positive-rate
    /// transitions, otherwise no unique stationary distribution exists.
    /// Equivalent check: all states are reachable from state 0 and state 0 is
    /// reachable from all states.
    fn check_strongly_connected(&self) -> Result<(), AoiError> {
        let reach = |reverse: bool| -> Vec<bool> {
            let mut seen = vec![false; self.num_states];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(q) = stack.pop() {
                for t in &self.transitions {
                    let (src, dst) = if reverse {
                        (t.to, t.from)
                    } else {
                        (t.from, t.to)
                    };
                    if src == q && !seen[dst] {
                        seen[dst] = true;
                        stack.push(dst);
                    }
                }
            }
            seen
        };
        let fwd = reach(false);
        let bwd = reach(true);
        for q in 0..self.num_states {
            if !fwd[q] {
                return Err(AoiError::NonErgodic(format!(
                    "state {q} is unreachable from state 0"
                )));
            }
            if !bwd[q] {
                return Err(AoiError::NonErgodic(format!(
                    "state 0 is unreachable from state {q}"
                )));
            }
        }
        Ok(())
    }

    /// Stationary distribution of the discrete chain with default tolerances.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>, AoiError> {
        self.stationary_distribution_with(&SolveOptions::default())
    }

    /// Stationary distribution via the balance equations: for every state,
    /// outflow `pi_q * sum(outgoing rates)` equals inflow
    /// `sum(rate_l * pi_{from_l})` over incoming transitions. One redundant
    /// balance row is replaced by the normalization `sum(pi) = 1`; the row
    /// with the largest diagonal is chosen to keep the system well scaled.
    pub fn stationary_distribution_with(&self, opts: &SolveOptions) -> Result<Vec<f64>, AoiError> {
        self.check_strongly_connected()?;
        let n = self.num_states;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for t in &self.transitions {
            a[(t.from, t.from)] += t.rate;
            a[(t.to, t.from)] -= t.rate;
        }
        let mut replace = 0usize;
        for q in 1..n {
            if a[(q, q)] > a[(replace, replace)] {
                replace = q;
            }
        }
        for j in 0..n {
            a[(replace, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[replace] = 1.0;

        let pi = a
            .clone()
            .lu()
            .solve(&b)
            .ok_or_else(|| AoiError::SingularSystem("balance equations".into()))?;

        let mut out = Vec::with_capacity(n);
        for (q, &p) in pi.iter().enumerate() {
            if p < -opts.negative_tol {
                return Err(AoiError::NegativeSolution { state: q, value: p });
            }
            out.push(p.max(0.0));
        }
        let residual = self.stationary_residual(&out);
        if residual.is_nan() || residual > opts.stationary_tol {
            return Err(AoiError::SingularSystem(format!(
                "stationary residual {residual:.3e} exceeds {:.1e}",
                opts.stationary_tol
            )));
        }
        Ok(out)
    }

    /// Largest violation of the balance equations and the normalization for a
    /// candidate distribution, relative to the largest transition rate.
    pub fn stationary_residual(&self, pi: &[f64]) -> f64 {
        assert_eq!(pi.len(), self.num_states);
        let scale = self.max_rate();
        let mut worst = (pi.iter().sum::<f64>() - 1.0).abs();
        for q in 0..self.num_states {
            let mut r = pi[q] * self.out_rate(q);
            for t in self.transitions.iter().filter(|t| t.to == q) {
                r -= t.rate * pi[t.from];
            }
            worst = worst.max(r.abs() / scale);
        }
        worst
    }

    /// Solves the age fixed point with default tolerances.
    pub fn solve_age(&self) -> Result<AgeSolution, AoiError> {
        self.solve_age_with(&SolveOptions::default())
    }

    /// Solves for the stationary age correlation vectors: for every state q,
    ///
    /// ```text
    /// v_q * sum(outgoing rates) = drift_q * pi_q
    ///                           + sum over incoming l of rate_l * (v_{from_l} * A_l)
    /// ```
    ///
    /// Reset maps mix age components, so the equations are assembled and
    /// solved as one dense system of `num_states * age_dim` unknowns. The
    /// average age vector is the sum of the `v_q` and the scalar average age
    /// is its last (monitor) component.
    pub fn solve_age_with(&self, opts: &SolveOptions) -> Result<AgeSolution, AoiError> {
        let pi = self.stationary_distribution_with(opts)?;
        let n = self.num_states;
        let d = self.age_dim;
        let size = n * d;
        let idx = |q: usize, j: usize| q * d + j;

        let mut m = DMatrix::<f64>::zeros(size, size);
        let mut b = DVector::<f64>::zeros(size);
        for q in 0..n {
            let out = self.out_rate(q);
            for j in 0..d {
                m[(idx(q, j), idx(q, j))] += out;
                b[idx(q, j)] = self.drift[q][j] * pi[q];
            }
        }
        for t in &self.transitions {
            for i in 0..d {
                for j in 0..d {
                    if t.reset.entry(i, j) == 1 {
                        m[(idx(t.to, j), idx(t.from, i))] -= t.rate;
                    }
                }
            }
        }

        let x = m
            .clone()
            .lu()
            .solve(&b)
            .ok_or_else(|| AoiError::SingularSystem("age correlation equations".into()))?;

        let residual = max_relative_residual(&m, &x, &b);
        if residual.is_nan() || residual > opts.residual_tol {
            return Err(AoiError::SingularSystem(format!(
                "age system residual {residual:.3e} exceeds {:.1e}",
                opts.residual_tol
            )));
        }

        let mut v = vec![vec![0.0; d]; n];
        for q in 0..n {
            for j in 0..d {
                let val = x[idx(q, j)];
                if val < -opts.negative_tol {
                    return Err(AoiError::NegativeSolution {
                        state: q,
                        value: val,
                    });
                }
                v[q][j] = val.max(0.0);
            }
        }
        let mut age_vector = vec![0.0; d];
        for vq in &v {
            for (a, &c) in age_vector.iter_mut().zip(vq) {
                *a += c;
            }
        }
        let delta = age_vector[d - 1];
        Ok(AgeSolution {
            pi,
            v,
            age_vector,
            delta,
        })
    }

    /// Largest componentwise relative residual of the age equations for a
    /// candidate solution; small values certify the fixed point.
    pub fn age_residual(&self, sol: &AgeSolution) -> f64 {
        let d = self.age_dim;
        let mut worst: f64 = 0.0;
        for q in 0..self.num_states {
            let out = self.out_rate(q);
            for j in 0..d {
                let lhs = sol.v[q][j] * out;
                let mut rhs = self.drift[q][j] * sol.pi[q];
                let mut scale = lhs.abs() + rhs.abs();
                for t in self.transitions.iter().filter(|t| t.to == q) {
                    for i in 0..d {
                        if t.reset.entry(i, j) == 1 {
                            let term = t.rate * sol.v[t.from][i];
                            rhs += term;
                            scale += term.abs();
                        }
                    }
                }
                if scale > 0.0 {
                    worst = worst.max((lhs - rhs).abs() / scale);
                } else {
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }
}

/// One line per state count, then one line per transition with its reset map,
/// e.g. `1 -> 0 @ 0.8 reset [[1,1],[0,0]]`.
impl std::fmt::Display for ShsModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "states: {}, age_dim: {}, transitions: {}",
            self.num_states,
            self.age_dim,
            self.transitions.len()
        )?;
        for t in &self.transitions {
            write!(f, "{} -> {} @ {}", t.from, t.to, t.rate)?;
            if t.reset.is_identity() {
                writeln!(f, " reset identity")?;
            } else {
                writeln!(f, " reset {}", t.reset)?;
            }
        }
        Ok(())
    }
}

/// Componentwise relative backward error of `M x = b`: each row's residual is
/// scaled by the magnitudes actually summed in that row, so the measure stays
/// meaningful when row scales differ by orders of magnitude. Rows whose whole
/// scale sits below the roundoff floor of the largest row carry only
/// subnormal noise and are measured against that floor instead, so a
/// deep-underflow tail cannot fail an otherwise well-solved system.
fn max_relative_residual(m: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = m.nrows();
    let mut residuals = vec![0.0f64; n];
    let mut scales = vec![0.0f64; n];
    for r in 0..n {
        let mut sum = -b[r];
        let mut scale = b[r].abs();
        for c in 0..m.ncols() {
            let term = m[(r, c)] * x[c];
            sum += term;
            scale += term.abs();
        }
        residuals[r] = sum.abs();
        scales[r] = scale;
    }
    let floor = f64::EPSILON * scales.iter().cloned().fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for r in 0..n {
        let denominator = scales[r].max(floor);
        if denominator > 0.0 {
            worst = worst.max(residuals[r] / denominator);
        } else {
            worst = worst.max(residuals[r]);
        }
    }
    worst
}

//! Optimistic FTRL with a logarithmic regularizer on lifted tree-structured
//! polytopes.
//!
//! The learner's domain is a sequence-form polytope (or a simplex, its
//! one-infoset special case) described by a [`TreePolytope`]. Updates
//! maximize `eta * <S, (lambda, y)> + log lambda + sum_e log y[e]` over the
//! lifted set `{(lambda, y) : lambda in [0,1], y in lambda * Q}`, where `S`
//! is the running utility sum plus a one-step-recency prediction. The played
//! point is `X = y / lambda`, which stays strictly interior.
//!
//! The lifted set is encoded as the polytope's flow constraints with root
//! mass `lambda` plus the bound `lambda <= 1`; the upper bound carries no
//! barrier term. The solver first pins `lambda = 1` and solves the
//! equality-constrained barrier problem by damped Newton on the reduced KKT
//! system; the sign of the bound's KKT multiplier then certifies the pinned
//! solution or sends the solve to the interior problem with `lambda` free.
//! A projected-gradient loop backs up Newton if it stalls.

use super::{LearnerError, Phase, RegretMinimizer};
use crate::efg::index::TreePolytope;
use crate::scalar::{is_positive, real, Real};
use crate::linalg::solve_in_place;

/// An element of the lifted polytope: `y` satisfies the flow constraints
/// with root mass `lambda`, every coordinate strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint<R> {
    pub lambda: R,
    pub y: Vec<R>,
}

impl<R: Real> LiftedPoint<R> {
    /// The de-homogenized point `X = y / lambda` of the base polytope.
    pub fn point(&self) -> Vec<R> {
        self.y.iter().map(|v| *v / self.lambda).collect()
    }

    /// The `(lambda, y)` coordinates as one vector, `lambda` first.
    pub fn lifted(&self) -> Vec<R> {
        let mut out = Vec::with_capacity(1 + self.y.len());
        out.push(self.lambda);
        out.extend_from_slice(&self.y);
        out
    }
}

/// Lifts a utility vector at the learner's current point: the scalar slot is
/// `-<x, u>`, the vector slot is `u`, so the lift of the current play earns
/// zero: `<lift, (lambda, lambda * x)> = 0` for every `lambda`.
pub fn lift_utility<R: Real>(u: &[R], x: &[R]) -> Vec<R> {
    debug_assert_eq!(u.len(), x.len());
    let inner = u
        .iter()
        .zip(x)
        .fold(R::zero(), |acc, (a, b)| acc + *a * *b);
    let mut out = Vec::with_capacity(1 + u.len());
    out.push(-inner);
    out.extend_from_slice(u);
    out
}

/// Cumulative optimistic-FTRL state over lifted utilities. The prediction
/// is one-step recency: `S = last + sum of past utilities`.
#[derive(Debug, Clone)]
pub struct OftrlState<R> {
    pub eta: R,
    cum: Vec<R>,
    last: Vec<R>,
}

impl<R: Real> OftrlState<R> {
    /// Fresh state for a lifted domain of `dim` base coordinates.
    pub fn new(eta: R, dim: usize) -> Self {
        OftrlState {
            eta,
            cum: vec![R::zero(); dim + 1],
            last: vec![R::zero(); dim + 1],
        }
    }

    /// Absorbs one lifted utility.
    pub fn push(&mut self, lifted_utility: &[R]) {
        debug_assert_eq!(lifted_utility.len(), self.cum.len());
        for (c, u) in self.cum.iter_mut().zip(lifted_utility) {
            *c = *c + *u;
        }
        self.last.copy_from_slice(lifted_utility);
    }

    /// The optimistic sum `S = last + cum`, scaled by `eta`.
    pub fn scaled_objective(&self) -> Vec<R> {
        self.cum
            .iter()
            .zip(&self.last)
            .map(|(c, l)| self.eta * (*c + *l))
            .collect()
    }

    pub fn last(&self) -> &[R] {
        &self.last
    }
}

/// Solver knobs. Defaults: KKT tolerance 1e-11 in the local norm, 100
/// Newton iterations, 200 projected-gradient fallback iterations.
#[derive(Debug, Clone)]
pub struct SolveOptions<R> {
    pub tol: R,
    pub max_newton: usize,
    pub max_fallback: usize,
}

impl<R: Real> Default for SolveOptions<R> {
    fn default() -> Self {
        SolveOptions {
            tol: real(1e-11),
            max_newton: 100,
            max_fallback: 200,
        }
    }
}

/// One barrier step: the unique maximizer of the lifted objective, solved
/// to first-order optimality (see [`SolveOptions::tol`]). `warm` seeds the
/// Newton iteration when available.
pub fn lrl_oftrl_step<R: Real>(
    state: &OftrlState<R>,
    shape: &TreePolytope,
    warm: Option<&LiftedPoint<R>>,
    opts: &SolveOptions<R>,
) -> Result<LiftedPoint<R>, LearnerError> {
    let objective = state.scaled_objective();
    debug_assert_eq!(objective.len(), shape.dim + 1);

    // Pinned problem: lambda = 1, variables y.
    let sys_a = ConstraintSystem::pinned(shape);
    let c_a = &objective[1..];
    let start_a: Vec<R> = match warm {
        Some(w) => w.y.iter().map(|v| *v / w.lambda).collect(),
        None => shape.uniform(),
    };
    let (y, nu) = solve_barrier(c_a, &sys_a, start_a, opts)?;

    // KKT multiplier of the bound lambda <= 1.
    let mut mu = objective[0] + R::one();
    for (g, group) in shape.groups.iter().enumerate() {
        if group.parent.is_none() {
            mu = mu + nu[g];
        }
    }
    if mu >= R::zero() {
        return Ok(LiftedPoint { lambda: R::one(), y });
    }

    // Interior problem: lambda free, all flow constraints homogeneous.
    let sys_b = ConstraintSystem::lifted(shape);
    let start_b: Vec<R> = {
        let (lambda0, y0): (R, Vec<R>) = match warm {
            Some(w) if w.lambda < real(0.999999) => (w.lambda, w.y.clone()),
            _ => (real(0.9), y.iter().map(|v| *v * real(0.9)).collect()),
        };
        let mut z = Vec::with_capacity(shape.dim + 1);
        z.push(lambda0);
        z.extend(y0);
        z
    };
    let (z, _) = solve_barrier(&objective, &sys_b, start_b, opts)?;
    if z[0] >= R::one() {
        // Borderline multiplier: keep the pinned solution.
        return Ok(LiftedPoint { lambda: R::one(), y });
    }
    Ok(LiftedPoint {
        lambda: z[0],
        y: z[1..].to_vec(),
    })
}

/// Sparse description of the equality constraints `A z = b` of one solve.
/// Every coefficient is +1 (group member) or -1 (parent / lambda).
struct ConstraintSystem<R> {
    n: usize,
    rows: Vec<Row>,
    rhs: Vec<R>,
    /// Per variable: (row, coefficient) incidences.
    incidence: Vec<Vec<(usize, i8)>>,
}

struct Row {
    first: usize,
    len: usize,
    parent: Option<usize>,
}

impl<R: Real> ConstraintSystem<R> {
    /// `lambda = 1`: variables are the base coordinates, root groups sum
    /// to one.
    fn pinned(shape: &TreePolytope) -> Self {
        let rows: Vec<Row> = shape
            .groups
            .iter()
            .map(|g| Row {
                first: g.first,
                len: g.len,
                parent: g.parent,
            })
            .collect();
        let rhs = shape
            .groups
            .iter()
            .map(|g| if g.parent.is_none() { R::one() } else { R::zero() })
            .collect();
        Self::finish(shape.dim, rows, rhs)
    }

    /// Variables `(lambda, y)`: root groups sum to `lambda`, so every
    /// constraint is homogeneous.
    fn lifted(shape: &TreePolytope) -> Self {
        let rows: Vec<Row> = shape
            .groups
            .iter()
            .map(|g| Row {
                first: g.first + 1,
                len: g.len,
                parent: Some(g.parent.map_or(0, |p| p + 1)),
            })
            .collect();
        let rhs = vec![R::zero(); shape.groups.len()];
        Self::finish(shape.dim + 1, rows, rhs)
    }

    fn finish(n: usize, rows: Vec<Row>, rhs: Vec<R>) -> Self {
        let mut incidence: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for entry in incidence[row.first..row.first + row.len].iter_mut() {
                entry.push((r, 1i8));
            }
            if let Some(p) = row.parent {
                incidence[p].push((r, -1i8));
            }
        }
        ConstraintSystem {
            n,
            rows,
            rhs,
            incidence,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    /// `A z` minus the right-hand side.
    fn residual(&self, z: &[R]) -> Vec<R> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| {
                let mut acc = -*b;
                for zi in &z[row.first..row.first + row.len] {
                    acc = acc + *zi;
                }
                if let Some(p) = row.parent {
                    acc = acc - z[p];
                }
                acc
            })
            .collect()
    }

    /// Least-squares multipliers of `grad - A^T nu = 0` in the metric
    /// `diag(w)`: solves `(A W A^T) nu = A W grad`.
    fn multipliers(&self, grad: &[R], weight: &[R]) -> Result<Vec<R>, LearnerError> {
        let m = self.m();
        let mut mat = vec![R::zero(); m * m];
        let mut rhs = vec![R::zero(); m];
        for e in 0..self.n {
            let w = weight[e];
            let inc = &self.incidence[e];
            for &(r1, c1) in inc {
                let s1 = if c1 > 0 { w } else { -w };
                rhs[r1] = rhs[r1] + s1 * grad[e];
                for &(r2, c2) in inc {
                    let sign = if c1 == c2 { w } else { -w };
                    mat[r1 * m + r2] = mat[r1 * m + r2] + sign;
                }
            }
        }
        solve_in_place(&mut mat, &mut rhs, m).map_err(|_| LearnerError::NonConvergence {
            residual: f64::INFINITY,
            iterations: 0,
        })?;
        Ok(rhs)
    }

    /// `grad - A^T nu`.
    fn stationarity(&self, grad: &[R], nu: &[R]) -> Vec<R> {
        (0..self.n)
            .map(|e| {
                let mut acc = grad[e];
                for &(r, c) in &self.incidence[e] {
                    if c > 0 {
                        acc = acc - nu[r];
                    } else {
                        acc = acc + nu[r];
                    }
                }
                acc
            })
            .collect()
    }
}

fn barrier_value<R: Real>(c: &[R], z: &[R]) -> R {
    z.iter()
        .zip(c)
        .fold(R::zero(), |acc, (zi, ci)| acc + *ci * *zi + zi.ln())
}

/// Damped Newton for `max <c, z> + sum log z` subject to `A z = b`, from a
/// strictly positive feasible start. Returns the solution and constraint
/// multipliers; the scaled stationarity residual `max_e |z_e (g - A^T nu)_e|`
/// is at most `opts.tol` on success.
fn solve_barrier<R: Real>(
    c: &[R],
    sys: &ConstraintSystem<R>,
    start: Vec<R>,
    opts: &SolveOptions<R>,
) -> Result<(Vec<R>, Vec<R>), LearnerError> {
    let mut z = start;
    debug_assert_eq!(z.len(), sys.n);
    debug_assert!(z.iter().all(|v| *v > R::zero()));
    debug_assert!(sys
        .residual(&z)
        .iter()
        .all(|r| r.abs() < R::epsilon().sqrt()));

    let mut weight = vec![R::zero(); sys.n];
    let mut best: Option<(Vec<R>, Vec<R>, R)> = None;
    for _ in 0..opts.max_newton {
        let grad: Vec<R> = z.iter().zip(c).map(|(zi, ci)| *ci + zi.recip()).collect();
        for (w, zi) in weight.iter_mut().zip(&z) {
            *w = *zi * *zi;
        }
        let nu = sys.multipliers(&grad, &weight)?;
        let r = sys.stationarity(&grad, &nu);
        let resid = r
            .iter()
            .zip(&z)
            .fold(R::zero(), |m, (ri, zi)| m.max((*ri * *zi).abs()));
        if best.as_ref().is_none_or(|(_, _, b)| resid < *b) {
            best = Some((z.clone(), nu.clone(), resid));
        }
        if resid <= opts.tol {
            return Ok((z, nu));
        }
        let dz: Vec<R> = r.iter().zip(&weight).map(|(ri, w)| *ri * *w).collect();
        let slope = dz
            .iter()
            .zip(&r)
            .fold(R::zero(), |acc, (d, ri)| acc + *d * *ri);
        if !is_positive(slope) {
            break; // numerically flat; hand over to the fallback
        }
        // Inside the quadratic basin of the self-concordant barrier the
        // pure Newton step is interior (||dz||_z < 1) and the objective
        // plateaus below f64 resolution, so skip the line search.
        let decrement = slope.sqrt();
        if decrement <= real(0.25) {
            for (zi, di) in z.iter_mut().zip(&dz) {
                *zi = *zi + *di;
            }
            continue;
        }
        let mut alpha = R::one();
        for (zi, di) in z.iter().zip(&dz) {
            if *di < R::zero() {
                let cap = -*zi / *di * real(0.99);
                alpha = alpha.min(cap);
            }
        }
        let f0 = barrier_value(c, &z);
        let armijo = real::<R>(1e-4) * slope;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<R> = z
                .iter()
                .zip(&dz)
                .map(|(zi, di)| *zi + alpha * *di)
                .collect();
            if trial.iter().all(|v| *v > R::zero())
                && barrier_value(c, &trial) >= f0 + armijo * alpha
            {
                z = trial;
                accepted = true;
                break;
            }
            alpha = alpha * real(0.5);
        }
        if !accepted {
            break;
        }
    }

    // Projected-gradient fallback, then a final Newton polish pass.
    let (mut z, _, mut resid) = best.expect("at least one Newton iterate");
    let ones = vec![R::one(); sys.n];
    let mut it = 0;
    while resid > opts.tol && it < opts.max_fallback {
        it += 1;
        let grad: Vec<R> = z.iter().zip(c).map(|(zi, ci)| *ci + zi.recip()).collect();
        let nu = sys.multipliers(&grad, &ones)?;
        let dir = sys.stationarity(&grad, &nu);
        let mut alpha = R::one();
        for (zi, di) in z.iter().zip(&dir) {
            if *di < R::zero() {
                alpha = alpha.min(-*zi / *di * real(0.9));
            }
        }
        let f0 = barrier_value(c, &z);
        for _ in 0..60 {
            let trial: Vec<R> = z
                .iter()
                .zip(&dir)
                .map(|(zi, di)| *zi + alpha * *di)
                .collect();
            if trial.iter().all(|v| *v > R::zero()) && barrier_value(c, &trial) > f0 {
                z = trial;
                break;
            }
            alpha = alpha * real(0.5);
        }
        // Newton polish from the improved point.
        for (w, zi) in weight.iter_mut().zip(&z) {
            *w = *zi * *zi;
        }
        let grad: Vec<R> = z.iter().zip(c).map(|(zi, ci)| *ci + zi.recip()).collect();
        let nu = sys.multipliers(&grad, &weight)?;
        let r = sys.stationarity(&grad, &nu);
        resid = r
            .iter()
            .zip(&z)
            .fold(R::zero(), |m, (ri, zi)| m.max((*ri * *zi).abs()));
        if resid <= opts.tol {
            return Ok((z, nu));
        }
    }
    Err(LearnerError::NonConvergence {
        residual: resid.to_f64().unwrap_or(f64::NAN),
        iterations: opts.max_newton + it,
    })
}

/// LRL-OFTRL learner over a tree polytope (use a one-group shape for the
/// simplex). Emits strictly interior points of the base polytope.
#[derive(Debug, Clone)]
pub struct LiftedLearner<R> {
    shape: TreePolytope,
    state: OftrlState<R>,
    opts: SolveOptions<R>,
    current: LiftedPoint<R>,
    needs_solve: bool,
    phase: Phase,
}

impl<R: Real> LiftedLearner<R> {
    /// Creates the learner; the first strategy is the barrier center
    /// (`S = 0`).
    pub fn new(shape: TreePolytope, eta: R) -> Result<Self, LearnerError> {
        let state = OftrlState::new(eta, shape.dim);
        let opts = SolveOptions::default();
        let current = lrl_oftrl_step(&state, &shape, None, &opts)?;
        Ok(LiftedLearner {
            shape,
            state,
            opts,
            current,
            needs_solve: false,
            phase: Phase::ExpectNext,
        })
    }

    /// The lifted iterate the upcoming round will play.
    pub fn current_lifted(&self) -> &LiftedPoint<R> {
        &self.current
    }

    pub fn shape(&self) -> &TreePolytope {
        &self.shape
    }
}

impl<R: Real> RegretMinimizer<R> for LiftedLearner<R> {
    fn next_strategy(&mut self) -> Result<Vec<R>, LearnerError> {
        self.phase.next()?;
        if self.needs_solve {
            self.current =
                lrl_oftrl_step(&self.state, &self.shape, Some(&self.current), &self.opts)?;
            self.needs_solve = false;
        }
        Ok(self.current.point())
    }

    fn observe_utility(&mut self, utility: &[R]) -> Result<(), LearnerError> {
        self.phase.observe()?;
        if utility.len() != self.shape.dim {
            return Err(LearnerError::Dimension {
                got: utility.len(),
                expected: self.shape.dim,
            });
        }
        let x = self.current.point();
        let lifted = lift_utility(utility, &x);
        self.state.push(&lifted);
        self.needs_solve = true;
        Ok(())
    }
}

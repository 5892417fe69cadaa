//! Static equilibrium of the loaded linkage.
//!
//! For a prescribed platform pose t, each chain minimizes its elastic energy
//! subject to the kinematic constraint g(q, theta) = t. Stationarity of the
//! Lagrangian gives three conditions per chain:
//!
//! ```text
//! Jt' lambda = Ktheta theta      (spring balance)
//! Jq' lambda = 0                 (passive joints carry no load)
//! g(q, theta) = t                (closure)
//! ```
//!
//! Each Newton step linearizes the closure, eliminates theta through the
//! spring balance, and solves the bordered system
//!
//! ```text
//! | Jt Kt^-1 Jt'  Jq | |lambda'|   | t - g + Jq q + Jt theta |
//! | Jq'            0 | |  q'   | = | 0                       |
//! ```
//!
//! for the next wrench and passive angles; theta' = Kt^-1 Jt' lambda'.

use nalgebra::Vector6;

use crate::error::{Error, Result};
use crate::linkage::{
    chain_jacobians, chain_pose, ChainState, Matrix8, ParallelogramModel, Vector8,
};
use crate::spatial::Pose;
use crate::stiffness::buckling_indicator;

/// Convergence threshold on the worst stationarity residual.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Newton iteration cap.
pub const DEFAULT_MAX_ITER: usize = 100;
/// Condition-number limit of the bordered system before a configuration is
/// treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;
/// Residual growth for this many consecutive steps is treated as divergence.
const DIVERGENCE_WINDOW: usize = 5;
/// Admissible axial target range as a fraction of bar length.
pub const WORKSPACE_AXIAL_FACTOR: f64 = 1.2;

/// Converged (or capped) state of one chain.
#[derive(Debug, Clone)]
pub struct ChainEquilibrium {
    pub state: ChainState,
    /// Worst stationarity residual at the returned state.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Equilibrium of the whole linkage at a target pose.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub chains: [ChainEquilibrium; 2],
    /// Wrench the fixture must apply to hold the platform at the target.
    pub total_wrench: Vector6<f64>,
    pub target_pose: Pose,
}

impl EquilibriumResult {
    /// Chain states, e.g. for a follow-up stiffness or stability evaluation.
    pub fn states(&self) -> [ChainState; 2] {
        [self.chains[0].state.clone(), self.chains[1].state.clone()]
    }
}

/// Newton iteration for one chain. Returns the capped state with
/// `converged: false` if the iteration limit is reached; singular and
/// diverging configurations are errors.
pub fn solve_chain_equilibrium(
    model: &ParallelogramModel,
    chain: usize,
    target: &Pose,
    initial: &ChainState,
) -> Result<ChainEquilibrium> {
    let k_theta = model.k_theta[chain - 1];
    let k_theta_inv = k_theta
        .cholesky()
        .ok_or_else(|| Error::Config("chain spring matrix not positive-definite".into()))?
        .inverse();

    let mut q = initial.q;
    let mut theta = initial.theta;
    let mut lambda = initial.lambda;
    let mut prev_residual = f64::INFINITY;
    let mut growth_streak = 0usize;

    for it in 0..=DEFAULT_MAX_ITER {
        let pose = chain_pose(model, chain, &q, &theta)?;
        let jac = chain_jacobians(model, chain, &q, &theta)?;
        let gap = *target - pose;
        let residual = (jac.j_theta.transpose() * lambda - k_theta * theta)
            .amax()
            .max((jac.j_q.transpose() * lambda).amax())
            .max(gap.amax());

        let state = ChainState { q, theta, lambda };
        if residual < DEFAULT_TOL {
            return Ok(ChainEquilibrium {
                state,
                residual,
                iterations: it,
                converged: true,
            });
        }
        if it == DEFAULT_MAX_ITER {
            return Ok(ChainEquilibrium {
                state,
                residual,
                iterations: it,
                converged: false,
            });
        }
        if residual > prev_residual {
            growth_streak += 1;
            if growth_streak >= DIVERGENCE_WINDOW {
                return Err(Error::Diverged {
                    iterations: it,
                    residual,
                });
            }
        } else {
            growth_streak = 0;
        }
        prev_residual = residual;

        let mut sys = Matrix8::zeros();
        sys.fixed_view_mut::<6, 6>(0, 0)
            .copy_from(&(jac.j_theta * k_theta_inv * jac.j_theta.transpose()));
        sys.fixed_view_mut::<6, 2>(0, 6).copy_from(&jac.j_q);
        sys.fixed_view_mut::<2, 6>(6, 0)
            .copy_from(&jac.j_q.transpose());

        let sv = sys.singular_values();
        let mut smax: f64 = 0.0;
        let mut smin = f64::INFINITY;
        for &s in sv.iter() {
            smax = smax.max(s);
            smin = smin.min(s);
        }
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > SINGULAR_CONDITION {
            return Err(Error::SingularConfiguration {
                condition,
                limit: SINGULAR_CONDITION,
            });
        }

        let mut rhs = Vector8::zeros();
        rhs.fixed_rows_mut::<6>(0)
            .copy_from(&(gap + jac.j_q * q + jac.j_theta * theta));
        let sol = sys
            .full_piv_lu()
            .solve(&rhs)
            .ok_or(Error::SingularConfiguration {
                condition,
                limit: SINGULAR_CONDITION,
            })?;
        lambda = sol.fixed_rows::<6>(0).into_owned();
        q = sol.fixed_rows::<2>(6).into_owned();
        theta = k_theta_inv * jac.j_theta.transpose() * lambda;
    }
    unreachable!("loop returns at the iteration cap")
}

fn solved_chain(
    model: &ParallelogramModel,
    chain: usize,
    target: &Pose,
    initial: &ChainState,
) -> Result<ChainEquilibrium> {
    let eq = solve_chain_equilibrium(model, chain, target, initial)?;
    if !eq.converged {
        return Err(Error::NoConvergence {
            iterations: eq.iterations,
            residual: eq.residual,
        });
    }
    if let Some(violation) = eq.state.elastic_range_violation(model) {
        return Err(Error::ElasticRange(format!("chain {chain}: {violation}")));
    }
    Ok(eq)
}

/// Solve both chains against a common platform target and sum the endpoint
/// wrenches. Targets outside the axial workspace band, non-converged chains,
/// and converged states outside the elastic range are all errors.
pub fn solve_parallelogram(
    model: &ParallelogramModel,
    target: &Pose,
    initial: Option<&[ChainState; 2]>,
) -> Result<EquilibriumResult> {
    let limit = WORKSPACE_AXIAL_FACTOR * model.length;
    if !(target[0] > 0.0 && target[0] < limit) {
        return Err(Error::Workspace {
            axial: target[0],
            limit,
        });
    }
    let zero = [ChainState::zero(), ChainState::zero()];
    let init = initial.unwrap_or(&zero);
    let first = solved_chain(model, 1, target, &init[0])?;
    let second = solved_chain(model, 2, target, &init[1])?;
    let total_wrench = first.state.lambda + second.state.lambda;
    Ok(EquilibriumResult {
        chains: [first, second],
        total_wrench,
        target_pose: *target,
    })
}

/// One point of a force-deflection sweep.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    /// Path parameter: displacement along the (normalized) direction.
    pub displacement: f64,
    /// Wrench component along the direction.
    pub wrench_component: f64,
    pub full_wrench: Vector6<f64>,
    /// Buckling indicator at this equilibrium (worst chain).
    pub min_eig_reduced: f64,
    pub converged: bool,
    pub buckled: bool,
}

/// Walk the target pose from the unloaded pose along `direction`, warm-starting
/// each equilibrium from the previous one, and track the stability indicator.
/// Stops at the first step whose indicator is nonpositive (flagged `buckled`).
pub fn force_deflection_sweep(
    model: &ParallelogramModel,
    direction: &Vector6<f64>,
    max_displacement: f64,
    steps: usize,
) -> Result<Vec<SweepRecord>> {
    if steps == 0 {
        return Err(Error::Config("sweep needs at least one step".into()));
    }
    if !(max_displacement > 0.0) {
        return Err(Error::Config(format!(
            "sweep range must be positive, got {max_displacement}"
        )));
    }
    let norm = direction.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Config("sweep direction must be a nonzero vector".into()));
    }
    let dir = direction / norm;
    let base = model.unloaded_pose();
    let mut records = Vec::with_capacity(steps);
    let mut warm: Option<[ChainState; 2]> = None;
    for k in 1..=steps {
        let s = max_displacement * k as f64 / steps as f64;
        let target = base + dir * s;
        let eq = solve_parallelogram(model, &target, warm.as_ref())?;
        let states = eq.states();
        let min_eig = buckling_indicator(model, &states)?;
        let buckled = min_eig <= 0.0;
        records.push(SweepRecord {
            displacement: s,
            wrench_component: eq.total_wrench.dot(&dir),
            full_wrench: eq.total_wrench,
            min_eig_reduced: min_eig,
            converged: eq.chains[0].converged && eq.chains[1].converged,
            buckled,
        });
        if buckled {
            break;
        }
        warm = Some(states);
    }
    Ok(records)
}

//! Linear solves and quasi-static displacement-controlled load stepping.
//!
//! Each load step runs a fixed-point (Picard) iteration on the per-face
//! secant compliance with the damage history frozen: assemble, solve,
//! re-evaluate the cohesive law at every face midpoint, relax the
//! compliance, repeat. The history is committed once the step converges.
//!
//! A face whose history is still zero stays bonded until the traction it
//! transmits reaches the strength envelope; it is then seeded with a small
//! trial separation so the iteration can leave the rigid state, which is
//! otherwise a fixed point of the secant map.

mod linear;

pub use linear::{cholesky_factorizes, linear_solve, pcg, LinearSolver, SolveError, RESIDUAL_TOL};

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector2;
use rayon::prelude::*;
use thiserror::Error;

use crate::cohesive::{
    dissipated_energy, history_separation, mode_mix, secant_compliance, secant_stiffness, strength_ratio,
    update_state, CohesiveError, CohesiveParams, FaceState, SecantCompliance, SecantStiffness,
};
use crate::dg::{DgError, DgModel, FaceOperator, LoadCase};
use crate::mesh::FaceKind;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Dg(#[from] DgError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Cohesive(#[from] CohesiveError),
    #[error("load step to delta = {delta} did not converge after {bisections} bisections (last relative update {last_update:e})")]
    NotConverged {
        delta: f64,
        bisections: usize,
        last_update: f64,
    },
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("load schedule must be finite and nondecreasing, got {0:?}")]
    Schedule(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearSettings {
    /// Relative l2 change of the displacement accepted as converged.
    pub tol_rel: f64,
    pub max_iter: usize,
    /// Under-relaxation of the compliance, `K <- (1 - w) K_old + w K_new`.
    pub relaxation: f64,
    pub max_bisections: usize,
    /// Effective separation given to a face when it first reaches its strength.
    pub initiation_seed: f64,
}

impl Default for NonlinearSettings {
    fn default() -> Self {
        Self {
            tol_rel: 1e-6,
            max_iter: 50,
            relaxation: 0.5,
            max_bisections: 5,
            initiation_seed: 1e-2,
        }
    }
}

impl NonlinearSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol_rel > 0.0) {
            return Err(SolverError::Settings(format!("tol_rel = {} must be positive", self.tol_rel)));
        }
        if self.max_iter == 0 {
            return Err(SolverError::Settings("max_iter must be at least 1".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(SolverError::Settings(format!(
                "relaxation = {} must lie in (0, 1]",
                self.relaxation
            )));
        }
        if !(self.initiation_seed > 0.0 && self.initiation_seed < 1.0) {
            return Err(SolverError::Settings(format!(
                "initiation_seed = {} must lie in (0, 1)",
                self.initiation_seed
            )));
        }
        Ok(())
    }
}

/// Prescribed displacement levels, one per step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadSchedule {
    steps: Vec<f64>,
}

impl LoadSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self, SolverError> {
        if steps.iter().any(|d| !d.is_finite()) || steps.windows(2).any(|w| w[1] < w[0]) {
            return Err(SolverError::Schedule(steps));
        }
        Ok(Self { steps })
    }

    /// `n` equal increments up to `max`.
    pub fn uniform(max: f64, n: usize) -> Result<Self, SolverError> {
        Self::new((1..=n).map(|k| max * k as f64 / n as f64).collect())
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub type LoadFn = Box<dyn Fn(f64) -> LoadCase + Send + Sync>;

/// Everything a quasi-static run needs besides the schedule.
pub struct QuasiStaticProblem {
    pub model: DgModel,
    /// `None` keeps every interface bonded (linear elastic run).
    pub cohesive: Option<CohesiveParams>,
    /// Interior faces allowed to damage; `None` means all.
    pub cohesive_faces: Option<BTreeSet<usize>>,
    /// Interior faces that are traction-free from the start.
    pub initial_failed: BTreeSet<usize>,
    /// Load case for a prescribed displacement level.
    pub load: LoadFn,
    /// Dirichlet tag whose reaction is reported.
    pub reaction_tag: Option<u32>,
    pub settings: NonlinearSettings,
}

impl std::fmt::Debug for QuasiStaticProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuasiStaticProblem")
            .field("model", &self.model)
            .field("cohesive", &self.cohesive)
            .field("initial_failed", &self.initial_failed.len())
            .field("reaction_tag", &self.reaction_tag)
            .field("settings", &self.settings)
            .finish()
    }
}

/// Converged state between load steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub delta: f64,
    pub displacement: Vec<f64>,
    pub faces: Vec<FaceState>,
    pub compliance: Vec<SecantCompliance>,
    pub dissipated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub step: usize,
    pub delta: f64,
    pub displacement: Vec<f64>,
    pub reaction: Vector2<f64>,
    /// Every failed face, including those failed from the start.
    pub failed_faces: BTreeSet<usize>,
    pub iterations: usize,
    pub bisections: usize,
    pub converged: bool,
    /// Energy per unit thickness dissipated in this step.
    pub dissipated: f64,
    pub faces: Vec<FaceState>,
}

/// Outcome of the fixed-point iteration at one displacement level.
struct Iterate {
    displacement: Vec<f64>,
    compliance: Vec<SecantCompliance>,
    iterations: usize,
    converged: bool,
    last_update: f64,
}

/// Secant compliance of an active face; negative secant entries, which the
/// law produces for strongly unequal pure-mode strengths, are clamped to
/// zero stiffness.
fn law_compliance(u_n: f64, u_t: f64, state: &FaceState, params: &CohesiveParams) -> Result<SecantCompliance, CohesiveError> {
    let mut s = secant_stiffness(u_n, u_t, state, params);
    if let SecantStiffness::Matrix(m) = &mut s {
        if m[(0, 1)] == 0.0 && m[(1, 0)] == 0.0 {
            for k in 0..2 {
                if m[(k, k)] < 0.0 {
                    log::debug!("clamping negative secant {:e}", m[(k, k)]);
                    m[(k, k)] = 0.0;
                }
            }
        }
    }
    secant_compliance(&s)
}

impl QuasiStaticProblem {
    fn is_cohesive(&self, f: usize) -> bool {
        self.model.mesh().face(f).kind == FaceKind::Interior
            && self.cohesive_faces.as_ref().is_none_or(|s| s.contains(&f))
    }

    pub fn initial_state(&self) -> SolverState {
        let n_faces = self.model.mesh().n_faces();
        let mut faces = vec![FaceState::intact(); n_faces];
        let mut compliance = vec![SecantCompliance::Zero; n_faces];
        for &f in &self.initial_failed {
            faces[f] = FaceState::pre_failed();
            compliance[f] = SecantCompliance::FREE;
        }
        SolverState {
            delta: 0.0,
            displacement: vec![0.0; self.model.n_dofs()],
            faces,
            compliance,
            dissipated: 0.0,
        }
    }

    /// Trial compliances from the displacement `u` with the history of
    /// `state` frozen. Returns the new compliances and whether any face
    /// changed between bonded, softening and traction-free.
    fn update_compliance(
        &self,
        u: &[f64],
        ops: &[FaceOperator],
        state: &SolverState,
        current: &[SecantCompliance],
    ) -> Result<(Vec<SecantCompliance>, bool), SolverError> {
        let params = match &self.cohesive {
            Some(p) => p,
            None => return Ok((current.to_vec(), false)),
        };
        let seed = self.settings.initiation_seed;
        let updated: Vec<Result<(SecantCompliance, bool), CohesiveError>> = (0..current.len())
            .into_par_iter()
            .map(|f| {
                let old = current[f];
                let history = &state.faces[f];
                if !(self.is_cohesive(f) || self.initial_failed.contains(&f)) {
                    return Ok((old, false));
                }
                let (u_n, u_t) = self.model.separation(u, f);
                if old == SecantCompliance::Zero && history.lambda_max == 0.0 {
                    let (t_n, t_t) = self.model.interface_traction(u, f, &ops[f]);
                    if strength_ratio(t_n, t_t, params) < 1.0 {
                        return Ok((old, false));
                    }
                    let p = self.model.mesh().face_midpoint(f);
                    log::debug!("face {f} at ({:.4}, {:.4}) initiates", p.x, p.y);
                    // seed along the traction direction
                    let a = (t_n.max(0.0) / params.normal.sigma_max) * params.u_nc();
                    let b = (t_t / params.tangential.sigma_max) * params.u_tc();
                    let lam = (a / params.u_nc()).hypot(b / params.u_tc());
                    let (sn, st) = if history_separation(u_n, u_t, params) > seed {
                        (u_n, u_t)
                    } else {
                        (a * seed / lam, b * seed / lam)
                    };
                    return Ok((law_compliance(sn, st, history, params)?, true));
                }
                let new = law_compliance(u_n, u_t, history, params)?;
                Ok((new, new.is_free() != old.is_free()))
            })
            .collect();
        let mut out = Vec::with_capacity(current.len());
        let mut changed = false;
        for r in updated {
            let (k, c) = r?;
            out.push(k);
            changed |= c;
        }
        Ok((out, changed))
    }

    /// Fixed-point iteration at displacement level `delta` from `state`.
    fn iterate(&self, state: &SolverState, delta: f64, solver: &mut LinearSolver) -> Result<Iterate, SolverError> {
        let load = (self.load)(delta);
        let omega = self.settings.relaxation;
        let mut k = state.compliance.clone();
        let mut prev: Option<Vec<f64>> = None;
        let mut last_update = f64::INFINITY;
        for it in 1..=self.settings.max_iter {
            let ops = self.model.face_operators(&k)?;
            let system = self.model.assemble(&load, &ops)?;
            let u = solver.solve(&system.matrix, &system.rhs)?;
            let (k_new, changed) = self.update_compliance(&u, &ops, state, &k)?;
            let fixed = k_new == k;
            last_update = match &prev {
                Some(p) => {
                    let num: f64 = u.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    let den: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
                    if den == 0.0 { 0.0 } else { num / den }
                }
                None => f64::INFINITY,
            };
            log::trace!("delta {delta}: iteration {it}, update {last_update:e}, changed {changed}");
            if fixed || (last_update <= self.settings.tol_rel && !changed) {
                return Ok(Iterate {
                    displacement: u,
                    compliance: k,
                    iterations: it,
                    converged: true,
                    last_update,
                });
            }
            k = k.iter().zip(&k_new).map(|(a, b)| a.relax(b, omega)).collect();
            prev = Some(u);
        }
        Ok(Iterate {
            displacement: prev.unwrap_or_default(),
            compliance: k,
            iterations: self.settings.max_iter,
            converged: false,
            last_update,
        })
    }

    /// Commits the history reached by a converged iterate.
    fn commit(&self, state: &SolverState, it: Iterate, delta: f64) -> SolverState {
        let mut faces = state.faces.clone();
        let mut dissipated = 0.0;
        if let Some(params) = &self.cohesive {
            for f in 0..faces.len() {
                if !self.is_cohesive(f) || faces[f].failed {
                    continue;
                }
                let bonded = it.compliance[f] == SecantCompliance::Zero && faces[f].lambda_max == 0.0;
                if bonded {
                    continue;
                }
                let (u_n, u_t) = self.model.separation(&it.displacement, f);
                let lam = history_separation(u_n, u_t, params);
                let next = update_state(&faces[f], lam);
                if next.lambda_max > faces[f].lambda_max {
                    let phi = if u_n < 0.0 { Some(0.0) } else { mode_mix(u_n, u_t, params) }.unwrap_or(FRAC_PI_2);
                    let len = self.model.mesh().face(f).length;
                    dissipated += len
                        * (dissipated_energy(next.lambda_max, phi, params)
                            - dissipated_energy(faces[f].lambda_max, phi, params));
                }
                faces[f] = next;
            }
        }
        SolverState {
            delta,
            displacement: it.displacement,
            faces,
            compliance: it.compliance,
            dissipated: state.dissipated + dissipated,
        }
    }

    /// Advances `state` to `delta`, bisecting the increment when the
    /// iteration stalls. Returns the new state, iterations and bisections.
    fn advance(
        &self,
        state: SolverState,
        delta: f64,
        depth: usize,
        solver: &mut LinearSolver,
    ) -> Result<(SolverState, usize, usize), SolverError> {
        let it = self.iterate(&state, delta, solver)?;
        if it.converged {
            let n = it.iterations;
            return Ok((self.commit(&state, it, delta), n, depth));
        }
        if depth >= self.settings.max_bisections {
            return Err(SolverError::NotConverged {
                delta,
                bisections: depth,
                last_update: it.last_update,
            });
        }
        log::info!("bisecting the increment {} -> {delta}", state.delta);
        let mid = 0.5 * (state.delta + delta);
        let spent = it.iterations;
        let (half, n1, d1) = self.advance(state, mid, depth + 1, solver)?;
        let (full, n2, d2) = self.advance(half, delta, depth + 1, solver)?;
        Ok((full, spent + n1 + n2, d1.max(d2)))
    }

    /// Solves one scheduled step from a converged state.
    pub fn load_step(
        &self,
        state: SolverState,
        step: usize,
        delta: f64,
        solver: &mut LinearSolver,
    ) -> Result<(SolverState, StepResult), SolverError> {
        self.settings.validate()?;
        let before = state.dissipated;
        let (next, iterations, bisections) = self.advance(state, delta, 0, solver)?;
        let reaction = match self.reaction_tag {
            Some(tag) => self.model.reaction(&next.displacement, &(self.load)(delta), tag)?,
            None => Vector2::zeros(),
        };
        let failed_faces = (0..next.faces.len()).filter(|&f| next.faces[f].failed).collect();
        let result = StepResult {
            step,
            delta,
            displacement: next.displacement.clone(),
            reaction,
            failed_faces,
            iterations,
            bisections,
            converged: true,
            dissipated: next.dissipated - before,
            faces: next.faces.clone(),
        };
        Ok((next, result))
    }

    /// Runs the schedule, calling `on_step` after every converged step. Stops
    /// at the first step that cannot be converged and returns the error
    /// together with the steps completed so far.
    pub fn run_quasi_static(
        &self,
        schedule: &LoadSchedule,
        mut on_step: impl FnMut(&StepResult),
    ) -> (Vec<StepResult>, Option<SolverError>) {
        let mut solver = LinearSolver::new();
        let mut state = self.initial_state();
        let mut results = Vec::with_capacity(schedule.len());
        for (i, &delta) in schedule.steps().iter().enumerate() {
            match self.load_step(state.clone(), i + 1, delta, &mut solver) {
                Ok((next, result)) => {
                    log::info!(
                        "step {} delta {delta}: {} iterations, {} failed faces",
                        i + 1,
                        result.iterations,
                        result.failed_faces.len()
                    );
                    on_step(&result);
                    results.push(result);
                    state = next;
                }
                Err(e) => return (results, Some(e)),
            }
        }
        (results, None)
    }
}

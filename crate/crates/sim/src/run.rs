//! Running a scenario and writing its result files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use czdg_core::mesh::FaceKind;
use czdg_core::solver::{SolverError, StepResult};
use thiserror::Error;

use crate::output::OutputWriter;
use crate::scenario::{Scenario, ScenarioError, Simulation};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("output: {0}")]
    Io(#[from] io::Error),
}

pub struct RunOutcome {
    pub simulation: Simulation,
    pub steps: Vec<StepResult>,
    /// Set when a step could not be converged; `steps` holds the ones before.
    pub error: Option<SolverError>,
}

impl RunOutcome {
    pub fn initial_failed(&self) -> &BTreeSet<usize> {
        &self.simulation.problem.initial_failed
    }

    pub fn final_failed(&self) -> BTreeSet<usize> {
        self.steps
            .last()
            .map_or_else(|| self.initial_failed().clone(), |s| s.failed_faces.clone())
    }
}

/// Builds and runs `scenario`, writing `steps.csv`, field snapshots and
/// `summary.txt` into `out` when given. Relative mesh paths resolve
/// against `base`.
pub fn run(scenario: &Scenario, base: &Path, out: Option<&Path>) -> Result<RunOutcome, RunError> {
    let simulation = scenario.build(base)?;
    let problem = &simulation.problem;
    let model = &problem.model;
    let axis = simulation.reaction_axis;
    let n_steps = simulation.schedule.len();
    let mut writer = match out {
        Some(dir) => Some(OutputWriter::new(dir, scenario.output.vtk_every)?),
        None => None,
    };
    let mut io_error: Option<io::Error> = None;
    let (steps, error) = problem.run_quasi_static(&simulation.schedule, |r| {
        if let (Some(w), None) = (writer.as_mut(), io_error.as_ref()) {
            if let Err(e) = w.step(model, r, axis, r.step == n_steps) {
                io_error = Some(e);
            }
        }
    });
    if let Some(e) = io_error {
        return Err(e.into());
    }
    if let Some(w) = &writer {
        if let (Some(_), Some(last)) = (&error, steps.last()) {
            if !w.wrote_fields(last.step) {
                w.fields(model, last)?;
            }
        }
        w.summary(&summary(&simulation, &steps, error.as_ref()))?;
    }
    Ok(RunOutcome {
        simulation,
        steps,
        error,
    })
}

pub fn summary(sim: &Simulation, steps: &[StepResult], error: Option<&SolverError>) -> String {
    let mesh = sim.problem.model.mesh();
    let axis = sim.reaction_axis;
    let mut o = String::new();
    let _ = writeln!(o, "elements = {}", mesh.n_triangles());
    let _ = writeln!(o, "interior_faces = {}", mesh.count(FaceKind::Interior));
    let _ = writeln!(o, "dofs = {}", sim.problem.model.n_dofs());
    let _ = writeln!(o, "initial_failed_faces = {}", sim.problem.initial_failed.len());
    let _ = writeln!(o, "steps_completed = {} of {}", steps.len(), sim.schedule.len());
    match error {
        None => o.push_str("status = complete\n"),
        Some(e) => {
            let _ = writeln!(o, "status = aborted at step {}: {e}", steps.len() + 1);
        }
    }
    let peak = steps
        .iter()
        .max_by(|a, b| a.reaction[axis].abs().total_cmp(&b.reaction[axis].abs()));
    if let Some(p) = peak {
        let _ = writeln!(o, "peak_reaction_N_per_mm = {} at delta_mm = {}", p.reaction[axis], p.delta);
    }
    if let Some(last) = steps.last() {
        let _ = writeln!(o, "final_failed_faces = {}", last.failed_faces.len());
    }
    let _ = writeln!(
        o,
        "dissipated_energy_N = {}",
        steps.iter().map(|s| s.dissipated).sum::<f64>()
    );
    let _ = writeln!(
        o,
        "total_iterations = {}",
        steps.iter().map(|s| s.iterations).sum::<usize>()
    );
    o
}

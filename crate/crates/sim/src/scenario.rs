//! Validated scenario description and its conversion into a solver problem.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use czdg_core::cohesive::{CohesiveError, CohesiveParams, PureModeLaw, SecantVariant};
use czdg_core::dg::{DgError, DgModel, LoadCase};
use czdg_core::material::{IsotropicElastic, MaterialError, MaterialField};
use czdg_core::mesh::{
    generate_rect, mark_initial_crack, read_mesh, tags, trace_crack_path, BoundaryKind, CrackSegment, MeshData,
    MeshError, RectSpec, Region, Shape,
};
use czdg_core::solver::{LoadSchedule, NonlinearSettings, QuasiStaticProblem, SolverError};
use nalgebra::{Point2, Vector2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read mesh file {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Cohesive(#[from] CohesiveError),
    #[error(transparent)]
    Dg(#[from] DgError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("boundary tag {0} has no boundary condition")]
    UnboundTag(u32),
    #[error("boundary condition for tag {0}, which is not on the mesh boundary")]
    StrayCondition(u32),
    #[error("reaction tag {0} is not a prescribed-displacement boundary")]
    ReactionTag(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    File(PathBuf),
    Generated { rect: RectSpec, regions: Vec<Region> },
}

/// How the initial crack segment is turned into pre-failed faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrackMarking {
    /// Shortest connected chain of faces between the segment ends.
    Path,
    /// Every interior face whose midpoint lies within the distance.
    Tolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackSpec {
    pub segment: CrackSegment,
    pub marking: CrackMarking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialSpec {
    pub e: f64,
    pub nu: f64,
}

/// `None` keeps every interface bonded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CohesiveSpec {
    None,
    Sawtooth {
        normal: PureModeLaw,
        tangential: PureModeLaw,
        variant: SecantVariant,
    },
}

/// `constant + per_delta * delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub per_delta: f64,
}

impl Affine {
    pub const ZERO: Affine = Affine {
        constant: 0.0,
        per_delta: 0.0,
    };

    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            per_delta: 0.0,
        }
    }

    pub fn delta(k: f64) -> Self {
        Self {
            constant: 0.0,
            per_delta: k,
        }
    }

    pub fn eval(&self, delta: f64) -> f64 {
        self.constant + self.per_delta * delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Free,
    Value(Affine),
}

impl Component {
    fn prescribed(&self) -> bool {
        matches!(self, Component::Value(_))
    }

    fn eval(&self, delta: f64) -> f64 {
        match self {
            Component::Free => 0.0,
            Component::Value(a) => a.eval(delta),
        }
    }

    fn driven(&self) -> bool {
        matches!(self, Component::Value(a) if a.per_delta != 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    Clamped,
    Prescribed { ux: Component, uy: Component },
    Traction { tx: Affine, ty: Affine },
    Free,
}

impl BoundaryCondition {
    pub fn kind(&self) -> BoundaryKind {
        match self {
            BoundaryCondition::Clamped | BoundaryCondition::Prescribed { .. } => BoundaryKind::Dirichlet,
            BoundaryCondition::Traction { .. } | BoundaryCondition::Free => BoundaryKind::Neumann,
        }
    }

    fn components(&self) -> Option<[Component; 2]> {
        match *self {
            BoundaryCondition::Clamped => Some([Component::Value(Affine::ZERO); 2]),
            BoundaryCondition::Prescribed { ux, uy } => Some([ux, uy]),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Uniform { delta_max: f64, steps: usize },
    List(Vec<f64>),
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<LoadSchedule, SolverError> {
        match self {
            ScheduleSpec::Uniform { delta_max, steps } => LoadSchedule::uniform(*delta_max, *steps),
            ScheduleSpec::List(v) => LoadSchedule::new(v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Write fields every this many steps (and at the last step); 0 disables.
    pub vtk_every: usize,
    /// Tag whose reaction goes into `steps.csv`; defaults to the first
    /// displacement-driven tag.
    pub reaction: Option<u32>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            vtk_every: 1,
            reaction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mesh: MeshSource,
    pub crack: Option<CrackSpec>,
    pub materials: BTreeMap<u32, MaterialSpec>,
    pub cohesive: CohesiveSpec,
    pub gamma0: f64,
    pub bcs: BTreeMap<u32, BoundaryCondition>,
    pub schedule: ScheduleSpec,
    pub settings: NonlinearSettings,
    pub output: OutputSpec,
}

/// A ready-to-run problem.
pub struct Simulation {
    pub problem: QuasiStaticProblem,
    pub schedule: LoadSchedule,
    /// Reaction component reported as the scalar reaction.
    pub reaction_axis: usize,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("problem", &self.problem)
            .field("schedule", &self.schedule)
            .finish()
    }
}

impl Scenario {
    pub fn mesh_data(&self, base: &Path) -> Result<MeshData, ScenarioError> {
        match &self.mesh {
            MeshSource::File(p) => {
                let path = base.join(p);
                let text = std::fs::read_to_string(&path).map_err(|e| ScenarioError::Io(path.clone(), e))?;
                Ok(read_mesh(&text)?)
            }
            MeshSource::Generated { rect, regions } => Ok(generate_rect(rect, regions)?),
        }
    }

    /// Checks that the conditions bind the boundary tags one to one.
    pub fn check_tags(&self, boundary: &BTreeSet<u32>) -> Result<(), ScenarioError> {
        if let Some(&t) = boundary.iter().find(|t| !self.bcs.contains_key(t)) {
            return Err(ScenarioError::UnboundTag(t));
        }
        if let Some(&t) = self.bcs.keys().find(|t| !boundary.contains(t)) {
            return Err(ScenarioError::StrayCondition(t));
        }
        Ok(())
    }

    pub fn reaction_tag(&self) -> Option<u32> {
        self.output.reaction.or_else(|| {
            self.bcs
                .iter()
                .find(|(_, bc)| bc.components().is_some_and(|c| c.iter().any(Component::driven)))
                .map(|(&t, _)| t)
        })
    }

    pub fn cohesive_params(&self) -> Option<CohesiveParams> {
        match self.cohesive {
            CohesiveSpec::None => None,
            CohesiveSpec::Sawtooth {
                normal,
                tangential,
                variant,
            } => {
                let mut p = CohesiveParams::new(normal, tangential);
                p.secant_variant = variant;
                Some(p)
            }
        }
    }

    /// Builds the solver problem; relative mesh paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<Simulation, ScenarioError> {
        let data = self.mesh_data(base)?;
        self.check_tags(&data.boundary_tags())?;
        let kinds: BTreeMap<u32, BoundaryKind> = self.bcs.iter().map(|(&t, bc)| (t, bc.kind())).collect();
        let mesh = data.build(&kinds)?;
        let mut materials = MaterialField::new();
        for (&tag, m) in &self.materials {
            materials.insert(tag, IsotropicElastic::new(m.e, m.nu)?);
        }
        let mut masks = BTreeMap::new();
        for (&tag, bc) in &self.bcs {
            if let Some(c) = bc.components() {
                masks.insert(tag, [c[0].prescribed(), c[1].prescribed()]);
            }
        }
        let initial_failed = match &self.crack {
            None => BTreeSet::new(),
            Some(c) => match c.marking {
                CrackMarking::Path => trace_crack_path(&mesh, &c.segment),
                CrackMarking::Tolerance(tol) => mark_initial_crack(&mesh, &c.segment, tol),
            },
        };
        let model = DgModel::new(mesh, materials, self.gamma0, masks)?;
        let reaction_tag = self.reaction_tag();
        let mut reaction_axis = 1;
        if let Some(tag) = reaction_tag {
            let c = self
                .bcs
                .get(&tag)
                .and_then(BoundaryCondition::components)
                .ok_or(ScenarioError::ReactionTag(tag))?;
            reaction_axis = if !c[1].driven() && c[0].driven() { 0 } else { 1 };
        }
        let bcs = self.bcs.clone();
        let load = Box::new(move |delta: f64| {
            let mut load = LoadCase::new();
            for (&tag, bc) in &bcs {
                match *bc {
                    BoundaryCondition::Traction { tx, ty } => {
                        load = load.constant_traction(tag, Vector2::new(tx.eval(delta), ty.eval(delta)));
                    }
                    BoundaryCondition::Free => {}
                    BoundaryCondition::Clamped | BoundaryCondition::Prescribed { .. } => {
                        let [cx, cy] = bc.components().unwrap_or([Component::Free; 2]);
                        load = load.constant_displacement(tag, Vector2::new(cx.eval(delta), cy.eval(delta)));
                    }
                }
            }
            load
        });
        let problem = QuasiStaticProblem {
            model,
            cohesive: self.cohesive_params(),
            cohesive_faces: None,
            initial_failed,
            load,
            reaction_tag,
            settings: self.settings,
        };
        Ok(Simulation {
            problem,
            schedule: self.schedule.build()?,
            reaction_axis,
        })
    }
}

/// The two material set-ups of the single-edge-notched specimen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SenSetup {
    /// Inclusions share the matrix properties.
    Homogeneous,
    /// Inclusions are stiffer than the matrix by `inclusion_factor`.
    StiffInclusions,
}

/// Single-edge-notched plate of width `w` and height `2h` with two circular
/// inclusions and an inclined initial crack. Lengths in mm, moduli in MPa.
#[derive(Debug, Clone, PartialEq)]
pub struct SenSpec {
    pub w: f64,
    pub h: f64,
    /// Inclusion diameter.
    pub d: f64,
    pub a: f64,
    pub inclusion_centers: [Point2<f64>; 2],
    pub crack_center: Point2<f64>,
    pub crack_angle_deg: f64,
    pub nx: usize,
    pub ny: usize,
    pub e: f64,
    pub nu: f64,
    pub inclusion_factor: f64,
    pub sigma_max: f64,
    pub u_c: f64,
    pub delta_max: f64,
    pub steps: usize,
}

impl Default for SenSpec {
    fn default() -> Self {
        Self {
            w: 1.0,
            h: 1.0,
            d: 0.2,
            a: 0.2,
            inclusion_centers: [Point2::new(0.75, 1.0), Point2::new(0.45, 1.10)],
            crack_center: Point2::new(0.40, 0.90),
            crack_angle_deg: 33.0,
            nx: 25,
            ny: 50,
            e: 10.0,
            nu: 0.45,
            inclusion_factor: 100.0,
            sigma_max: 1.0,
            u_c: 0.02,
            delta_max: 0.1,
            steps: 20,
        }
    }
}

pub const SEN_MATRIX: u32 = 0;
pub const SEN_INCLUSIONS: [u32; 2] = [1, 2];

impl SenSpec {
    pub fn scenario(&self, setup: SenSetup) -> Scenario {
        let regions = self
            .inclusion_centers
            .iter()
            .zip(SEN_INCLUSIONS)
            .map(|(&center, tag)| Region {
                shape: Shape::Circle {
                    center,
                    radius: 0.5 * self.d,
                },
                tag,
            })
            .collect();
        let matrix = MaterialSpec { e: self.e, nu: self.nu };
        let inclusion = match setup {
            SenSetup::Homogeneous => matrix,
            SenSetup::StiffInclusions => MaterialSpec {
                e: self.e * self.inclusion_factor,
                nu: self.nu,
            },
        };
        let mut materials = BTreeMap::from([(SEN_MATRIX, matrix)]);
        for tag in SEN_INCLUSIONS {
            materials.insert(tag, inclusion);
        }
        let law = PureModeLaw {
            sigma_max: self.sigma_max,
            u_c: self.u_c,
        };
        let bcs = BTreeMap::from([
            (tags::BOTTOM, BoundaryCondition::Clamped),
            (
                tags::TOP,
                BoundaryCondition::Prescribed {
                    ux: Component::Value(Affine::ZERO),
                    uy: Component::Value(Affine::delta(1.0)),
                },
            ),
            (tags::LEFT, BoundaryCondition::Free),
            (tags::RIGHT, BoundaryCondition::Free),
        ]);
        Scenario {
            mesh: MeshSource::Generated {
                rect: RectSpec {
                    width: self.w,
                    height: 2.0 * self.h,
                    nx: self.nx,
                    ny: self.ny,
                    crossed: true,
                },
                regions,
            },
            crack: Some(CrackSpec {
                segment: CrackSegment {
                    center: self.crack_center,
                    length: self.a,
                    angle_deg: self.crack_angle_deg,
                },
                marking: CrackMarking::Path,
            }),
            materials,
            cohesive: CohesiveSpec::Sawtooth {
                normal: law,
                tangential: law,
                variant: SecantVariant::default(),
            },
            gamma0: 10.0,
            bcs,
            schedule: ScheduleSpec::Uniform {
                delta_max: self.delta_max,
                steps: self.steps,
            },
            // the sawtooth Picard loop converges slowly once many faces soften
            settings: NonlinearSettings {
                tol_rel: 1e-5,
                max_iter: 1000,
                ..NonlinearSettings::default()
            },
            output: OutputSpec {
                reaction: Some(tags::TOP),
                ..OutputSpec::default()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sen_defaults_build() {
        let spec = SenSpec {
            nx: 5,
            ny: 10,
            ..SenSpec::default()
        };
        let sim = spec.scenario(SenSetup::StiffInclusions).build(Path::new(".")).unwrap();
        let mesh = sim.problem.model.mesh();
        assert_eq!(mesh.n_triangles(), 200);
        assert!((mesh.total_area() - 2.0).abs() < 1e-12);
        assert!(!sim.problem.initial_failed.is_empty());
        assert_eq!(sim.reaction_axis, 1);
        let stiff = sim.problem.model.materials().get(SEN_INCLUSIONS[0]).unwrap();
        assert_eq!(stiff.e, 1000.0);
    }

    #[test]
    fn unbound_and_stray_tags_are_rejected() {
        let mut s = SenSpec::default().scenario(SenSetup::Homogeneous);
        s.bcs.remove(&tags::LEFT);
        let all = BTreeSet::from([1, 2, 3, 4]);
        assert!(matches!(s.check_tags(&all), Err(ScenarioError::UnboundTag(4))));
        s.bcs.insert(4, BoundaryCondition::Free);
        s.bcs.insert(9, BoundaryCondition::Free);
        assert!(matches!(s.check_tags(&all), Err(ScenarioError::StrayCondition(9))));
    }

    #[test]
    fn affine_and_masks() {
        assert_eq!(Affine { constant: 1.0, per_delta: 2.0 }.eval(0.5), 2.0);
        let bc = BoundaryCondition::Prescribed {
            ux: Component::Free,
            uy: Component::Value(Affine::delta(1.0)),
        };
        let c = bc.components().unwrap();
        assert!(!c[0].prescribed() && c[1].driven());
        assert_eq!(bc.kind(), BoundaryKind::Dirichlet);
    }
}

//! Result files: step table, legacy VTK fields and failed-face listings.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so equal
//! results give byte-identical files.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use czdg_core::cohesive::FaceState;
use czdg_core::dg::{von_mises, DgModel};
use czdg_core::solver::StepResult;

pub const CSV_HEADER: &str = "step,delta_mm,reaction_N_per_mm,failed_faces,iterations,converged";

pub fn csv_row(r: &StepResult, axis: usize) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.step,
        r.delta,
        r.reaction[axis],
        r.failed_faces.len(),
        r.iterations,
        r.converged
    )
}

/// Discontinuous displacement field on an unstructured grid. Every triangle
/// gets its own three points so that jumps are not averaged away.
pub fn write_vtk(w: &mut impl Write, model: &DgModel, u: &[f64], title: &str) -> io::Result<()> {
    let mesh = model.mesh();
    let n = mesh.n_triangles();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * n)?;
    for t in 0..n {
        for p in mesh.vertices(t) {
            writeln!(w, "{} {} 0", p.x, p.y)?;
        }
    }
    writeln!(w, "CELLS {n} {}", 4 * n)?;
    for t in 0..n {
        writeln!(w, "3 {} {} {}", 3 * t, 3 * t + 1, 3 * t + 2)?;
    }
    writeln!(w, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", 3 * n)?;
    writeln!(w, "VECTORS displacement double")?;
    for t in 0..n {
        for p in mesh.vertices(t) {
            let d = model.evaluate(u, t, &p);
            writeln!(w, "{} {} 0", d.x, d.y)?;
        }
    }
    writeln!(w, "CELL_DATA {n}")?;
    writeln!(w, "SCALARS region int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for tri in mesh.triangles() {
        writeln!(w, "{}", tri.region)?;
    }
    writeln!(w, "SCALARS von_mises double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for t in 0..n {
        let s = model.element_stress(u, t);
        writeln!(w, "{}", von_mises(&s, model.materials().of(mesh, t)))?;
    }
    Ok(())
}

/// `face,x,y,lambda_max` for every failed face, midpoints in mm.
pub fn write_failed_csv(
    w: &mut impl Write,
    model: &DgModel,
    failed: &BTreeSet<usize>,
    faces: &[FaceState],
) -> io::Result<()> {
    writeln!(w, "face,x_mm,y_mm,lambda_max")?;
    for &f in failed {
        let p = model.mesh().face_midpoint(f);
        writeln!(w, "{f},{},{},{}", p.x, p.y, faces[f].lambda_max)?;
    }
    Ok(())
}

/// Failed faces as line segments, for overlaying on the field files.
pub fn write_failed_vtk(w: &mut impl Write, model: &DgModel, failed: &BTreeSet<usize>, title: &str) -> io::Result<()> {
    let mesh = model.mesh();
    let m = failed.len();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {} double", 2 * m)?;
    for &f in failed {
        for s in [0.0, 1.0] {
            let p = mesh.face_point(f, s);
            writeln!(w, "{} {} 0", p.x, p.y)?;
        }
    }
    writeln!(w, "LINES {m} {}", 3 * m)?;
    for k in 0..m {
        writeln!(w, "2 {} {}", 2 * k, 2 * k + 1)?;
    }
    writeln!(w, "CELL_DATA {m}")?;
    writeln!(w, "SCALARS face int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &f in failed {
        writeln!(w, "{f}")?;
    }
    Ok(())
}

/// Writes the per-run files into one directory.
pub struct OutputWriter {
    dir: PathBuf,
    csv: BufWriter<File>,
    vtk_every: usize,
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

impl OutputWriter {
    pub fn new(dir: &Path, vtk_every: usize) -> io::Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", dir.display())))?;
        let mut csv = create(&dir.join("steps.csv"))?;
        writeln!(csv, "{CSV_HEADER}")?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv,
            vtk_every,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Appends the step to `steps.csv` and writes the field files when due
    /// (`last` forces them).
    pub fn step(&mut self, model: &DgModel, r: &StepResult, axis: usize, last: bool) -> io::Result<()> {
        writeln!(self.csv, "{}", csv_row(r, axis))?;
        self.csv.flush()?;
        if self.vtk_every > 0 && (r.step.is_multiple_of(self.vtk_every) || last) {
            self.fields(model, r)?;
        }
        Ok(())
    }

    /// Field and failed-face files of one step.
    pub fn fields(&self, model: &DgModel, r: &StepResult) -> io::Result<()> {
        let title = format!("step {} delta {}", r.step, r.delta);
        let mut w = create(&self.dir.join(format!("step_{:04}.vtk", r.step)))?;
        write_vtk(&mut w, model, &r.displacement, &title)?;
        w.flush()?;
        let mut w = create(&self.dir.join(format!("failed_faces_{:04}.csv", r.step)))?;
        write_failed_csv(&mut w, model, &r.failed_faces, &r.faces)?;
        w.flush()?;
        let mut w = create(&self.dir.join(format!("failed_faces_{:04}.vtk", r.step)))?;
        write_failed_vtk(&mut w, model, &r.failed_faces, &title)?;
        w.flush()
    }

    pub fn wrote_fields(&self, step: usize) -> bool {
        self.vtk_every > 0 && step.is_multiple_of(self.vtk_every)
    }

    pub fn summary(&self, text: &str) -> io::Result<()> {
        let mut w = create(&self.dir.join("summary.txt"))?;
        w.write_all(text.as_bytes())?;
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use czdg_core::material::{IsotropicElastic, MaterialField};
    use czdg_core::mesh::read_mesh;
    use nalgebra::Vector2;
    use std::collections::BTreeMap;

    const SQUARE: &str = "$Nodes\n4\n0 0 0\n1 1 0\n2 1 1\n3 0 1\n$Triangles\n2\n0 0 0 1 2\n1 7 0 2 3\n$BoundaryEdges\n4\n0 1 0 1\n1 2 1 2\n2 3 2 3\n3 4 3 0\n";

    fn model() -> DgModel {
        let kinds = (1..=4).map(|t| (t, czdg_core::mesh::BoundaryKind::Neumann)).collect();
        let mesh = read_mesh(SQUARE).unwrap().build(&kinds).unwrap();
        let mut mats = MaterialField::new();
        mats.insert(0, IsotropicElastic::new(10.0, 0.25).unwrap());
        mats.insert(7, IsotropicElastic::new(20.0, 0.25).unwrap());
        DgModel::new(mesh, mats, 10.0, BTreeMap::new()).unwrap()
    }

    #[test]
    fn vtk_duplicates_points_and_keeps_jumps() {
        let model = model();
        // second element shifted rigidly: the jump must survive in the file
        let mut u = vec![0.0; 12];
        for k in 0..3 {
            u[6 + 2 * k] = 0.5;
        }
        let mut buf = Vec::new();
        write_vtk(&mut buf, &model, &u, "t").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
        assert!(text.contains("POINTS 6 double"));
        assert!(text.contains("CELLS 2 8\n3 0 1 2\n3 3 4 5\n"));
        assert!(text.contains("SCALARS region int 1\nLOOKUP_TABLE default\n0\n7\n"));
        let disp: Vec<&str> = text
            .split("VECTORS displacement double\n")
            .nth(1)
            .unwrap()
            .lines()
            .take(6)
            .collect();
        assert_eq!(disp, ["0 0 0", "0 0 0", "0 0 0", "0.5 0 0", "0.5 0 0", "0.5 0 0"]);
        // rigid motion: no stress
        assert!(text.ends_with("SCALARS von_mises double 1\nLOOKUP_TABLE default\n0\n0\n"));
    }

    #[test]
    fn failed_face_listings() {
        let model = model();
        let diag = (0..model.mesh().n_faces())
            .find(|&f| model.mesh().face(f).is_interior())
            .unwrap();
        let mut faces = vec![FaceState::intact(); model.mesh().n_faces()];
        faces[diag].lambda_max = 1.25;
        let failed = BTreeSet::from([diag]);
        let mut buf = Vec::new();
        write_failed_csv(&mut buf, &model, &failed, &faces).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("face,x_mm,y_mm,lambda_max\n{diag},0.5,0.5,1.25\n"));
        let mut buf = Vec::new();
        write_failed_vtk(&mut buf, &model, &failed, "t").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("POINTS 2 double\n"));
        assert!(text.contains("LINES 1 3\n2 0 1\n"));
    }

    #[test]
    fn csv_row_format() {
        let r = StepResult {
            step: 3,
            delta: 0.015,
            displacement: vec![],
            reaction: Vector2::new(0.25, -1.5),
            failed_faces: BTreeSet::from([1, 4]),
            iterations: 7,
            bisections: 0,
            converged: true,
            dissipated: 0.0,
            faces: vec![],
        };
        assert_eq!(csv_row(&r, 1), "3,0.015,-1.5,2,7,true");
        assert_eq!(csv_row(&r, 0), "3,0.015,0.25,2,7,true");
    }
}

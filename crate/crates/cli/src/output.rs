//! Snapshot and diagnostics writers, and matching readers.

use std::collections::BTreeMap;
use std::io::{self, Write};

use mhdpp_core::mesh::{Mesh1D, RectMesh2D};
use mhdpp_core::scheme::{DgField, StepDiagnostics};
use mhdpp_core::state::pressure_unchecked;
use mhdpp_core::Eos;

pub const PROFILE_HEADER: &str = "x,rho,mx,my,mz,Bx,By,Bz,E,p";
pub const DIAGNOSTICS_HEADER: &str = "step,t,dt,min_rho,min_p,max_divB_fo,max_divB_ho,total_mass,limited_cells";

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per cell: center coordinate and cell averages.
pub fn write_profile_csv<W: Write>(w: &mut W, field: &DgField, mesh: &Mesh1D, eos: &Eos) -> io::Result<()> {
    writeln!(w, "{PROFILE_HEADER}")?;
    for j in 0..mesh.n_cells() {
        let u = field.average(j);
        let a = u.to_array();
        let mut row = vec![num(mesh.center(j))];
        row.extend(a.iter().map(|&x| num(x)));
        row.push(num(pressure_unchecked(&u, eos)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Parses a profile written by [`write_profile_csv`] into rows of ten values.
pub fn read_profile_csv(text: &str) -> Result<Vec<[f64; 10]>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(PROFILE_HEADER) {
        return Err("missing or unexpected header".into());
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let vals: Vec<f64> = l.split(',').map(|s| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1))).collect::<Result<_, _>>()?;
            vals.try_into().map_err(|_| format!("row {}: expected 10 columns", i + 1))
        })
        .collect()
}

/// Legacy ASCII VTK with cell data on a uniform grid.
pub fn write_vtk<W: Write>(w: &mut W, field: &DgField, mesh: &RectMesh2D, eos: &Eos, div_ho: &[f64], title: &str) -> io::Result<()> {
    let (mx, my) = (mesh.mx(), mesh.my());
    let n = mesh.n_cells();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.replace('\n', " "))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 1", mx + 1, my + 1)?;
    writeln!(w, "ORIGIN {} {} 0", num(mesh.x[0]), num(mesh.y[0]))?;
    writeln!(w, "SPACING {} {} 1", num(mesh.dx(0)), num(mesh.dy(0)))?;
    writeln!(w, "CELL_DATA {n}")?;
    let avgs = field.averages();
    let scalar = |w: &mut W, name: &str, f: &dyn Fn(usize) -> f64| -> io::Result<()> {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for c in 0..n {
            writeln!(w, "{}", num(f(c)))?;
        }
        Ok(())
    };
    scalar(w, "rho", &|c| avgs[c].rho)?;
    scalar(w, "p", &|c| pressure_unchecked(&avgs[c], eos))?;
    scalar(w, "E", &|c| avgs[c].e)?;
    scalar(w, "divB_ho", &|c| div_ho.get(c).copied().unwrap_or(0.0))?;
    writeln!(w, "VECTORS velocity double")?;
    for u in &avgs {
        let v = u.velocity();
        writeln!(w, "{} {} {}", num(v[0]), num(v[1]), num(v[2]))?;
    }
    writeln!(w, "VECTORS B double")?;
    for u in &avgs {
        writeln!(w, "{} {} {}", num(u.b[0]), num(u.b[1]), num(u.b[2]))?;
    }
    Ok(())
}

/// Contents of a VTK file written by [`write_vtk`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VtkData {
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub scalars: BTreeMap<String, Vec<f64>>,
    pub vectors: BTreeMap<String, Vec<[f64; 3]>>,
}

pub fn read_vtk(text: &str) -> Result<VtkData, String> {
    let mut d = VtkData::default();
    let mut lines = text.lines().skip(4);
    let mut ncells = 0usize;
    let triple = |l: &str, tag: &str| -> Result<[f64; 3], String> {
        let v: Vec<f64> = l.trim_start_matches(tag).split_whitespace().map(|s| s.parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
        v.try_into().map_err(|_| format!("bad {tag} line"))
    };
    while let Some(l) = lines.next() {
        let mut take = |count: usize| -> Result<Vec<&str>, String> {
            (0..count).map(|_| lines.next().ok_or_else(|| "truncated file".to_string())).collect()
        };
        if l.starts_with("DIMENSIONS") {
            let t = triple(l, "DIMENSIONS")?;
            d.dims = [t[0] as usize, t[1] as usize, t[2] as usize];
        } else if l.starts_with("ORIGIN") {
            d.origin = triple(l, "ORIGIN")?;
        } else if l.starts_with("SPACING") {
            d.spacing = triple(l, "SPACING")?;
        } else if let Some(rest) = l.strip_prefix("CELL_DATA") {
            ncells = rest.trim().parse().map_err(|_| "bad CELL_DATA".to_string())?;
        } else if let Some(rest) = l.strip_prefix("SCALARS") {
            let name = rest.split_whitespace().next().ok_or("unnamed scalars")?.to_string();
            let rows = take(ncells + 1)?;
            let vals = rows[1..].iter().map(|s| s.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
            d.scalars.insert(name, vals);
        } else if let Some(rest) = l.strip_prefix("VECTORS") {
            let name = rest.split_whitespace().next().ok_or("unnamed vectors")?.to_string();
            let rows = take(ncells)?;
            let vals = rows.iter().map(|s| triple(s, "")).collect::<Result<_, _>>()?;
            d.vectors.insert(name, vals);
        }
    }
    Ok(d)
}

pub fn diagnostics_row(d: &StepDiagnostics) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        d.step,
        num(d.t),
        num(d.dt),
        num(d.min_rho),
        num(d.min_p),
        num(d.max_div_fo),
        num(d.max_div_ho),
        num(d.total_mass),
        d.limited_cells()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use mhdpp_core::basis::{project_initial_1d, project_initial_2d};
    use mhdpp_core::mesh::{build_rect_2d, build_uniform_1d, BoundaryCondition};
    use mhdpp_core::state::prim_to_cons;
    use mhdpp_core::PrimitiveState;

    #[test]
    fn profile_round_trip() {
        let eos = Eos::ideal(1.4).unwrap();
        let mesh = build_uniform_1d(0.0, 1.0, 7, [BoundaryCondition::Outflow, BoundaryCondition::Outflow]).unwrap();
        let f = project_initial_1d(|x| prim_to_cons(&PrimitiveState::new(1.0 + x, [x, 0.1, 0.2], 1.0 / 3.0, [0.5, x * x, 0.3]), &eos), &mesh, 2).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &f, &mesh, &eos).unwrap();
        let rows = read_profile_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(rows.len(), 7);
        for (j, r) in rows.iter().enumerate() {
            assert_eq!(r[0], mesh.center(j));
            assert_eq!(&r[1..9], &f.average_array(j)[..]);
            assert_eq!(r[9], pressure_unchecked(&f.average(j), &eos));
        }
    }

    #[test]
    fn vtk_round_trip() {
        let eos = Eos::ideal(1.4).unwrap();
        let mesh = build_rect_2d([-0.5, 0.5, 0.0, 2.0], 3, 4, std::array::from_fn(|_| BoundaryCondition::Outflow)).unwrap();
        let f = project_initial_2d(|x| prim_to_cons(&PrimitiveState::new(1.0 + x[0] * x[1], [x[1], -x[0], 0.3], 0.7, [x[1], x[0], 0.1]), &eos), &mesh, 1).unwrap();
        let div: Vec<f64> = (0..12).map(|c| c as f64 * 1e-3).collect();
        let mut buf = Vec::new();
        write_vtk(&mut buf, &f, &mesh, &eos, &div, "test").unwrap();
        let d = read_vtk(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(d.dims, [4, 5, 1]);
        assert_eq!(d.origin, [-0.5, 0.0, 0.0]);
        assert_eq!(d.spacing[1], 0.5);
        assert_eq!(d.scalars.len(), 4);
        assert_eq!(d.scalars["divB_ho"], div);
        for c in 0..12 {
            let u = f.average(c);
            assert_eq!(d.scalars["rho"][c], u.rho);
            assert_eq!(d.scalars["E"][c], u.e);
            assert_eq!(d.scalars["p"][c], pressure_unchecked(&u, &eos));
            assert_eq!(d.vectors["velocity"][c], u.velocity());
            assert_eq!(d.vectors["B"][c], u.b);
        }
    }

    #[test]
    fn diagnostics_columns() {
        let d = StepDiagnostics { step: 3, limited: [1, 2, 3], ..Default::default() };
        let row = diagnostics_row(&d);
        assert_eq!(row.split(',').count(), DIAGNOSTICS_HEADER.split(',').count());
        assert!(row.starts_with("3,") && row.ends_with(",6"));
    }
}

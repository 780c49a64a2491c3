//! Text exports: legacy VTK fields and CSV tables with fixed 17-digit
//! scientific formatting.

use crate::field::Field3;
use crate::moments::{normalize, MomentSet};
use crate::series::Coefficients;
use crate::tensor::OrthotropicModel;
use std::io::{self, Write};

/// Scientific notation with 17 significant digits, e.g. `1.0000000000000000e6`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Legacy ASCII VTK, STRUCTURED_POINTS, one double SCALARS array named
/// `concentration`, x-fastest point order.
pub fn write_vtk<W: Write>(w: &mut W, field: &Field3, title: &str) -> io::Result<()> {
    let [nx, ny, nz] = field.dims;
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    write!(w, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_POINTS\n")?;
    writeln!(w, "DIMENSIONS {nx} {ny} {nz}")?;
    writeln!(w, "ORIGIN 0 0 0")?;
    writeln!(w, "SPACING {} {} {}", fmt17(field.spacing[0]), fmt17(field.spacing[1]), fmt17(field.spacing[2]))?;
    writeln!(w, "POINT_DATA {}", field.len())?;
    writeln!(w, "SCALARS concentration double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for row in field.data.chunks(nx) {
        let line: Vec<String> = row.iter().map(|&v| fmt17(v)).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Reads back a file produced by [`write_vtk`].
pub fn read_vtk(text: &str) -> io::Result<Field3> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut dims = None;
    let mut spacing = None;
    let mut lines = text.lines();
    for line in lines.by_ref() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("DIMENSIONS") => {
                let v: Vec<usize> = parts.map(|p| p.parse().map_err(|_| bad("dimensions"))).collect::<Result<_, _>>()?;
                dims = Some([v[0], v[1], v[2]]);
            }
            Some("SPACING") => {
                let v: Vec<f64> = parts.map(|p| p.parse().map_err(|_| bad("spacing"))).collect::<Result<_, _>>()?;
                spacing = Some([v[0], v[1], v[2]]);
            }
            Some("LOOKUP_TABLE") => break,
            _ => {}
        }
    }
    let dims = dims.ok_or_else(|| bad("missing DIMENSIONS"))?;
    let spacing = spacing.ok_or_else(|| bad("missing SPACING"))?;
    let data: Vec<f64> = lines
        .flat_map(|l| l.split_whitespace())
        .map(|p| p.parse().map_err(|_| bad("value")))
        .collect::<Result<_, _>>()?;
    if data.len() != dims.iter().product::<usize>() {
        return Err(bad("point count"));
    }
    Ok(Field3 { dims, spacing, data, time: f64::NAN })
}

/// `index,B,H,S` for separable sets, `l,m,n,value` otherwise.
pub fn write_coefficients_csv<W: Write>(w: &mut W, c: &Coefficients) -> io::Result<()> {
    match c {
        Coefficients::Separable(s) => {
            writeln!(w, "index,B,H,S")?;
            for k in 0..=s.n_terms() {
                writeln!(w, "{k},{},{},{}", fmt17(s.b[k]), fmt17(s.h[k]), fmt17(s.s[k]))?;
            }
        }
        Coefficients::General(g) => {
            writeln!(w, "l,m,n,value")?;
            for (&[l, m, n], &v) in &g.entries {
                writeln!(w, "{l},{m},{n},{}", fmt17(v))?;
            }
        }
    }
    Ok(())
}

pub const MOMENTS_HEADER: &str = "t_seconds,t_star,m0,mx_star,my_star,mz_star,Mxx_star,Myy_star,Mzz_star";

pub fn moments_row(ms: &MomentSet, model: &OrthotropicModel) -> String {
    let n = normalize(ms, model);
    let vals = [
        ms.t, n.t_star, ms.m0, n.first[0], n.first[1], n.first[2], n.second[0], n.second[1], n.second[2],
    ];
    vals.iter().map(|&v| fmt17(v)).collect::<Vec<_>>().join(",")
}

pub fn write_moments_csv<W: Write>(w: &mut W, rows: &[MomentSet], model: &OrthotropicModel) -> io::Result<()> {
    writeln!(w, "{MOMENTS_HEADER}")?;
    for ms in rows {
        writeln!(w, "{}", moments_row(ms, model))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_is_fixed_width_scientific() {
        assert_eq!(fmt17(1e6), "1.0000000000000000e6");
        assert_eq!(fmt17(-0.25), "-2.5000000000000000e-1");
        let v = 0.1 + 0.2;
        assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn vtk_round_trip() {
        let mut f = Field3::zeros([3, 2, 2], [1.0, 0.5, 0.5], 0.0);
        for (i, v) in f.data.iter_mut().enumerate() {
            *v = i as f64 / 7.0;
        }
        let mut buf = Vec::new();
        write_vtk(&mut buf, &f, "test").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("SCALARS concentration double 1"));
        assert!(text.contains("DATASET STRUCTURED_POINTS"));
        let g = read_vtk(&text).unwrap();
        assert_eq!(g.dims, f.dims);
        assert_eq!(g.data, f.data);
        assert_eq!(g.spacing, f.spacing);
    }

    #[test]
    fn moments_csv_header() {
        let m = OrthotropicModel::reference();
        let ms = MomentSet { t: 25000.0, m0: 1.0, first: [0.005; 3], second: [m.m_inf(); 3] };
        let mut buf = Vec::new();
        write_moments_csv(&mut buf, &[ms], &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), MOMENTS_HEADER);
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[1], 1.0);
        assert_eq!(row[3], 0.5);
        assert!((row[6] - 1.0).abs() < 1e-15);
    }
}

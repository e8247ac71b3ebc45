//! File formats: symbols as raw little-endian complex arrays with a JSON
//! sidecar carrying the grid metadata, quadrature node tables as CSV, and
//! trajectory norm series as CSV. All writers emit deterministic bytes for a
//! given input.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::doi::BSQuadrature;
use crate::evolve::TrajectoryRecord;
use crate::symbol::{GridSpec, Symbol};
use crate::theta::ThetaData;
use crate::{MoyalError, Result};

/// Sidecar metadata for a stored symbol array.
#[derive(Debug, Serialize, Deserialize)]
pub struct SymbolSidecar {
    pub t_max: f64,
    pub m: usize,
    pub theta0: f64,
    pub layout: String,
    pub complex: String,
}

/// Write a symbol as `<path>` (raw f64 pairs, row major) plus
/// `<path>.json` metadata.
pub fn write_symbol(sym: &Symbol, path: &Path) -> Result<()> {
    let m = sym.grid.points();
    let mut bytes = Vec::with_capacity(m * m * 16);
    for z in sym.data.iter() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::write(path, bytes)?;
    let sidecar = SymbolSidecar {
        t_max: sym.grid.t_max(),
        m,
        theta0: sym.grid.theta().theta0(),
        layout: "row-major".into(),
        complex: "interleaved-le-f64".into(),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| MoyalError::Config(e.to_string()))?;
    fs::write(path.with_extension("json"), json)?;
    Ok(())
}

pub fn read_symbol(path: &Path) -> Result<Symbol> {
    let json = fs::read_to_string(path.with_extension("json"))?;
    let sidecar: SymbolSidecar =
        serde_json::from_str(&json).map_err(|e| MoyalError::Config(e.to_string()))?;
    if sidecar.layout != "row-major" || sidecar.complex != "interleaved-le-f64" {
        return Err(MoyalError::Config(format!(
            "unsupported symbol layout {}/{}",
            sidecar.layout, sidecar.complex
        )));
    }
    let bytes = fs::read(path)?;
    let m = sidecar.m;
    if bytes.len() != m * m * 16 {
        return Err(MoyalError::Config(format!(
            "symbol payload has {} bytes, expected {}",
            bytes.len(),
            m * m * 16
        )));
    }
    let theta = ThetaData::new(sidecar.theta0)?;
    let grid = GridSpec::new(sidecar.t_max, m, theta)?;
    let mut data = Array2::<Complex64>::zeros((m, m));
    for (k, chunk) in bytes.chunks_exact(16).enumerate() {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        data[[k / m, k % m]] = Complex64::new(re, im);
    }
    Ok(Symbol::new(grid, data))
}

/// Write a real-valued table (a partition cutoff or multiplier) in the same
/// binary + sidecar format as symbols, with zero imaginary parts.
pub fn write_real_table(
    table: &ndarray::ArrayView2<'_, f64>,
    grid: &GridSpec,
    path: &Path,
) -> Result<()> {
    let data = Array2::from_shape_fn(table.dim(), |(i, j)| Complex64::new(table[[i, j]], 0.0));
    write_symbol(&Symbol::new(grid.clone(), data), path)
}

/// Quadrature nodes as CSV: eta, xi, weight_re, weight_im.
pub fn write_quadrature_csv(quad: &BSQuadrature, path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "eta,xi,weight_re,weight_im")?;
    for node in &quad.nodes {
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            node.eta, node.xi, node.weight.re, node.weight.im
        )?;
    }
    Ok(())
}

/// Trajectory norm series as CSV; one row per record. Columns are documented
/// in docs/formats.md.
pub fn write_trajectory_csv(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(
        out,
        "t,l2,linf,hermitian_residual,divergence_residual,advection_orthogonality,ratio,dealias_tail"
    )?;
    for r in &record.norms {
        writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.t,
            r.l2,
            r.linf,
            r.hermitian_residual,
            r.divergence_residual,
            r.advection_orthogonality,
            r.ratio,
            r.dealias_tail
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{band_limited_symbol, rng_from_seed};

    #[test]
    fn symbol_round_trips_through_files() {
        let theta = ThetaData::new(1.0).unwrap();
        let grid = GridSpec::new(8.0, 64, theta).unwrap();
        let mut rng = rng_from_seed(1);
        let sym = band_limited_symbol(&grid, 3.0, &mut rng);
        let dir = std::env::temp_dir().join("moyal-io-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sym.bin");
        write_symbol(&sym, &path).unwrap();
        let back = read_symbol(&path).unwrap();
        assert_eq!(back.grid, sym.grid);
        assert_eq!(back.data, sym.data);
    }

    #[test]
    fn quadrature_nodes_export_as_csv() {
        let f = crate::doi::ScalarFunction::linear_windowed(1.0);
        let quad = crate::doi::bs_decompose(&f, 1e-5).unwrap();
        let dir = std::env::temp_dir().join("moyal-io-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("quad.csv");
        write_quadrature_csv(&quad, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "eta,xi,weight_re,weight_im");
        assert_eq!(text.lines().count(), quad.nodes.len() + 1);
    }

    #[test]
    fn partition_tables_export_through_the_symbol_format() {
        let theta = ThetaData::new(1.0).unwrap();
        let grid = GridSpec::new(8.0, 64, theta).unwrap();
        let part = crate::lp::build_partition(&grid, 2).unwrap();
        let dir = std::env::temp_dir().join("moyal-io-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("psi1.bin");
        write_real_table(&part.psi[1].view(), &grid, &path).unwrap();
        let back = read_symbol(&path).unwrap();
        for ((i, j), z) in back.data.indexed_iter() {
            assert_eq!(z.re, part.psi[1][[i, j]]);
            assert_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn writers_are_byte_deterministic() {
        let theta = ThetaData::new(1.0).unwrap();
        let grid = GridSpec::new(8.0, 64, theta).unwrap();
        let mut rng = rng_from_seed(2);
        let sym = band_limited_symbol(&grid, 3.0, &mut rng);
        let dir = std::env::temp_dir().join("moyal-io-test");
        fs::create_dir_all(&dir).unwrap();
        let (p1, p2) = (dir.join("a.bin"), dir.join("b.bin"));
        write_symbol(&sym, &p1).unwrap();
        write_symbol(&sym, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        assert_eq!(
            fs::read(p1.with_extension("json")).unwrap(),
            fs::read(p2.with_extension("json")).unwrap()
        );
    }
}

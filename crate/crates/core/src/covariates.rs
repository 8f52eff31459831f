//! Covariate rasters on a regular lattice.
//!
//! Rows `x,y,w1,...,wp` give the covariate vector at lattice nodes. Columns
//! are standardised to mean 0 and unit variance over the nodes when the
//! raster is built. Lookups use the nearest node or bilinear interpolation;
//! queries further than half a cell outside the lattice are an error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Location;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Interpolation {
    #[default]
    Nearest,
    Bilinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariateRaster {
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    p: usize,
    /// Node-major: node `(i, j)` at `(j * nx + i) * p`.
    values: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
    interpolation: Interpolation,
}

fn lattice_axis(mut v: Vec<f64>, name: &str) -> Result<(f64, f64, usize)> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    let n = v.len();
    if n == 1 {
        return Ok((v[0], 1.0, 1));
    }
    let step = (v[n - 1] - v[0]) / (n - 1) as f64;
    for (k, &x) in v.iter().enumerate() {
        let expect = v[0] + step * k as f64;
        if (x - expect).abs() > 1e-6 * step {
            return Err(Error::Data(format!(
                "covariate {name} coordinates are not a regular lattice"
            )));
        }
    }
    Ok((v[0], step, n))
}

impl CovariateRaster {
    /// Builds a raster from node rows `(x, y, w)`, each `w` of equal length.
    pub fn from_rows(rows: &[(f64, f64, Vec<f64>)], interpolation: Interpolation) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Data("empty covariate raster".into()));
        }
        let p = rows[0].2.len();
        if p == 0 {
            return Err(Error::Data("covariate raster has no covariate columns".into()));
        }
        if rows.iter().any(|r| r.2.len() != p) {
            return Err(Error::Data("ragged covariate rows".into()));
        }
        if rows
            .iter()
            .any(|r| !r.0.is_finite() || !r.1.is_finite() || r.2.iter().any(|w| !w.is_finite()))
        {
            return Err(Error::Data("non-finite value in covariate raster".into()));
        }
        let (x0, dx, nx) = lattice_axis(rows.iter().map(|r| r.0).collect(), "x")?;
        let (y0, dy, ny) = lattice_axis(rows.iter().map(|r| r.1).collect(), "y")?;
        if nx * ny != rows.len() {
            return Err(Error::Data(format!(
                "covariate raster has {} rows but the lattice has {nx}x{ny} nodes",
                rows.len()
            )));
        }
        let mut values = vec![f64::NAN; nx * ny * p];
        for (x, y, w) in rows {
            let i = ((x - x0) / dx).round() as usize;
            let j = ((y - y0) / dy).round() as usize;
            let at = (j * nx + i) * p;
            if !values[at].is_nan() {
                return Err(Error::Data(format!("duplicate covariate node at ({x}, {y})")));
            }
            values[at..at + p].copy_from_slice(w);
        }
        let n = (nx * ny) as f64;
        let mut means = vec![0.0; p];
        let mut sds = vec![0.0; p];
        for c in 0..p {
            let m = values.iter().skip(c).step_by(p).sum::<f64>() / n;
            let v = values.iter().skip(c).step_by(p).map(|w| (w - m) * (w - m)).sum::<f64>() / n;
            if !(v > 1e-24 * (1.0 + m * m)) {
                return Err(Error::SingularDesign(format!("covariate column {} is constant", c + 1)));
            }
            means[c] = m;
            sds[c] = v.sqrt();
        }
        for node in values.chunks_mut(p) {
            for c in 0..p {
                node[c] = (node[c] - means[c]) / sds[c];
            }
        }
        Ok(CovariateRaster {
            nx,
            ny,
            x0,
            y0,
            dx,
            dy,
            p,
            values,
            means,
            sds,
            interpolation,
        })
    }

    /// Number of covariates.
    pub fn dim(&self) -> usize {
        self.p
    }

    /// Column means and standard deviations used for standardisation.
    pub fn scaling(&self) -> (&[f64], &[f64]) {
        (&self.means, &self.sds)
    }

    fn node(&self, i: usize, j: usize) -> &[f64] {
        let at = (j * self.nx + i) * self.p;
        &self.values[at..at + self.p]
    }

    /// Standardised covariate vector at `s`, written into `out`.
    pub fn eval_into(&self, s: &Location, out: &mut [f64]) -> Result<()> {
        let fx = (s.x - self.x0) / self.dx;
        let fy = (s.y - self.y0) / self.dy;
        let hx = (self.nx - 1) as f64 + 0.5;
        let hy = (self.ny - 1) as f64 + 0.5;
        if !(fx >= -0.5 && fx <= hx && fy >= -0.5 && fy <= hy) {
            return Err(Error::OutsideRaster { x: s.x, y: s.y });
        }
        match self.interpolation {
            Interpolation::Nearest => {
                let i = (fx.round().max(0.0) as usize).min(self.nx - 1);
                let j = (fy.round().max(0.0) as usize).min(self.ny - 1);
                out.copy_from_slice(self.node(i, j));
            }
            Interpolation::Bilinear => {
                let cx = fx.clamp(0.0, (self.nx - 1) as f64);
                let cy = fy.clamp(0.0, (self.ny - 1) as f64);
                let i0 = (cx.floor() as usize).min(self.nx.saturating_sub(2));
                let j0 = (cy.floor() as usize).min(self.ny.saturating_sub(2));
                let i1 = (i0 + 1).min(self.nx - 1);
                let j1 = (j0 + 1).min(self.ny - 1);
                let tx = (cx - i0 as f64).clamp(0.0, 1.0);
                let ty = (cy - j0 as f64).clamp(0.0, 1.0);
                for c in 0..self.p {
                    let a = self.node(i0, j0)[c] * (1.0 - tx) + self.node(i1, j0)[c] * tx;
                    let b = self.node(i0, j1)[c] * (1.0 - tx) + self.node(i1, j1)[c] * tx;
                    out[c] = a * (1.0 - ty) + b * ty;
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: &Location) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.p];
        self.eval_into(s, &mut out)?;
        Ok(out)
    }

    /// `W(s)' alpha`.
    pub fn linear_term(&self, s: &Location, alpha: &[f64]) -> Result<f64> {
        let mut w = vec![0.0; self.p];
        self.eval_into(s, &mut w)?;
        Ok(w.iter().zip(alpha).map(|(a, b)| a * b).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64, f64) -> Vec<f64>) -> Vec<(f64, f64, Vec<f64>)> {
        let mut rows = Vec::new();
        for j in 0..4 {
            for i in 0..5 {
                let (x, y) = (i as f64 * 2.0, j as f64);
                rows.push((x, y, f(x, y)));
            }
        }
        rows
    }

    #[test]
    fn standardised_nearest_lookup() {
        let r = CovariateRaster::from_rows(&grid(|x, _| vec![x]), Interpolation::Nearest).unwrap();
        // x in {0,2,4,6,8}: mean 4, sd sqrt(8)
        let w = r.eval(&Location::new(5.9, 1.2)).unwrap();
        assert!((w[0] - 2.0 / 8f64.sqrt()).abs() < 1e-12);
        assert!(r.eval(&Location::new(-1.01, 0.0)).is_err());
        assert!(r.eval(&Location::new(-0.99, 0.0)).is_ok());
    }

    #[test]
    fn bilinear_reproduces_linear_field() {
        let r = CovariateRaster::from_rows(&grid(|x, y| vec![x + 3.0 * y]), Interpolation::Bilinear).unwrap();
        let (m, s) = r.scaling();
        let (m, s) = (m[0], s[0]);
        for &(x, y) in &[(0.3, 0.2), (7.9, 2.9), (4.0, 1.5)] {
            let w = r.eval(&Location::new(x, y)).unwrap()[0];
            assert!((w * s + m - (x + 3.0 * y)).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_column_is_singular() {
        let e = CovariateRaster::from_rows(&grid(|x, _| vec![x, 1.0]), Interpolation::Nearest);
        assert!(matches!(e, Err(Error::SingularDesign(_))));
    }

    #[test]
    fn irregular_lattice_rejected() {
        let mut rows = grid(|x, _| vec![x]);
        rows[3].0 += 0.5;
        assert!(CovariateRaster::from_rows(&rows, Interpolation::Nearest).is_err());
        rows.pop();
        assert!(CovariateRaster::from_rows(&grid(|x, _| vec![x])[1..], Interpolation::Nearest).is_err());
    }
}

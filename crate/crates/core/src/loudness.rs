//! Band loudness: `L = 10 log10( (1/Δω) ∫_band |p(ω)|² dω )`, sampled at
//! every accessible cell center of the scene grid.
//!
//! The band integral uses the composite trapezoid rule on `n` equally spaced
//! angular frequencies that include both band edges. Every frequency needs
//! one surface solve, which is then reused for all cells.

use num_complex::Complex64;

use crate::bem::{build_mesh, exterior_pressure, incident_pressure, solve_surface, BoundaryMesh, SurfaceSolution};
use crate::geometry::Point;
use crate::scene::SceneConfig;
use crate::shapes::ShapeRecord;
use crate::{Error, Result};

/// Lowest loudness reported, in dB; band energies below `10^(FLOOR_DB/10)`
/// are clamped to it.
pub const FLOOR_DB: f64 = -120.0;

/// Numeric payload stored for cells whose loudness is unknown. The mask is
/// authoritative; this only keeps the tensor finite-typed and easy to spot.
pub const UNKNOWN: f32 = f32::MIN;

/// Object id used in error reports for scenes without an object.
pub const FREE_FIELD_ID: &str = "free-field";

/// Trapezoid nodes `(ω, weight)` over `[lo, hi]`; weights sum to `hi − lo`.
pub fn quadrature_frequencies(band: (f64, f64), n: usize) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = band;
    if n < 2 {
        return Err(Error::Contract(format!("need at least 2 quadrature nodes, got {n}")));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Contract(format!("band ({lo}, {hi}) has no width")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|m| {
            let omega = if m == n - 1 { hi } else { lo + m as f64 * step };
            let w = if m == 0 || m == n - 1 { 0.5 * step } else { step };
            (omega, w)
        })
        .collect())
}

/// Band loudness in dB from `|p|²` sampled at the trapezoid nodes of `band`.
pub fn loudness_from_energy(energy: &[f64], band: (f64, f64)) -> Result<f64> {
    let nodes = quadrature_frequencies(band, energy.len())?;
    let width = band.1 - band.0;
    let mean: f64 = nodes.iter().zip(energy).map(|(&(_, w), &e)| w * e).sum::<f64>() / width;
    Ok(to_db(mean))
}

/// Band loudness in dB of the pressures sampled at the trapezoid nodes of `band`.
pub fn loudness_at(pressures: &[Complex64], band: (f64, f64)) -> Result<f64> {
    let energy: Vec<f64> = pressures.iter().map(|p| p.norm_sqr()).collect();
    loudness_from_energy(&energy, band)
}

fn to_db(mean_energy: f64) -> f64 {
    let floor = 10f64.powf(FLOOR_DB / 10.0);
    10.0 * mean_energy.max(floor).log10()
}

/// Per-band loudness for one (object, source) pair on a fixed set of points.
pub struct BandField<'a> {
    cfg: &'a SceneConfig,
    object: Option<&'a ShapeRecord>,
    mesh: Option<BoundaryMesh>,
    source_index: usize,
    band: usize,
    source: Point,
}

impl<'a> BandField<'a> {
    /// Meshes the object at the band's upper edge so one mesh serves every
    /// quadrature frequency.
    pub fn new(cfg: &'a SceneConfig, object: Option<&'a ShapeRecord>, source_index: usize, band: usize) -> Result<Self> {
        cfg.validate()?;
        let source = cfg.source_position(source_index)?;
        let (_, hi) = cfg.band_edges(band)?;
        let mesh = match object {
            Some(rec) => Some(
                build_mesh(&rec.polygon, cfg.wavenumber(hi), cfg.elements_per_wavelength)?
                    .with_object_id(rec.id.clone()),
            ),
            None => None,
        };
        Ok(BandField {
            cfg,
            object,
            mesh,
            source_index,
            band,
            source,
        })
    }

    pub fn mesh(&self) -> Option<&BoundaryMesh> {
        self.mesh.as_ref()
    }

    pub fn nodes(&self) -> Result<Vec<(f64, f64)>> {
        quadrature_frequencies(self.cfg.band_edges(self.band)?, self.cfg.freq_samples_per_band)
    }

    fn annotate(&self, omega: f64, cause: Error) -> Error {
        Error::Task {
            object: self.object.map_or(FREE_FIELD_ID.to_string(), |r| r.id.clone()),
            source_index: self.source_index,
            band: self.band,
            omega,
            cause: Box::new(cause),
        }
    }

    /// Surface solve at angular frequency `omega`; `None` without an object.
    pub fn solve(&self, omega: f64) -> Result<Option<SurfaceSolution>> {
        let k = self.cfg.wavenumber(omega);
        match &self.mesh {
            Some(mesh) => solve_surface(mesh, self.source, k)
                .map(Some)
                .map_err(|e| self.annotate(omega, e)),
            None => Ok(None),
        }
    }

    /// `|p|²` at `points` for angular frequency `omega`.
    pub fn energy_plane(&self, omega: f64, points: &[Point]) -> Result<Vec<f64>> {
        self.energy_plane_traced(omega, points).map(|(e, _)| e)
    }

    /// As [`energy_plane`](Self::energy_plane), plus the solve's condition estimate.
    fn energy_plane_traced(&self, omega: f64, points: &[Point]) -> Result<(Vec<f64>, Option<f64>)> {
        let k = self.cfg.wavenumber(omega);
        let sol = self.solve(omega)?;
        let condition = sol.as_ref().map(|s| s.condition_estimate);
        let energy = points
            .iter()
            .map(|&x| {
                let p = match (&sol, &self.mesh) {
                    (Some(sol), Some(mesh)) => exterior_pressure(sol, mesh, x),
                    _ => incident_pressure(self.source, k, x),
                };
                p.map(|p| p.norm_sqr()).map_err(|e| self.annotate(omega, e))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((energy, condition))
    }

    /// Band loudness in dB at `points`. Planes are accumulated in node order.
    pub fn loudness(&self, points: &[Point]) -> Result<Vec<f64>> {
        self.loudness_traced(points).map(|(db, _)| db)
    }

    /// Loudness plus the worst condition estimate over the band's solves
    /// (`None` for the free field).
    pub fn loudness_traced(&self, points: &[Point]) -> Result<(Vec<f64>, Option<f64>)> {
        let band = self.cfg.band_edges(self.band)?;
        let width = band.1 - band.0;
        let mut acc = vec![0.0; points.len()];
        let mut worst: Option<f64> = None;
        for (omega, w) in self.nodes()? {
            let (plane, condition) = self.energy_plane_traced(omega, points)?;
            if let Some(c) = condition {
                worst = Some(worst.map_or(c, |m| m.max(c)));
            }
            for (a, e) in acc.iter_mut().zip(plane) {
                *a += w * e;
            }
        }
        Ok((acc.into_iter().map(|e| to_db(e / width)).collect(), worst))
    }
}

/// Loudness in dB for one (source, band) over the whole scene grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LoudnessGrid {
    /// Cells per side.
    pub dim: usize,
    /// Row-major dB values; [`UNKNOWN`] where `known` is false.
    pub values: Vec<f32>,
    /// `true` for accessible cells.
    pub known: Vec<bool>,
    pub band: usize,
    pub source_index: usize,
    pub config_digest: String,
}

impl LoudnessGrid {
    pub fn get(&self, row: usize, col: usize) -> Option<f32> {
        let idx = row * self.dim + col;
        self.known[idx].then(|| self.values[idx])
    }
}

/// Computes the loudness grid of `object` (or of the free field) for source
/// `source_index` and band `band`.
pub fn compute_grid(cfg: &SceneConfig, object: Option<&ShapeRecord>, source_index: usize, band: usize) -> Result<LoudnessGrid> {
    compute_grid_traced(cfg, object, source_index, band).map(|(g, _)| g)
}

/// [`compute_grid`] plus the worst boundary-system condition estimate.
pub fn compute_grid_traced(
    cfg: &SceneConfig,
    object: Option<&ShapeRecord>,
    source_index: usize,
    band: usize,
) -> Result<(LoudnessGrid, Option<f64>)> {
    let field = BandField::new(cfg, object, source_index, band)?;
    let grid = cfg.grid_points();
    let known: Vec<bool> = grid.iter().map(|g| g.access == crate::scene::Access::Accessible).collect();
    let points: Vec<Point> = grid.iter().filter(|g| g.access == crate::scene::Access::Accessible).map(|g| g.center).collect();
    let (db, condition) = field.loudness_traced(&points)?;
    let mut values = vec![UNKNOWN; grid.len()];
    let mut it = db.into_iter();
    for (v, &k) in values.iter_mut().zip(&known) {
        if k {
            *v = it.next().expect("one value per accessible cell") as f32;
        }
    }
    let grid = LoudnessGrid {
        dim: cfg.grid_dim(),
        values,
        known,
        band,
        source_index,
        config_digest: cfg.digest(),
    };
    Ok((grid, condition))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_nodes_sit_on_the_edges() {
        let q = quadrature_frequencies((10.0, 14.0), 2).unwrap();
        assert_eq!(q, vec![(10.0, 2.0), (14.0, 2.0)]);
    }

    #[test]
    fn weights_sum_to_band_width() {
        for n in 2..20 {
            let q = quadrature_frequencies((1571.0, 3142.0), n).unwrap();
            let total: f64 = q.iter().map(|&(_, w)| w).sum();
            assert!((total - 1571.0).abs() < 1e-9);
            assert_eq!(q.last().unwrap().0, 3142.0);
        }
    }

    #[test]
    fn linear_integrands_are_exact() {
        let band = (2.0, 7.0);
        for n in 2..9 {
            let q = quadrature_frequencies(band, n).unwrap();
            let got: f64 = q.iter().map(|&(w_, w)| w * (3.0 * w_ + 1.0)).sum();
            let exact = 1.5 * (49.0 - 4.0) + 5.0;
            assert!((got - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_pressure_levels() {
        let band = (100.0, 200.0);
        let one = vec![Complex64::new(0.6, 0.8); 8];
        assert!(loudness_at(&one, band).unwrap().abs() < 1e-12);
        let ten = vec![Complex64::new(0.0, 10.0); 5];
        assert!((loudness_at(&ten, band).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(loudness_at(&[Complex64::new(0.0, 0.0); 3], band).unwrap(), FLOOR_DB);
    }

    #[test]
    fn rejects_bad_quadrature() {
        assert!(quadrature_frequencies((1.0, 2.0), 1).is_err());
        assert!(quadrature_frequencies((2.0, 2.0), 4).is_err());
    }
}

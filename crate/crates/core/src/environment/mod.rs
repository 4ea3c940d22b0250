//! Random environment: the Poissonian trap field, point-in-trap queries,
//! clearing searches and the clearing-scale constants.

mod clearing;
mod index;
mod io;

pub use clearing::{
    clearing_scale, good_point_hit, largest_clearing, lattice_cube_centers, ClearingMode,
    ClearingReport, ClearingScale,
};
pub use index::CellIndex;
pub use io::{read_env_file, write_env_file, ENV_FORMAT_TAG};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, AxisBox, Point};
use crate::kernels::{sample_ppp_in_box, RngStream};

/// A realized trap field `K = union of closed balls B(x_i, a)`.
///
/// Atoms are sampled in `domain` padded by the trap radius, so every trap
/// that can touch the domain is represented. Queries are accepted only inside
/// `domain`.
#[derive(Clone, Debug)]
pub struct TrapField {
    dim: usize,
    intensity: f64,
    trap_radius: f64,
    atoms: Vec<Point>,
    domain: AxisBox,
    bounding_box: AxisBox,
    env_seed: u64,
    index: CellIndex,
}

fn validate(dim: usize, intensity: f64, trap_radius: f64, domain: &AxisBox) -> Result<()> {
    check_dim(dim)?;
    if domain.dim() != dim {
        return Err(Error::param("box", format!("box has dimension {} but field has {dim}", domain.dim())));
    }
    if !(trap_radius > 0.0) || !trap_radius.is_finite() {
        return Err(Error::param("trap_radius", format!("must be positive, got {trap_radius}")));
    }
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(Error::param("nu", format!("must be non-negative, got {intensity}")));
    }
    if (0..dim).any(|k| domain.extent(k) < 2.0 * trap_radius) {
        return Err(Error::param("box", "box is smaller than one trap diameter"));
    }
    Ok(())
}

impl TrapField {
    /// Samples the PPP of intensity `nu` on the padded domain from `env_stream`.
    pub fn build(env_stream: &mut RngStream, dim: usize, nu: f64, a: f64, domain: AxisBox) -> Result<Self> {
        validate(dim, nu, a, &domain)?;
        let bounding_box = domain.padded(a);
        let atoms = sample_ppp_in_box(env_stream, nu, &bounding_box)?;
        Ok(Self::assemble(dim, nu, a, atoms, domain, bounding_box, env_stream.seed()))
    }

    /// A field with explicitly given atoms (fixtures, loaded files).
    pub fn from_atoms(
        dim: usize,
        nu: f64,
        a: f64,
        domain: AxisBox,
        atoms: Vec<Point>,
        env_seed: u64,
    ) -> Result<Self> {
        validate(dim, nu, a, &domain)?;
        let bounding_box = domain.padded(a);
        if let Some(bad) = atoms.iter().find(|p| p.dim() != dim || !bounding_box.contains(p)) {
            return Err(Error::OutOfDomain { point: bad.to_vec() });
        }
        Ok(Self::assemble(dim, nu, a, atoms, domain, bounding_box, env_seed))
    }

    /// Coupled fields for increasing intensities: one PPP at the largest
    /// intensity with i.i.d. uniform marks, thinned by mark. Fields for larger
    /// intensities are supersets of those for smaller ones.
    pub fn build_nested(
        env_stream: &mut RngStream,
        dim: usize,
        intensities: &[f64],
        a: f64,
        domain: AxisBox,
    ) -> Result<Vec<Self>> {
        let nu_max = intensities.iter().cloned().fold(0.0, f64::max);
        validate(dim, nu_max, a, &domain)?;
        if let Some(bad) = intensities.iter().find(|nu| !(**nu >= 0.0)) {
            return Err(Error::param("nu", format!("must be non-negative, got {bad}")));
        }
        let bounding_box = domain.padded(a);
        let atoms = sample_ppp_in_box(env_stream, nu_max, &bounding_box)?;
        let marks: Vec<f64> = atoms.iter().map(|_| env_stream.uniform()).collect();
        Ok(intensities
            .iter()
            .map(|&nu| {
                let keep = if nu_max > 0.0 { nu / nu_max } else { 0.0 };
                let subset = atoms
                    .iter()
                    .zip(&marks)
                    .filter(|(_, m)| **m < keep)
                    .map(|(p, _)| *p)
                    .collect();
                Self::assemble(dim, nu, a, subset, domain.clone(), bounding_box.clone(), env_stream.seed())
            })
            .collect())
    }

    fn assemble(
        dim: usize,
        intensity: f64,
        trap_radius: f64,
        atoms: Vec<Point>,
        domain: AxisBox,
        bounding_box: AxisBox,
        env_seed: u64,
    ) -> Self {
        let index = CellIndex::build(&bounding_box, trap_radius, &atoms);
        TrapField {
            dim,
            intensity,
            trap_radius,
            atoms,
            domain,
            bounding_box,
            env_seed,
            index,
        }
    }

    /// Adds atoms to the same field (superposition coupling).
    pub fn with_extra_atoms(&self, extra: &[Point]) -> Result<Self> {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(extra);
        Self::from_atoms(
            self.dim,
            self.intensity,
            self.trap_radius,
            self.domain.clone(),
            atoms,
            self.env_seed,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn trap_radius(&self) -> f64 {
        self.trap_radius
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn domain(&self) -> &AxisBox {
        &self.domain
    }

    pub fn bounding_box(&self) -> &AxisBox {
        &self.bounding_box
    }

    pub fn env_seed(&self) -> u64 {
        self.env_seed
    }

    pub fn index(&self) -> &CellIndex {
        &self.index
    }

    pub(crate) fn check_domain(&self, x: &Point) -> Result<()> {
        if x.dim() == self.dim && self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { point: x.to_vec() })
        }
    }

    /// Whether `x` lies in the closed trap set `K`.
    pub fn is_in_trap(&self, x: &Point) -> Result<bool> {
        self.check_domain(x)?;
        Ok(self.contains_unchecked(x))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, x: &Point) -> bool {
        self.index.any_within(x, self.trap_radius)
    }

    /// Distance to the nearest atom (`None` for an empty field).
    pub fn nearest_atom_distance(&self, x: &Point) -> Result<Option<f64>> {
        self.check_domain(x)?;
        Ok(self.index.nearest_distance(x))
    }

    /// Radius of the largest trap-free open ball centred at `x`, ignoring the
    /// domain boundary. Infinite for an empty field, zero inside a trap.
    pub fn free_radius_at(&self, x: &Point) -> Result<f64> {
        Ok(match self.nearest_atom_distance(x)? {
            None => f64::INFINITY,
            Some(d) => (d - self.trap_radius).max(0.0),
        })
    }
}

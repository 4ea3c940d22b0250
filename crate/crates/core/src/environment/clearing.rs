use serde::{Deserialize, Serialize};

use super::TrapField;
use crate::error::{Error, Result};
use crate::geometry::{check_dim, AxisBox, Point};
use crate::theory::omega_d;

/// Whether a clearing must also fit inside the search box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClearingMode {
    Inscribed,
    Unconstrained,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClearingReport {
    pub center: Point,
    pub radius: f64,
    pub search_box: AxisBox,
    /// Actual grid pitch used, never larger than the requested resolution.
    pub resolution: f64,
}

/// Grid search for the largest trap-free open ball centred in `search_box`.
///
/// Grid nodes include the faces of the box, and every axis uses an even
/// number of intervals so the box centre is always a candidate. The reported
/// radius is a certified lower bound on the true largest clearing.
pub fn largest_clearing(
    field: &TrapField,
    search_box: &AxisBox,
    resolution: f64,
    mode: ClearingMode,
) -> Result<ClearingReport> {
    if search_box.dim() != field.dim() {
        return Err(Error::param("search_box", "dimension differs from the field"));
    }
    if search_box.is_degenerate() {
        return Err(Error::param("search_box", "search box is empty"));
    }
    if !(resolution > 0.0) || resolution > field.trap_radius() / 2.0 {
        return Err(Error::param(
            "resolution",
            format!("must lie in (0, a/2], got {resolution}"),
        ));
    }
    if !field.domain().contains_box(search_box) {
        return Err(Error::OutOfDomain {
            point: search_box.hi.clone(),
        });
    }
    let dim = field.dim();
    let intervals: Vec<usize> = (0..dim)
        .map(|k| {
            let n = (search_box.extent(k) / resolution).ceil() as usize;
            (n + n % 2).max(2)
        })
        .collect();
    let pitch: Vec<f64> = (0..dim)
        .map(|k| search_box.extent(k) / intervals[k] as f64)
        .collect();
    let node = |k: usize, i: usize| {
        if i == intervals[k] {
            search_box.hi[k]
        } else {
            search_box.lo[k] + i as f64 * pitch[k]
        }
    };

    let a = field.trap_radius();
    let mut best_center = search_box.center();
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; dim];
    let mut coords = vec![0.0; dim];
    loop {
        for k in 0..dim {
            coords[k] = node(k, idx[k]);
        }
        let x = Point::from_slice(&coords)?;
        let mut radius = match field.index().nearest_distance(&x) {
            None => f64::INFINITY,
            Some(d) => (d - a).max(0.0),
        };
        if mode == ClearingMode::Inscribed {
            radius = radius.min(search_box.distance_to_boundary(&x));
        }
        if radius > best {
            best = radius;
            best_center = x;
        }
        let mut axis = 0;
        loop {
            if axis == dim {
                return Ok(ClearingReport {
                    center: best_center,
                    radius: best,
                    search_box: search_box.clone(),
                    resolution: pitch.iter().cloned().fold(0.0, f64::max),
                });
            }
            if idx[axis] < intervals[axis] {
                idx[axis] += 1;
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Clearing radii `R0` and `R_ell`, with `clamped` set when the raw `R_ell`
/// formula is negative and was replaced by zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClearingScale {
    pub r0: f64,
    pub r_ell: f64,
    pub clamped: bool,
}

pub fn clearing_scale(dim: usize, nu: f64, ell: f64) -> Result<ClearingScale> {
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::param("nu", format!("must be positive, got {nu}")));
    }
    if !(ell > std::f64::consts::E) {
        return Err(Error::param("ell", format!("must exceed e, got {ell}")));
    }
    let d = dim as f64;
    let r0 = (d / (nu * omega_d(dim))).powf(1.0 / d);
    let ll = ell.ln().ln();
    let raw = r0 * ell.ln().powf(1.0 / d) - ll * ll;
    Ok(ClearingScale {
        r0,
        r_ell: raw.max(0.0),
        clamped: raw < 0.0,
    })
}

/// True when some vertex `x` of `path` has `B(x, clearing_radius)` free of
/// traps, that is nearest-atom distance at least `clearing_radius + a`.
pub fn good_point_hit(field: &TrapField, path: &[(f64, Point)], clearing_radius: f64) -> Result<bool> {
    if !(clearing_radius >= 0.0) {
        return Err(Error::param(
            "clearing_radius",
            format!("must be non-negative, got {clearing_radius}"),
        ));
    }
    let need = clearing_radius + field.trap_radius();
    for (_, x) in path {
        field.check_domain(x)?;
    }
    Ok(path
        .iter()
        .any(|(_, x)| field.index().nearest_distance(x).map_or(true, |d| d >= need)))
}

/// `ceil(ell^n)` cube centres on the lattice `(2 ell Z)^dim`, filled in
/// shells of increasing Chebyshev radius around the origin and in
/// lexicographic order within a shell. The cubes `x_j + (-ell, ell)^dim`
/// are pairwise disjoint.
pub fn lattice_cube_centers(dim: usize, ell: f64, n: u32) -> Result<Vec<Point>> {
    check_dim(dim)?;
    if !(ell >= 1.0) || !ell.is_finite() {
        return Err(Error::param("ell", format!("must be at least 1, got {ell}")));
    }
    if n < 2 {
        return Err(Error::param("n", "must be at least 2"));
    }
    let count = ell.powi(n as i32).ceil();
    if count > 1e6 {
        return Err(Error::param("ell", "too many cube centres requested"));
    }
    let count = count as usize;
    let mut centers = Vec::with_capacity(count);
    let mut shell: i64 = 0;
    while centers.len() < count {
        let side = (2 * shell + 1) as usize;
        let total = side.pow(dim as u32);
        for code in 0..total {
            let mut rem = code;
            let mut lattice = [0i64; crate::geometry::MAX_DIM];
            for slot in lattice.iter_mut().take(dim) {
                *slot = (rem % side) as i64 - shell;
                rem /= side;
            }
            if lattice[..dim].iter().any(|c| c.abs() == shell) {
                let coords: Vec<f64> = lattice[..dim].iter().map(|&c| 2.0 * ell * c as f64).collect();
                centers.push(Point::from_slice(&coords)?);
                if centers.len() == count {
                    break;
                }
            }
        }
        shell += 1;
    }
    Ok(centers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::RngStream;
    use crate::theory::lambda_d;

    fn p(xs: &[f64]) -> Point {
        Point::from_slice(xs).unwrap()
    }

    #[test]
    fn empty_field_inscribed_ball_is_the_cube_ball() {
        for dim in 1..=3 {
            let ell = 3.0;
            let domain = AxisBox::centered_cube(dim, ell).unwrap();
            let f = TrapField::from_atoms(dim, 0.0, 0.5, domain.clone(), vec![], 0).unwrap();
            let rep = largest_clearing(&f, &domain, 0.25, ClearingMode::Inscribed).unwrap();
            assert!((rep.radius - ell).abs() < 1e-12);
            assert!(rep.center.norm() < 1e-12);
            let free = largest_clearing(&f, &domain, 0.25, ClearingMode::Unconstrained).unwrap();
            assert!(free.radius.is_infinite());
        }
    }

    #[test]
    fn single_atom_clearing_is_at_a_corner() {
        let domain = AxisBox::centered_cube(2, 4.0).unwrap();
        let f = TrapField::from_atoms(2, 1.0, 1.0, domain.clone(), vec![Point::origin(2)], 0).unwrap();
        let rep = largest_clearing(&f, &domain, 0.1, ClearingMode::Unconstrained).unwrap();
        let exact = 4.0 * 2f64.sqrt() - 1.0;
        assert!((rep.radius - exact).abs() < 1e-12, "{}", rep.radius);
        assert!((rep.center[0].abs() - 4.0).abs() < 1e-12 && (rep.center[1].abs() - 4.0).abs() < 1e-12);
        let ins = largest_clearing(&f, &domain, 0.1, ClearingMode::Inscribed).unwrap();
        // Best inscribed ball touches the trap and two faces: r = (4 - r)√2 - 1.
        let exact_ins = (4.0 * 2f64.sqrt() - 1.0) / (1.0 + 2f64.sqrt());
        assert!(ins.radius <= exact_ins + 1e-12);
        assert!(ins.radius > exact_ins - 0.1 * 2f64.sqrt());
    }

    #[test]
    fn argument_checks() {
        let domain = AxisBox::centered_cube(1, 4.0).unwrap();
        let f = TrapField::from_atoms(1, 1.0, 0.5, domain.clone(), vec![], 0).unwrap();
        assert!(largest_clearing(&f, &domain, 0.3, ClearingMode::Inscribed).is_err());
        assert!(largest_clearing(&f, &domain, 0.0, ClearingMode::Inscribed).is_err());
        let empty = AxisBox::new(vec![1.0], vec![1.0]).unwrap();
        assert!(largest_clearing(&f, &empty, 0.1, ClearingMode::Inscribed).is_err());
        let outside = AxisBox::centered_cube(1, 5.0).unwrap();
        assert!(largest_clearing(&f, &outside, 0.1, ClearingMode::Inscribed).is_err());
    }

    #[test]
    fn grid_search_matches_brute_force() {
        let mut env = RngStream::new(7, 1);
        let domain = AxisBox::centered_cube(2, 3.0).unwrap();
        let f = TrapField::build(&mut env, 2, 0.8, 0.4, domain.clone()).unwrap();
        let rep = largest_clearing(&f, &domain, 0.2, ClearingMode::Unconstrained).unwrap();
        let mut best = f64::NEG_INFINITY;
        for i in 0..=30 {
            for j in 0..=30 {
                let x = p(&[-3.0 + 0.2 * i as f64, -3.0 + 0.2 * j as f64]);
                let d = f.atoms().iter().map(|a| a.dist(&x)).fold(f64::INFINITY, f64::min);
                best = best.max((d - 0.4).max(0.0));
            }
        }
        assert!((rep.radius - best).abs() < 1e-9);
    }

    #[test]
    fn superposed_atoms_never_enlarge_clearing() {
        let domain = AxisBox::centered_cube(2, 4.0).unwrap();
        for seed in 0..10 {
            let mut env = RngStream::new(seed, 9);
            let base = TrapField::build(&mut env, 2, 0.3, 0.5, domain.clone()).unwrap();
            let extra = TrapField::build(&mut env, 2, 0.3, 0.5, domain.clone()).unwrap();
            let both = base.with_extra_atoms(extra.atoms()).unwrap();
            for mode in [ClearingMode::Inscribed, ClearingMode::Unconstrained] {
                let r1 = largest_clearing(&base, &domain, 0.25, mode).unwrap().radius;
                let r2 = largest_clearing(&both, &domain, 0.25, mode).unwrap().radius;
                assert!(r2 <= r1);
            }
        }
    }

    #[test]
    fn clearing_scale_examples() {
        let s = clearing_scale(1, 1.0, 3.0).unwrap();
        assert!((s.r0 - 0.5).abs() < 1e-15);
        let s = clearing_scale(1, 1.0, 20f64.exp()).unwrap();
        assert!((s.r_ell - (10.0 - 20f64.ln().powi(2))).abs() < 1e-9);
        assert!((s.r_ell - 1.026).abs() < 1e-3);
        assert!(!s.clamped);
        let s = clearing_scale(2, 1.0, 4f64.exp()).unwrap();
        assert_eq!(s.r_ell, 0.0);
        assert!(s.clamped);
        assert!(clearing_scale(2, 0.0, 10.0).is_err());
        assert!(clearing_scale(2, 1.0, 2.0).is_err());
    }

    #[test]
    fn clearing_scale_identities() {
        for dim in 1..=4 {
            for nu in [0.1, 1.0, 3.7] {
                let s = clearing_scale(dim, nu, 100.0).unwrap();
                let lhs = s.r0.powi(dim as i32) * nu * omega_d(dim);
                assert!((lhs - dim as f64).abs() < 1e-12 * dim as f64);
                let c = crate::theory::TheoryConstants::new(dim, nu).unwrap();
                assert!((c.c_d_nu - lambda_d(dim).unwrap() / (s.r0 * s.r0)).abs() < 1e-12 * c.c_d_nu);
            }
        }
    }

    #[test]
    fn good_point_hit_examples() {
        let domain = AxisBox::centered_cube(2, 10.0).unwrap();
        let empty = TrapField::from_atoms(2, 0.0, 0.5, domain.clone(), vec![], 0).unwrap();
        assert!(good_point_hit(&empty, &[(0.0, p(&[1.0, 1.0]))], 5.0).unwrap());
        assert!(!good_point_hit(&empty, &[], 5.0).unwrap());

        let rho = 2.0;
        let a = 0.5;
        let atoms = vec![p(&[rho + a, 0.0]), p(&[-(rho + a), 0.0])];
        let f = TrapField::from_atoms(2, 1.0, a, domain, atoms, 0).unwrap();
        let path = [(0.0, Point::origin(2))];
        assert!(good_point_hit(&f, &path, rho).unwrap());
        assert!(!good_point_hit(&f, &path, rho + 1e-9).unwrap());
        assert!(good_point_hit(&f, &[(0.0, p(&[11.0, 0.0]))], 0.1).is_err());
    }

    #[test]
    fn lattice_centres_are_disjoint_and_counted() {
        let c = lattice_cube_centers(2, 2.5, 2).unwrap();
        assert_eq!(c.len(), 7);
        assert_eq!(c[0], Point::origin(2));
        for i in 0..c.len() {
            for j in 0..i {
                let sep = c[i].iter().zip(c[j].iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(sep >= 5.0 - 1e-12);
            }
        }
        assert!(lattice_cube_centers(1, 3.0, 1).is_err());
    }
}

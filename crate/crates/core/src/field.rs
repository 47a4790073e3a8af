//! Divergence-to-center grids, for plotting how asymmetric a divergence is.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::ConvexGenerator;
use crate::point::Point;

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Axis-aligned box, `resolution` cells per axis.
    Box { lowers: Vec<f64>, uppers: Vec<f64> },
    /// Two-dimensional disk sampled on a `resolution × resolution` grid over
    /// its bounding square; cells outside the disk are skipped.
    Disk { center: [f64; 2], radius: f64 },
    /// Straight segment, `resolution` evenly spaced cells.
    Segment { start: Vec<f64>, end: Vec<f64> },
}

/// One grid cell. Values are `None` where the cell lies outside the domain
/// or the divergence is undefined there.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRow {
    pub coords: Vec<f64>,
    /// `D(center‖p)`.
    pub div_from_center: Option<f64>,
    /// `D(p‖center)`.
    pub div_to_center: Option<f64>,
}

fn cell(lo: f64, hi: f64, k: usize, resolution: usize) -> f64 {
    lo + (k as f64 + 0.5) / resolution as f64 * (hi - lo)
}

/// Evaluates `D(center‖p)` and `D(p‖center)` over cell centers of `region`.
/// With `resolution = 1` the single row sits at the region's center.
pub fn divergence_field(
    g: &ConvexGenerator,
    center: &Point,
    region: &Region,
    resolution: usize,
) -> Result<Vec<FieldRow>> {
    if resolution == 0 {
        return Err(Error::InvalidConfig("resolution must be positive".into()));
    }
    g.domain()
        .check(center.coords())
        .map_err(|_| Error::RegionOutsideDomain)?;
    let dim = g.dim();
    let coords: Vec<Vec<f64>> = match region {
        Region::Box { lowers, uppers } => {
            if lowers.len() != dim || uppers.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: lowers.len(),
                });
            }
            let total = resolution
                .checked_pow(dim as u32)
                .ok_or_else(|| Error::InvalidConfig("grid too large".into()))?;
            (0..total)
                .map(|mut idx| {
                    let mut c = alloc::vec![0.0; dim];
                    for j in (0..dim).rev() {
                        c[j] = cell(lowers[j], uppers[j], idx % resolution, resolution);
                        idx /= resolution;
                    }
                    c
                })
                .collect()
        }
        Region::Disk {
            center: [cx, cy],
            radius,
        } => {
            if dim != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: dim,
                });
            }
            let mut out = Vec::new();
            for i in 0..resolution {
                for j in 0..resolution {
                    let x = cell(cx - radius, cx + radius, i, resolution);
                    let y = cell(cy - radius, cy + radius, j, resolution);
                    if (x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius {
                        out.push(alloc::vec![x, y]);
                    }
                }
            }
            out
        }
        Region::Segment { start, end } => {
            if start.len() != dim || end.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: start.len(),
                });
            }
            (0..resolution)
                .map(|k| {
                    let t = cell(0.0, 1.0, k, resolution);
                    start
                        .iter()
                        .zip(end)
                        .map(|(a, b)| a + t * (b - a))
                        .collect()
                })
                .collect()
        }
    };
    let rows: Vec<FieldRow> = coords
        .into_iter()
        .map(|c| {
            let p = Point::new(c);
            let inside = g.domain().contains(p.coords());
            FieldRow {
                div_from_center: inside.then(|| g.divergence(center, &p).ok()).flatten(),
                div_to_center: inside.then(|| g.divergence(&p, center).ok()).flatten(),
                coords: p.into_vec(),
            }
        })
        .collect();
    if rows.iter().all(|r| r.div_from_center.is_none()) {
        return Err(Error::RegionOutsideDomain);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{log_barrier_generator, make_generator, GeneratorSpec};
    use alloc::vec;

    #[test]
    fn euclidean_field_is_symmetric() {
        let g = make_generator(GeneratorSpec::SquaredEuclidean { dim: 2 }).unwrap();
        let region = Region::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        let rows = divergence_field(&g, &Point::from([0.0, 0.0]), &region, 21).unwrap();
        assert!(rows.len() > 300);
        for r in &rows {
            assert_eq!(r.div_from_center, r.div_to_center);
        }
    }

    #[test]
    fn entropy_field_is_asymmetric() {
        let g = make_generator(GeneratorSpec::NegativeEntropySimplex { dim: 2 }).unwrap();
        let region = Region::Segment {
            start: vec![0.0, 1.0],
            end: vec![1.0, 0.0],
        };
        let rows = divergence_field(&g, &Point::from([0.5, 0.5]), &region, 10).unwrap();
        assert_eq!(rows.len(), 10);
        let far = &rows[0];
        assert!(far.div_from_center.unwrap() > far.div_to_center.unwrap());
    }

    #[test]
    fn custom_field_marks_outside_cells() {
        let g = log_barrier_generator(&[2, 4]).unwrap();
        let region = Region::Box {
            lowers: vec![-1.5, -1.5],
            uppers: vec![1.5, 1.5],
        };
        let rows = divergence_field(&g, &Point::from([0.0, 0.0]), &region, 6).unwrap();
        assert_eq!(rows.len(), 36);
        assert!(rows[0].div_from_center.is_none());
        assert!(rows.iter().any(|r| r.div_from_center.is_some()));
    }

    #[test]
    fn resolution_one_is_region_center() {
        let g = make_generator(GeneratorSpec::SquaredEuclidean { dim: 2 }).unwrap();
        let region = Region::Box {
            lowers: vec![-1.0, 0.0],
            uppers: vec![3.0, 2.0],
        };
        let rows = divergence_field(&g, &Point::from([0.0, 0.0]), &region, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].coords, vec![1.0, 1.0]);
    }

    #[test]
    fn region_outside_domain() {
        let g = log_barrier_generator(&[2, 4]).unwrap();
        let region = Region::Box {
            lowers: vec![2.0, 2.0],
            uppers: vec![3.0, 3.0],
        };
        assert_eq!(
            divergence_field(&g, &Point::from([0.0, 0.0]), &region, 3).unwrap_err(),
            Error::RegionOutsideDomain
        );
        assert_eq!(
            divergence_field(&g, &Point::from([2.0, 0.0]), &region, 3).unwrap_err(),
            Error::RegionOutsideDomain
        );
    }
}

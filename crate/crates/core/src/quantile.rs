//! Empirical quantile boundaries of big-pixel uncertainty and the allocation of
//! big pixels to quantile intervals.

use crate::error::{Error, Result};
use crate::ladder::BigPixelPartition;

pub const DEGENERATE_WARNING: &str = "all big pixels share the same average uncertainty; \
     every big pixel is fully resolved and spatial variation in uncertainty will be invisible";

/// Boundaries `q_1 <= ... <= q_{K-1}` at probabilities `k / K`, by linear
/// interpolation between order statistics (`h = (M - 1) p + 1`).
pub fn empirical_quantiles(values: &[f64], num_sizes: usize) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyValues);
    }
    if num_sizes == 0 {
        return Err(Error::InvalidParameter(
            "num_sizes must be at least 1".into(),
        ));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "quantile sample contains non-finite value {bad}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    Ok((1..num_sizes)
        .map(|k| {
            // Zero-based position h - 1 = (M - 1) k / K, divided last so that
            // integral positions are exact.
            let pos = ((m - 1) * k) as f64 / num_sizes as f64;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = lo as usize;
            if frac == 0.0 || lo + 1 >= m {
                sorted[lo]
            } else {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            }
        })
        .collect())
}

/// Quantile interval (1-based) of each big pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMap {
    pub num_sizes: usize,
    pub boundaries: Vec<f64>,
    /// Interval per big pixel in partition order; `None` for big pixels without observed cells.
    pub intervals: Vec<Option<usize>>,
    /// Set when every allocated big pixel has the same average uncertainty.
    pub degenerate: bool,
}

impl AllocationMap {
    pub fn allocated(&self) -> usize {
        self.intervals.iter().flatten().count()
    }

    /// Number of big pixels assigned to each interval `1..=K`.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_sizes];
        for k in self.intervals.iter().flatten() {
            counts[k - 1] += 1;
        }
        counts
    }
}

/// `min { k : u <= q_k }` with `q_K = +inf`.
pub fn interval_of(u: f64, boundaries: &[f64]) -> usize {
    boundaries
        .iter()
        .position(|&q| u <= q)
        .map_or(boundaries.len() + 1, |i| i + 1)
}

/// Assigns each big pixel with observed cells to the quantile interval of its average uncertainty.
pub fn allocate_intervals(
    partition: &BigPixelPartition,
    boundaries: &[f64],
) -> Result<AllocationMap> {
    let expected = partition.num_sizes - 1;
    if boundaries.len() != expected {
        return Err(Error::BoundaryMismatch {
            expected,
            got: boundaries.len(),
        });
    }
    let intervals = partition
        .pixels
        .iter()
        .map(|p| p.avg_uncertainty.map(|u| interval_of(u, boundaries)))
        .collect();
    let (min, max) = partition
        .pixels
        .iter()
        .filter_map(|p| p.avg_uncertainty)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| {
            (lo.min(u), hi.max(u))
        });
    let degenerate = min == max;
    if degenerate {
        log::warn!("{DEGENERATE_WARNING}");
    }
    Ok(AllocationMap {
        num_sizes: partition.num_sizes,
        boundaries: boundaries.to_vec(),
        intervals,
        degenerate,
    })
}

/// Computes boundaries from the partition's own averages and allocates.
///
/// A partition without any observed cell yields an allocation with no
/// boundaries and no allocated big pixels.
pub fn allocate(partition: &BigPixelPartition) -> Result<AllocationMap> {
    let values = partition.included_uncertainties();
    if values.is_empty() {
        return Ok(AllocationMap {
            num_sizes: partition.num_sizes,
            boundaries: Vec::new(),
            intervals: vec![None; partition.pixels.len()],
            degenerate: false,
        });
    }
    let boundaries = empirical_quantiles(&values, partition.num_sizes)?;
    allocate_intervals(partition, &boundaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LatticeSpec;
    use crate::ladder::{build_ladder, partition_grid, ScaleMode};
    use proptest::prelude::*;

    fn partition_with(us: &[Option<f64>], num_sizes: usize) -> BigPixelPartition {
        let ladder = build_ladder(num_sizes, ScaleMode::Imult, 1).unwrap();
        let side = ladder.top() as usize;
        let spec = LatticeSpec::unit(side * us.len(), side).unwrap();
        let mut p = partition_grid(&spec, &ladder, (1, 1)).unwrap();
        for (pixel, u) in p.pixels.iter_mut().zip(us) {
            pixel.avg_uncertainty = *u;
            pixel.included_count = usize::from(u.is_some());
        }
        p
    }

    #[test]
    fn quantile_examples() {
        let v: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(empirical_quantiles(&v, 2).unwrap(), vec![4.5]);
        assert_eq!(
            empirical_quantiles(&[5.0, 5.0, 5.0], 4).unwrap(),
            vec![5.0, 5.0, 5.0]
        );
        assert_eq!(
            empirical_quantiles(&[10.0, 0.0], 4).unwrap(),
            vec![2.5, 5.0, 7.5]
        );
        assert!(empirical_quantiles(&[1.0, 2.0], 1).unwrap().is_empty());
        assert!(matches!(
            empirical_quantiles(&[], 3),
            Err(Error::EmptyValues)
        ));
        assert_eq!(empirical_quantiles(&[3.0], 3).unwrap(), vec![3.0, 3.0]);
    }

    #[test]
    fn allocation_examples() {
        let p = partition_with(&[Some(0.1), Some(0.1), Some(0.9), Some(0.9)], 2);
        let q = empirical_quantiles(&p.included_uncertainties(), 2).unwrap();
        assert_eq!(q, vec![0.5]);
        let a = allocate_intervals(&p, &q).unwrap();
        assert_eq!(a.intervals, vec![Some(1), Some(1), Some(2), Some(2)]);
        assert!(!a.degenerate);
        assert_eq!(a.counts(), vec![2, 2]);
    }

    #[test]
    fn ties_resolve_downward() {
        assert_eq!(interval_of(0.5, &[0.5]), 1);
        assert_eq!(interval_of(0.5000001, &[0.5]), 2);
        assert_eq!(interval_of(2.0, &[1.0, 2.0, 2.0]), 2);
        assert_eq!(interval_of(9.0, &[]), 1);
    }

    #[test]
    fn constant_uncertainty_is_degenerate() {
        let p = partition_with(&[Some(0.4), None, Some(0.4), Some(0.4)], 3);
        let a = allocate(&p).unwrap();
        assert!(a.degenerate);
        assert_eq!(a.intervals, vec![Some(1), None, Some(1), Some(1)]);
    }

    #[test]
    fn boundary_count_must_match() {
        let p = partition_with(&[Some(0.1), Some(0.2)], 3);
        assert!(matches!(
            allocate_intervals(&p, &[0.1]),
            Err(Error::BoundaryMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn unallocated_partition() {
        let p = partition_with(&[None, None], 2);
        let a = allocate(&p).unwrap();
        assert_eq!(a.intervals, vec![None, None]);
        assert_eq!(a.allocated(), 0);
    }

    proptest! {
        #[test]
        fn allocation_is_monotone(us in proptest::collection::vec(0.0f64..10.0, 1..60), k in 1usize..=5) {
            let p = partition_with(&us.iter().map(|&u| Some(u)).collect::<Vec<_>>(), k);
            let a = allocate(&p).unwrap();
            for (x, ix) in us.iter().zip(&a.intervals) {
                for (y, iy) in us.iter().zip(&a.intervals) {
                    if x <= y {
                        prop_assert!(ix.unwrap() <= iy.unwrap());
                    }
                }
            }
        }

        #[test]
        fn boundaries_are_sorted(us in proptest::collection::vec(-5.0f64..5.0, 1..40), k in 1usize..=8) {
            let q = empirical_quantiles(&us, k).unwrap();
            prop_assert_eq!(q.len(), k - 1);
            prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn distinct_samples_cover_every_interval(
            us in proptest::collection::btree_set(0u32..100_000, 1..80),
            k in 1usize..=6,
        ) {
            let values: Vec<f64> = us.iter().map(|&u| f64::from(u) / 997.0).collect();
            prop_assume!(values.len() >= k);
            let q = empirical_quantiles(&values, k).unwrap();
            let mut hit = vec![false; k];
            for &v in &values {
                hit[interval_of(v, &q) - 1] = true;
            }
            prop_assert!(hit.iter().all(|&h| h));
        }
    }
}

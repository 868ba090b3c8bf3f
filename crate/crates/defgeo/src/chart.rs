//! Coordinate charts and validated points.
//!
//! A [`Chart`] is a single coordinate patch: named coordinates ranging over a
//! closed rectangular box, minus a finite union of open sub-boxes where the
//! geometry is singular (e.g. the poles of spherical coordinates). There is no
//! atlas machinery; every construction in this crate lives on one chart.

use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChartError {
    #[error("chart needs at least one coordinate")]
    Empty,
    #[error("coordinate count {names} does not match box dimension {bounds}")]
    DimensionMismatch { names: usize, bounds: usize },
    #[error("degenerate interval [{lo}, {hi}] for coordinate `{name}`")]
    DegenerateInterval { name: String, lo: f64, hi: f64 },
    #[error("excluded sub-box has dimension {got}, chart has {expected}")]
    BadExclusion { got: usize, expected: usize },
    #[error("point {coords:?} outside the validity box of chart {chart}")]
    OutsideBox { chart: String, coords: Vec<f64> },
    #[error("point {coords:?} lies in an excluded region of chart {chart}")]
    Excluded { chart: String, coords: Vec<f64> },
    #[error("point {coords:?} has a non-finite coordinate")]
    NonFinite { coords: Vec<f64> },
    #[error("point has {got} coordinates, chart {chart} has {expected}")]
    WrongArity {
        chart: String,
        got: usize,
        expected: usize,
    },
}

#[derive(Debug, PartialEq)]
struct ChartData {
    coordinates: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Open sub-boxes removed from the domain (lower corners, upper corners).
    excluded: Vec<(Vec<f64>, Vec<f64>)>,
}

/// A named coordinate box. Cheap to clone (shared internally).
#[derive(Debug, Clone)]
pub struct Chart(Arc<ChartData>);

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.coordinates.join(", "))
    }
}

impl Chart {
    /// A chart with the given coordinate names over per-coordinate closed
    /// intervals. Intervals must be nondegenerate (`lo < hi`).
    pub fn new(coordinates: &[&str], bounds: &[(f64, f64)]) -> Result<Chart, ChartError> {
        if coordinates.is_empty() {
            return Err(ChartError::Empty);
        }
        if coordinates.len() != bounds.len() {
            return Err(ChartError::DimensionMismatch {
                names: coordinates.len(),
                bounds: bounds.len(),
            });
        }
        for (name, &(lo, hi)) in coordinates.iter().zip(bounds) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ChartError::DegenerateInterval {
                    name: name.to_string(),
                    lo,
                    hi,
                });
            }
        }
        Ok(Chart(Arc::new(ChartData {
            coordinates: coordinates.iter().map(|s| s.to_string()).collect(),
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
            excluded: Vec::new(),
        })))
    }

    /// Removes the open box `(lo, hi)` from the domain. Points on the
    /// boundary of the excluded box remain valid.
    pub fn exclude(self, lo: &[f64], hi: &[f64]) -> Result<Chart, ChartError> {
        let n = self.dimension();
        if lo.len() != n || hi.len() != n {
            return Err(ChartError::BadExclusion {
                got: lo.len().max(hi.len()),
                expected: n,
            });
        }
        let mut data = ChartData {
            coordinates: self.0.coordinates.clone(),
            lower: self.0.lower.clone(),
            upper: self.0.upper.clone(),
            excluded: self.0.excluded.clone(),
        };
        data.excluded.push((lo.to_vec(), hi.to_vec()));
        Ok(Chart(Arc::new(data)))
    }

    pub fn dimension(&self) -> usize {
        self.0.coordinates.len()
    }

    pub fn coordinate_names(&self) -> Vec<&str> {
        self.0.coordinates.iter().map(|s| s.as_str()).collect()
    }

    pub fn coordinate_name(&self, index: usize) -> &str {
        &self.0.coordinates[index]
    }

    pub fn lower(&self) -> &[f64] {
        &self.0.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.0.upper
    }

    /// True when `coords` lies in the closed box and outside every excluded
    /// open sub-box.
    pub fn contains(&self, coords: &[f64]) -> bool {
        if coords.len() != self.dimension() {
            return false;
        }
        let inside_box = coords
            .iter()
            .zip(self.0.lower.iter().zip(&self.0.upper))
            .all(|(c, (lo, hi))| c.is_finite() && *lo <= *c && *c <= *hi);
        if !inside_box {
            return false;
        }
        !self.is_excluded(coords)
    }

    fn is_excluded(&self, coords: &[f64]) -> bool {
        self.0.excluded.iter().any(|(lo, hi)| {
            coords
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(c, (l, h))| *l < *c && *c < *h)
        })
    }

    /// Validated point constructor.
    pub fn point(&self, coords: &[f64]) -> Result<ChartPoint, ChartError> {
        if coords.len() != self.dimension() {
            return Err(ChartError::WrongArity {
                chart: self.to_string(),
                got: coords.len(),
                expected: self.dimension(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(ChartError::NonFinite {
                coords: coords.to_vec(),
            });
        }
        let in_box = coords
            .iter()
            .zip(self.0.lower.iter().zip(&self.0.upper))
            .all(|(c, (lo, hi))| *lo <= *c && *c <= *hi);
        if !in_box {
            return Err(ChartError::OutsideBox {
                chart: self.to_string(),
                coords: coords.to_vec(),
            });
        }
        if self.is_excluded(coords) {
            return Err(ChartError::Excluded {
                chart: self.to_string(),
                coords: coords.to_vec(),
            });
        }
        Ok(ChartPoint {
            chart: self.clone(),
            coords: coords.to_vec(),
        })
    }

    /// Evenly spaced grid of `resolution` points per axis, inset from the box
    /// edges by 1% of each interval so finite-difference stencils stay inside.
    /// Points falling in excluded regions are dropped. Order is row-major over
    /// axes (last coordinate fastest), deterministic.
    pub fn grid(&self, resolution: usize) -> Vec<ChartPoint> {
        let n = self.dimension();
        let res = resolution.max(1);
        let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let width = self.0.upper[i] - self.0.lower[i];
            let lo = self.0.lower[i] + 0.01 * width;
            let hi = self.0.upper[i] - 0.01 * width;
            let axis = if res == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..res)
                    .map(|k| lo + (hi - lo) * (k as f64) / ((res - 1) as f64))
                    .collect()
            };
            axes.push(axis);
        }
        let total = res.pow(n as u32);
        let mut points = Vec::with_capacity(total);
        let mut index = vec![0usize; n];
        for _ in 0..total {
            let coords: Vec<f64> = (0..n).map(|i| axes[i][index[i]]).collect();
            if let Ok(p) = self.point(&coords) {
                points.push(p);
            }
            for i in (0..n).rev() {
                index[i] += 1;
                if index[i] < res {
                    break;
                }
                index[i] = 0;
            }
        }
        points
    }
}

/// A validated point on a chart: finite coordinates inside the validity box
/// and outside all excluded regions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    chart: Chart,
    coords: Vec<f64>,
}

impl ChartPoint {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coords
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        self.coords[index]
    }
}

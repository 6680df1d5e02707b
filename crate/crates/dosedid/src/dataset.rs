//! Dataset containers for the two sampling designs, CSV ingestion with a
//! named-column schema, and dose-grid construction.
//!
//! Both containers validate their invariants on construction: matching row
//! counts, finite values, nonnegative doses, and the presence of both control
//! (dose = 0) and treated (dose > 0) rows. A dose counts as control only when
//! the stored value is exactly zero; the scores use a sharp `1{D=0}`
//! indicator, so no epsilon snapping is applied.

use crate::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

/// Which sampling design a dataset (or an estimate) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    /// Balanced two-period panel: each unit observed before and after.
    Panel,
    /// Repeated cross-sections: each unit observed in one period.
    Rcs,
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Design::Panel => write!(f, "panel"),
            Design::Rcs => write!(f, "rcs"),
        }
    }
}

/// A balanced two-period panel: outcomes in both periods, a continuous dose
/// (zero = control), and a covariate matrix.
#[derive(Debug, Clone)]
pub struct PanelDataset {
    y_pre: Vec<f64>,
    y_post: Vec<f64>,
    dose: Vec<f64>,
    covariates: Array2<f64>,
}

/// Pooled repeated cross-sections: one outcome per unit, a period indicator
/// (1 = post), a continuous dose, and a covariate matrix.
#[derive(Debug, Clone)]
pub struct RcsDataset {
    y: Vec<f64>,
    period: Vec<u8>,
    dose: Vec<f64>,
    covariates: Array2<f64>,
}

fn check_rows(len: usize, n: usize, what: &str) -> Result<()> {
    if len != n {
        return Err(Error::Data(format!(
            "{what} has {len} rows but the dataset has {n}"
        )));
    }
    Ok(())
}

fn check_finite(values: &[f64], column: &str) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                column: column.to_string(),
                row: i + 1,
            });
        }
    }
    Ok(())
}

fn check_doses(dose: &[f64]) -> Result<()> {
    for (i, &d) in dose.iter().enumerate() {
        if d < 0.0 {
            return Err(Error::NegativeDose { row: i + 1, value: d });
        }
    }
    if !dose.contains(&0.0) {
        return Err(Error::NoControls);
    }
    if !dose.iter().any(|&d| d > 0.0) {
        return Err(Error::NoTreated);
    }
    Ok(())
}

fn check_covariates(covariates: &Array2<f64>, n: usize) -> Result<()> {
    check_rows(covariates.nrows(), n, "covariate matrix")?;
    if covariates.ncols() == 0 {
        return Err(Error::Data("covariate matrix has no columns".into()));
    }
    for ((i, j), v) in covariates.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                column: format!("covariate {}", j + 1),
                row: i + 1,
            });
        }
    }
    Ok(())
}

impl PanelDataset {
    /// Validate and assemble a panel dataset.
    pub fn new(
        y_pre: Vec<f64>,
        y_post: Vec<f64>,
        dose: Vec<f64>,
        covariates: Array2<f64>,
    ) -> Result<Self> {
        let n = y_pre.len();
        if n < 2 {
            return Err(Error::Data(format!("dataset needs at least 2 rows, got {n}")));
        }
        check_rows(y_post.len(), n, "y_post")?;
        check_rows(dose.len(), n, "dose")?;
        check_finite(&y_pre, "y_pre")?;
        check_finite(&y_post, "y_post")?;
        check_finite(&dose, "dose")?;
        check_doses(&dose)?;
        check_covariates(&covariates, n)?;
        Ok(Self {
            y_pre,
            y_post,
            dose,
            covariates,
        })
    }

    pub fn n(&self) -> usize {
        self.y_pre.len()
    }

    /// Number of covariate columns.
    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn y_pre(&self) -> &[f64] {
        &self.y_pre
    }

    pub fn y_post(&self) -> &[f64] {
        &self.y_post
    }

    pub fn dose(&self) -> &[f64] {
        &self.dose
    }

    pub fn covariates(&self) -> &Array2<f64> {
        &self.covariates
    }

    /// Covariate row `i` as a contiguous slice.
    pub fn x_row(&self, i: usize) -> &[f64] {
        self.covariates
            .row(i)
            .to_slice()
            .expect("covariate rows are contiguous")
    }

    /// Outcome change `y_post - y_pre`, the quantity the panel scores use.
    pub fn delta_y(&self) -> Vec<f64> {
        self.y_pre
            .iter()
            .zip(&self.y_post)
            .map(|(pre, post)| post - pre)
            .collect()
    }

    pub fn is_control(&self, i: usize) -> bool {
        self.dose[i] == 0.0
    }

    /// The doses of treated rows, in row order.
    pub fn positive_doses(&self) -> Vec<f64> {
        self.dose.iter().copied().filter(|&d| d > 0.0).collect()
    }
}

impl RcsDataset {
    /// Validate and assemble a repeated cross-sections dataset.
    /// `period` entries must be exactly 0 or 1 and both must occur.
    pub fn new(
        y: Vec<f64>,
        period: Vec<u8>,
        dose: Vec<f64>,
        covariates: Array2<f64>,
    ) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::Data(format!("dataset needs at least 2 rows, got {n}")));
        }
        check_rows(period.len(), n, "period")?;
        check_rows(dose.len(), n, "dose")?;
        check_finite(&y, "y")?;
        check_finite(&dose, "dose")?;
        for (i, &t) in period.iter().enumerate() {
            if t > 1 {
                return Err(Error::BadPeriod {
                    row: i + 1,
                    value: t as f64,
                });
            }
        }
        if period.iter().all(|&t| t == 1) {
            return Err(Error::SinglePeriod(1));
        }
        if period.iter().all(|&t| t == 0) {
            return Err(Error::SinglePeriod(0));
        }
        check_doses(&dose)?;
        check_covariates(&covariates, n)?;
        Ok(Self {
            y,
            period,
            dose,
            covariates,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn period(&self) -> &[u8] {
        &self.period
    }

    pub fn dose(&self) -> &[f64] {
        &self.dose
    }

    pub fn covariates(&self) -> &Array2<f64> {
        &self.covariates
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        self.covariates
            .row(i)
            .to_slice()
            .expect("covariate rows are contiguous")
    }

    pub fn is_control(&self, i: usize) -> bool {
        self.dose[i] == 0.0
    }

    pub fn positive_doses(&self) -> Vec<f64> {
        self.dose.iter().copied().filter(|&d| d > 0.0).collect()
    }
}

/// Anything with a dose column; lets grid construction work on both designs.
pub trait HasDoses {
    fn doses(&self) -> &[f64];
}

impl HasDoses for PanelDataset {
    fn doses(&self) -> &[f64] {
        &self.dose
    }
}

impl HasDoses for RcsDataset {
    fn doses(&self) -> &[f64] {
        &self.dose
    }
}

/// A strictly increasing grid of positive evaluation doses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseGrid {
    points: Vec<f64>,
}

impl DoseGrid {
    /// Validate an explicit list of grid points: finite, strictly positive,
    /// strictly increasing.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("dose grid must not be empty".into()));
        }
        for &p in &points {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::Config(format!(
                    "dose grid points must be positive finite numbers, got {p}"
                )));
            }
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "dose grid points must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Empirical quantile with linear interpolation between order statistics
/// (the convention used by R's default type 7 and NumPy's `linear`).
/// `sorted` must be ascending and nonempty; `q` in [0, 1].
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Build an `n_points` equally spaced dose grid between the `trim` and
/// `1 - trim` empirical quantiles of the positive doses.
///
/// Trimming keeps the grid away from the sparse edges of the dose support,
/// where kernel-effective sample sizes collapse and estimates get noisy.
pub fn make_dose_grid<T: HasDoses>(data: &T, n_points: usize, trim: f64) -> Result<DoseGrid> {
    if n_points == 0 {
        return Err(Error::Config("grid needs at least 1 point".into()));
    }
    if !(0.0..0.5).contains(&trim) {
        return Err(Error::Config(format!(
            "trim must lie in [0, 0.5), got {trim}"
        )));
    }
    let mut positive: Vec<f64> = data.doses().iter().copied().filter(|&d| d > 0.0).collect();
    let distinct = positive
        .iter()
        .map(|d| d.to_bits())
        .collect::<BTreeSet<_>>()
        .len();
    if distinct < 2 {
        return Err(Error::Data(format!(
            "dose grid needs at least 2 distinct positive doses, found {distinct}"
        )));
    }
    positive.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = quantile_sorted(&positive, trim);
    let hi = quantile_sorted(&positive, 1.0 - trim);
    if !(lo < hi) {
        return Err(Error::Data(format!(
            "trim {trim} leaves a degenerate dose range [{lo}, {hi}]"
        )));
    }
    let points = if n_points == 1 {
        vec![lo]
    } else {
        (0..n_points)
            .map(|i| lo + (hi - lo) * i as f64 / (n_points - 1) as f64)
            .collect()
    };
    DoseGrid::new(points)
}

/// Column names for panel CSV files. `covariates: None` selects every column
/// not otherwise claimed, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSchema {
    pub y_pre: String,
    pub y_post: String,
    pub dose: String,
    pub covariates: Option<Vec<String>>,
}

impl Default for PanelSchema {
    fn default() -> Self {
        Self {
            y_pre: "y_pre".into(),
            y_post: "y_post".into(),
            dose: "dose".into(),
            covariates: None,
        }
    }
}

/// Column names for repeated cross-section CSV files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RcsSchema {
    pub y: String,
    pub period: String,
    pub dose: String,
    pub covariates: Option<Vec<String>>,
}

impl Default for RcsSchema {
    fn default() -> Self {
        Self {
            y: "y".into(),
            period: "period".into(),
            dose: "dose".into(),
            covariates: None,
        }
    }
}

/// A parsed CSV: header names plus all cells as finite numbers.
struct NumericCsv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl NumericCsv {
    fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Data(format!("cannot parse header of {}: {e}", path.display())))?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record =
                record.map_err(|e| Error::Data(format!("malformed CSV data row {row}: {e}")))?;
            if record.len() != header.len() {
                return Err(Error::Data(format!(
                    "data row {row} has {} fields, header has {}",
                    record.len(),
                    header.len()
                )));
            }
            let mut values = Vec::with_capacity(header.len());
            for (j, cell) in record.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| Error::BadCell {
                    column: header[j].clone(),
                    row,
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        column: header[j].clone(),
                        row,
                    });
                }
                values.push(v);
            }
            rows.push(values);
        }
        Ok(Self { header, rows })
    }

    fn column_index(&self, name: &str, path: &Path) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
                path: path.display().to_string(),
            })
    }

    fn column(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }

    /// Indices of the covariate columns: the named ones, or everything not in
    /// `claimed` when no explicit list is given.
    fn covariate_indices(
        &self,
        explicit: &Option<Vec<String>>,
        claimed: &[usize],
        path: &Path,
    ) -> Result<Vec<usize>> {
        let indices = match explicit {
            Some(names) => names
                .iter()
                .map(|n| self.column_index(n, path))
                .collect::<Result<Vec<_>>>()?,
            None => (0..self.header.len())
                .filter(|i| !claimed.contains(i))
                .collect(),
        };
        if indices.is_empty() {
            return Err(Error::Data(format!(
                "no covariate columns in {}",
                path.display()
            )));
        }
        Ok(indices)
    }

    fn matrix(&self, indices: &[usize]) -> Array2<f64> {
        let n = self.rows.len();
        let p = indices.len();
        Array2::from_shape_fn((n, p), |(i, j)| self.rows[i][indices[j]])
    }
}

/// Load a panel dataset from a headered CSV file using `schema` to pick
/// columns by name.
pub fn load_panel_csv(path: &Path, schema: &PanelSchema) -> Result<PanelDataset> {
    let csv = NumericCsv::read(path)?;
    let iy_pre = csv.column_index(&schema.y_pre, path)?;
    let iy_post = csv.column_index(&schema.y_post, path)?;
    let idose = csv.column_index(&schema.dose, path)?;
    let claimed = [iy_pre, iy_post, idose];
    let cov_idx = csv.covariate_indices(&schema.covariates, &claimed, path)?;
    PanelDataset::new(
        csv.column(iy_pre),
        csv.column(iy_post),
        csv.column(idose),
        csv.matrix(&cov_idx),
    )
}

/// Load a repeated cross-sections dataset from a headered CSV file.
/// The period column must contain exactly 0 or 1.
pub fn load_rcs_csv(path: &Path, schema: &RcsSchema) -> Result<RcsDataset> {
    let csv = NumericCsv::read(path)?;
    let iy = csv.column_index(&schema.y, path)?;
    let iperiod = csv.column_index(&schema.period, path)?;
    let idose = csv.column_index(&schema.dose, path)?;
    let claimed = [iy, iperiod, idose];
    let cov_idx = csv.covariate_indices(&schema.covariates, &claimed, path)?;
    let period = csv
        .column(iperiod)
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v == 0.0 {
                Ok(0u8)
            } else if v == 1.0 {
                Ok(1u8)
            } else {
                Err(Error::BadPeriod { row: i + 1, value: v })
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    RcsDataset::new(
        csv.column(iy),
        period,
        csv.column(idose),
        csv.matrix(&cov_idx),
    )
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|source| Error::IoWrite {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn covariate_names(schema: &Option<Vec<String>>, p: usize) -> Vec<String> {
    match schema {
        Some(names) => names.clone(),
        None => (1..=p).map(|j| format!("x{j}")).collect(),
    }
}

fn write_err(path: &Path, e: csv::Error) -> Error {
    Error::Data(format!("cannot write {}: {e}", path.display()))
}

/// Write a panel dataset to CSV. Values round-trip bit-exactly through
/// [`load_panel_csv`] because floats are printed in shortest-round-trip form.
pub fn write_panel_csv(data: &PanelDataset, path: &Path, schema: &PanelSchema) -> Result<()> {
    let mut w = csv_writer(path)?;
    let cov_names = covariate_names(&schema.covariates, data.p());
    let mut header = vec![
        schema.y_pre.clone(),
        schema.y_post.clone(),
        schema.dose.clone(),
    ];
    header.extend(cov_names);
    w.write_record(&header).map_err(|e| write_err(path, e))?;
    for i in 0..data.n() {
        let mut record = vec![
            data.y_pre[i].to_string(),
            data.y_post[i].to_string(),
            data.dose[i].to_string(),
        ];
        record.extend(data.x_row(i).iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|source| Error::IoWrite {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// Write a repeated cross-sections dataset to CSV (bit-exact round trip).
pub fn write_rcs_csv(data: &RcsDataset, path: &Path, schema: &RcsSchema) -> Result<()> {
    let mut w = csv_writer(path)?;
    let cov_names = covariate_names(&schema.covariates, data.p());
    let mut header = vec![
        schema.y.clone(),
        schema.period.clone(),
        schema.dose.clone(),
    ];
    header.extend(cov_names);
    w.write_record(&header).map_err(|e| write_err(path, e))?;
    for i in 0..data.n() {
        let mut record = vec![
            data.y[i].to_string(),
            data.period[i].to_string(),
            data.dose[i].to_string(),
        ];
        record.extend(data.x_row(i).iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|source| Error::IoWrite {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn small_panel() -> PanelDataset {
        PanelDataset::new(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![1.0, 1.5, 2.5, 2.0],
            vec![0.0, 0.0, 0.5, 1.0],
            array![[1.0, 0.0], [0.5, 1.0], [0.0, 0.5], [1.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn panel_construction_and_accessors() {
        let data = small_panel();
        assert_eq!(data.n(), 4);
        assert_eq!(data.p(), 2);
        assert_eq!(data.delta_y(), vec![1.0, 0.5, 0.5, -1.0]);
        assert!(data.is_control(0));
        assert!(!data.is_control(2));
        assert_eq!(data.positive_doses(), vec![0.5, 1.0]);
        assert_eq!(data.x_row(3), &[1.0, 1.0]);
    }

    #[test]
    fn panel_rejects_invariant_violations() {
        // Negative dose names the row.
        let err = PanelDataset::new(
            vec![0.0; 3],
            vec![0.0; 3],
            vec![0.0, 1.0, -0.1],
            Array2::zeros((3, 1)),
        )
        .unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        // All-control and all-treated are rejected.
        assert!(matches!(
            PanelDataset::new(
                vec![0.0; 2],
                vec![0.0; 2],
                vec![0.0, 0.0],
                Array2::zeros((2, 1))
            ),
            Err(Error::NoTreated)
        ));
        assert!(matches!(
            PanelDataset::new(
                vec![0.0; 2],
                vec![0.0; 2],
                vec![0.5, 1.0],
                Array2::zeros((2, 1))
            ),
            Err(Error::NoControls)
        ));
        // NaN outcome is caught.
        assert!(PanelDataset::new(
            vec![0.0, f64::NAN],
            vec![0.0; 2],
            vec![0.0, 1.0],
            Array2::zeros((2, 1))
        )
        .is_err());
        // Row-count mismatch.
        assert!(PanelDataset::new(
            vec![0.0; 3],
            vec![0.0; 2],
            vec![0.0, 1.0, 1.0],
            Array2::zeros((3, 1))
        )
        .is_err());
    }

    #[test]
    fn rcs_period_validation() {
        let ok = RcsDataset::new(
            vec![1.0, 2.0],
            vec![0, 1],
            vec![0.0, 0.7],
            Array2::zeros((2, 1)),
        );
        assert!(ok.is_ok());
        let single = RcsDataset::new(
            vec![1.0, 2.0],
            vec![1, 1],
            vec![0.0, 0.7],
            Array2::zeros((2, 1)),
        );
        assert!(matches!(single, Err(Error::SinglePeriod(1))));
    }

    #[test]
    fn grid_is_increasing_and_inside_support() {
        let data = small_panel();
        let grid = make_dose_grid(&data, 3, 0.0).unwrap();
        assert_eq!(grid.points(), &[0.5, 0.75, 1.0]);
        let grid = make_dose_grid(&data, 1, 0.0).unwrap();
        assert_eq!(grid.points(), &[0.5]);
    }

    #[test]
    fn grid_quantiles_match_sort_based_oracle() {
        // 1000 doses evenly filling [0.5, 1.5]; compare endpoints against a
        // direct interpolated-order-statistic computation.
        let m = 1000;
        let doses: Vec<f64> = (0..m).map(|i| 0.5 + i as f64 / (m - 1) as f64).collect();
        let mut all = vec![0.0]; // one control row to satisfy invariants
        all.extend(&doses);
        let n = all.len();
        let data = PanelDataset::new(vec![0.0; n], vec![0.0; n], all, Array2::zeros((n, 1)))
            .unwrap();
        let grid = make_dose_grid(&data, 5, 0.05).unwrap();

        let oracle = |q: f64| {
            let mut s = doses.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let pos = q * (s.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if lo + 1 < s.len() {
                s[lo] + frac * (s[lo + 1] - s[lo])
            } else {
                s[lo]
            }
        };
        assert!((grid.points()[0] - oracle(0.05)).abs() < 1e-12);
        assert!((grid.points()[4] - oracle(0.95)).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        let data = small_panel();
        assert!(matches!(
            make_dose_grid(&data, 1, 0.5),
            Err(Error::Config(_))
        ));
        assert!(matches!(make_dose_grid(&data, 0, 0.1), Err(Error::Config(_))));
        // Fewer than 2 distinct positive doses.
        let degenerate = PanelDataset::new(
            vec![0.0; 3],
            vec![0.0; 3],
            vec![0.0, 0.7, 0.7],
            Array2::zeros((3, 1)),
        )
        .unwrap();
        assert!(matches!(
            make_dose_grid(&degenerate, 3, 0.0),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn explicit_grid_validation() {
        assert!(DoseGrid::new(vec![0.2, 0.9]).is_ok());
        assert!(DoseGrid::new(vec![]).is_err());
        assert!(DoseGrid::new(vec![0.0, 0.5]).is_err());
        assert!(DoseGrid::new(vec![0.5, 0.5]).is_err());
        assert!(DoseGrid::new(vec![0.9, 0.2]).is_err());
    }
}

use std::io::{Read, Write};

use rayon::prelude::*;
use residue_core::pairings::{pair_regularized, pair_tube};
use residue_core::{Complex64, PairingResult};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: Vec<f64>,
    pub value: Complex64,
    pub err_est: f64,
    pub n_evals: usize,
    pub seconds: f64,
    pub converged: bool,
    /// Set when the pairing failed; the numeric fields are then NaN/0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRow {
    pub fn from_result(eps: Vec<f64>, r: &PairingResult) -> Self {
        SweepRow {
            eps,
            value: r.value,
            err_est: r.error_estimate,
            n_evals: r.n_evals,
            seconds: r.wall_seconds,
            converged: r.converged,
            error: None,
        }
    }

    fn failed(eps: Vec<f64>, msg: String) -> Self {
        SweepRow {
            eps,
            value: Complex64::new(f64::NAN, f64::NAN),
            err_est: f64::NAN,
            n_evals: 0,
            seconds: 0.0,
            converged: false,
            error: Some(msg),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none() && self.value.re.is_finite() && self.value.im.is_finite()
    }

    pub fn eps_max(&self) -> f64 {
        self.eps.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepTable {
    pub q: usize,
    pub rows: Vec<SweepRow>,
}

fn header(q: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=q).map(|j| format!("eps_{j}")).collect();
    h.extend(
        [
            "value_re",
            "value_im",
            "err_est",
            "n_evals",
            "seconds",
            "converged",
        ]
        .map(String::from),
    );
    h
}

impl SweepTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV with columns `eps_1..eps_q,value_re,value_im,err_est,n_evals,seconds,converged`.
    /// Without `record_timing` the `seconds` column is written as 0.
    pub fn write_csv<W: Write>(&self, w: W, record_timing: bool) -> LabResult<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header(self.q))?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.eps.iter().map(|e| format!("{e:e}")).collect();
            let secs = if record_timing { r.seconds } else { 0.0 };
            rec.extend([
                format!("{:e}", r.value.re),
                format!("{:e}", r.value.im),
                format!("{:e}", r.err_est),
                r.n_evals.to_string(),
                format!("{secs:e}"),
                r.converged.to_string(),
            ]);
            out.write_record(rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self, record_timing: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, record_timing)
            .expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: Read>(r: R) -> LabResult<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let cols = rdr.headers()?.len();
        if cols < 6 {
            return Err(LabError::Config(format!(
                "expected at least 6 columns, found {cols}"
            )));
        }
        let q = cols - 6;
        if rdr.headers()?.iter().map(String::from).collect::<Vec<_>>() != header(q) {
            return Err(LabError::Config("unexpected CSV header".into()));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| LabError::Config(format!("'{s}': {e}")))
        };
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let eps = (0..q)
                .map(|j| num(&rec[j]))
                .collect::<LabResult<Vec<_>>>()?;
            let value = Complex64::new(num(&rec[q])?, num(&rec[q + 1])?);
            let n_evals = rec[q + 3]
                .trim()
                .parse()
                .map_err(|e| LabError::Config(format!("n_evals: {e}")))?;
            let converged = rec[q + 5]
                .trim()
                .parse()
                .map_err(|e| LabError::Config(format!("converged: {e}")))?;
            let error = if value.re.is_nan() {
                Some("failed".into())
            } else {
                None
            };
            rows.push(SweepRow {
                eps,
                value,
                err_est: num(&rec[q + 2])?,
                n_evals,
                seconds: num(&rec[q + 4])?,
                converged,
                error,
            });
        }
        Ok(SweepTable { q, rows })
    }

    /// Successful row with the smallest `‖ε‖∞`.
    pub fn finest(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.ok())
            .min_by(|a, b| a.eps_max().total_cmp(&b.eps_max()))
    }

    /// Limit estimate from the two finest rows: the finest value, with
    /// error = its quadrature error + the last increment.
    pub fn limit_estimate(&self) -> Option<PairingResult> {
        let mut ok: Vec<&SweepRow> = self.rows.iter().filter(|r| r.ok()).collect();
        ok.sort_by(|a, b| a.eps_max().total_cmp(&b.eps_max()));
        let last = ok.first()?;
        let tail = ok
            .get(1)
            .map(|prev| (last.value - prev.value).norm())
            .unwrap_or(f64::INFINITY);
        Some(PairingResult {
            value: last.value,
            error_estimate: last.err_est + tail,
            n_evals: ok.iter().map(|r| r.n_evals).sum(),
            converged: ok.iter().all(|r| r.converged),
            wall_seconds: ok.iter().map(|r| r.seconds).sum(),
        })
    }
}

/// Pairs `cfg` at every schedule point; tube experiments use the sharp
/// tube integral, everything else the smooth regularization. Rows are
/// evaluated concurrently and returned in schedule order.
pub fn run_sweep(cfg: &ExperimentConfig) -> LabResult<SweepTable> {
    cfg.validate()?;
    let f = cfg.holomap()?;
    let phi = cfg.test_form()?;
    let kernels = cfg.kernel_list()?;
    let points = cfg.schedule_points()?;
    let rows = points
        .into_par_iter()
        .map(|eps| {
            let r = match cfg.kind {
                ExperimentKind::Tube => pair_tube(&f, &phi, &eps, cfg.tube_points),
                _ => pair_regularized(&f, &phi, &kernels, &eps, &cfg.quadrature),
            };
            match r {
                Ok(r) => SweepRow::from_result(eps, &r),
                Err(e) => SweepRow::failed(eps, e.to_string()),
            }
        })
        .collect();
    Ok(SweepTable { q: f.q(), rows })
}

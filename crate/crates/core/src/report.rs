//! Result documents written by the CLI: a JSON document per run (config echo,
//! seed, metrics, per-sample series, timing) plus plot-ready CSV tables.
//!
//! Everything except wall-clock timing is deterministic for a fixed config
//! and seed. Timing lives under dedicated `*seconds*` keys and columns so
//! consumers can strip it when comparing runs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::AppConfig;
use crate::error::Result;
use crate::experiments::{ScenarioRow, SweepRow};
use crate::kinematics::{Measurement, RobotState};

/// Aligned per-sample series for one estimation run. Entries are `None`
/// where an estimator has no estimate (the horizon estimator covers only
/// samples `N-1 ..= M-2`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesDocument {
    pub t: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    /// Reference states: ground truth when known, otherwise the
    /// measurement-implied states.
    pub reference: Vec<[f64; 5]>,
    pub mhe: Option<Vec<Option<[f64; 5]>>>,
    pub ekf: Option<Vec<[f64; 5]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateMetrics {
    pub srmse_mhe: Option<f64>,
    pub srmse_ekf: Option<f64>,
    /// Inclusive sample range both estimators are scored on.
    pub evaluated_samples: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateTiming {
    pub mhe_mean_solve_seconds: Option<f64>,
    pub mhe_total_seconds: Option<f64>,
}

/// One `estimate` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateDocument {
    pub config: AppConfig,
    pub seed: u64,
    pub estimator: String,
    pub noise_interpretation: String,
    pub metrics: EstimateMetrics,
    pub timing: EstimateTiming,
    pub series: SeriesDocument,
}

/// One `montecarlo` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloDocument {
    pub config: AppConfig,
    pub seed: u64,
    pub noise_interpretation: String,
    pub rows: Vec<ScenarioRow>,
}

/// One `horizon-sweep` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepDocument {
    pub config: AppConfig,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

/// One `generate` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateDocument {
    pub config: AppConfig,
    pub seed: u64,
    pub noise_interpretation: String,
    pub samples: usize,
    pub truth_file: String,
    pub clean_file: String,
    pub noisy_file: String,
}

pub const NOISE_INTERPRETATION: &str =
    "abs(sigma) is the Gaussian standard deviation in radians; the sign is ignored";

pub fn write_json<T: Serialize>(path: &Path, document: &T) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, document)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the aligned series as CSV, with empty cells where an estimator has
/// no estimate.
pub fn write_series_csv(path: &Path, series: &SeriesDocument) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let state_cols = |prefix: &str| {
        ["x", "y", "z", "theta", "phi"]
            .map(|c| format!("{prefix}_{c}"))
            .join(",")
    };
    writeln!(
        out,
        "t,gamma,beta,{},{},{}",
        state_cols("ref"),
        state_cols("mhe"),
        state_cols("ekf")
    )?;
    for i in 0..series.t.len() {
        let mhe = series
            .mhe
            .as_ref()
            .and_then(|m| m[i])
            .map(|x| x.map(|v| v.to_string()).join(","))
            .unwrap_or_else(|| ",,,,".into());
        let ekf = series
            .ekf
            .as_ref()
            .map(|e| e[i].map(|v| v.to_string()).join(","))
            .unwrap_or_else(|| ",,,,".into());
        writeln!(
            out,
            "{},{},{},{},{},{}",
            series.t[i],
            series.gamma[i],
            series.beta[i],
            series.reference[i].map(|v| v.to_string()).join(","),
            mhe,
            ekf
        )?;
    }
    Ok(())
}

pub fn write_montecarlo_csv(path: &Path, rows: &[ScenarioRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "scenario,sigma_beta,sigma_gamma,seed,srmse_mhe,srmse_ekf,mean_solve_seconds,error"
    )?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.index + 1,
            row.sigma_beta,
            row.sigma_gamma,
            row.seed,
            fmt_opt(row.srmse_mhe),
            fmt_opt(row.srmse_ekf),
            fmt_opt(row.mean_solve_seconds),
            row.error.as_deref().unwrap_or_default()
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "horizon,solve_count,srmse,mean_solve_seconds,total_seconds")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.horizon, row.solve_count, row.srmse, row.mean_solve_seconds, row.total_seconds
        )?;
    }
    Ok(())
}

/// Writes a truth state series as CSV.
pub fn write_states_csv(path: &Path, times: &[f64], states: &[RobotState]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "t,x,y,z,theta,phi")?;
    for (t, state) in times.iter().zip(states) {
        let v = state.to_vector();
        writeln!(out, "{},{},{},{},{},{}", t, v[0], v[1], v[2], v[3], v[4])?;
    }
    Ok(())
}

/// Builds the aligned series document for an estimation run.
pub fn build_series(
    times: &[f64],
    measurements: &[Measurement],
    reference: &[RobotState],
    mhe: Option<(&[RobotState], usize)>,
    ekf: Option<&[RobotState]>,
) -> SeriesDocument {
    let pack = |x: &RobotState| {
        let v = x.to_vector();
        [v[0], v[1], v[2], v[3], v[4]]
    };
    let total = times.len();
    SeriesDocument {
        t: times.to_vec(),
        gamma: measurements.iter().map(|z| z.gamma).collect(),
        beta: measurements.iter().map(|z| z.beta).collect(),
        reference: reference.iter().map(pack).collect(),
        mhe: mhe.map(|(estimates, first)| {
            (0..total)
                .map(|i| {
                    i.checked_sub(first).and_then(|offset| estimates.get(offset)).map(pack)
                })
                .collect()
        }),
        ekf: ekf.map(|estimates| estimates.iter().map(pack).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::ShapeParams;

    #[test]
    fn series_alignment_marks_missing_samples() {
        let state = RobotState::from_shape(ShapeParams::new(0.3, 0.1, 1.0)).unwrap();
        let times: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let measurements = vec![Measurement::new(0.0, 0.1); 5];
        let reference = vec![state; 5];
        let estimates = vec![state; 2];
        let series =
            build_series(&times, &measurements, &reference, Some((&estimates, 2)), None);
        let mhe = series.mhe.as_ref().unwrap();
        assert!(mhe[0].is_none() && mhe[1].is_none());
        assert!(mhe[2].is_some() && mhe[3].is_some());
        assert!(mhe[4].is_none()); // the final sample has no window ending there
        assert!(series.ekf.is_none());
    }

    #[test]
    fn csv_writers_produce_expected_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let state = RobotState::from_shape(ShapeParams::new(0.3, 0.1, 1.0)).unwrap();
        let series = build_series(
            &[0.0, 0.05],
            &[Measurement::new(0.0, 0.1); 2],
            &[state; 2],
            None,
            Some(&[state; 2]),
        );
        let path = dir.path().join("series.csv");
        write_series_csv(&path, &series).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,gamma,beta,ref_x,ref_y,ref_z,ref_theta,ref_phi,\
             mhe_x,mhe_y,mhe_z,mhe_theta,mhe_phi,ekf_x,ekf_y,ekf_z,ekf_theta,ekf_phi"
        );
        assert_eq!(lines.count(), 2);
        for line in text.lines() {
            assert_eq!(line.matches(',').count(), 17);
        }
    }
}

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ChainState, SamplerConfig};
use crate::error::{Error, Result};

/// Parameter values, psi, red count and MH outcomes after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    pub psi: f64,
    pub p1: f64,
    pub p2: f64,
    pub q2: f64,
    pub accepted_p1: bool,
    pub accepted_p2: bool,
    pub accepted_q2: bool,
    pub m: usize,
}

/// Everything a chain leaves behind: per-iteration records for the whole
/// run, per-vertex red counts over the retained window and, when
/// `record_traces` is set, the colour of every latent vertex at every
/// iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    latent_ids: Vec<usize>,
    burn_in: usize,
    records: Vec<IterationRecord>,
    red_counts: Vec<u64>,
    /// Row `h` holds the red indicators after iteration `h + 1`.
    snapshots: Option<Vec<Vec<bool>>>,
}

impl ChainTrace {
    pub fn new(latent_ids: Vec<usize>, config: &SamplerConfig) -> Self {
        let len = latent_ids.len();
        Self {
            latent_ids,
            burn_in: config.burn_in,
            records: Vec::with_capacity(config.burn_in + config.samples),
            red_counts: vec![0; len],
            snapshots: config.record_traces.then(Vec::new),
        }
    }

    pub fn record(&mut self, state: &ChainState, accepted: [bool; 3]) {
        let params = state.params();
        self.records.push(IterationRecord {
            iteration: self.records.len() + 1,
            psi: state.psi(),
            p1: params.p1(),
            p2: params.p2(),
            q2: params.q2(),
            accepted_p1: accepted[0],
            accepted_p2: accepted[1],
            accepted_q2: accepted[2],
            m: state.m(),
        });
        if self.records.len() > self.burn_in {
            for (count, c) in self.red_counts.iter_mut().zip(state.y()) {
                *count += u64::from(c.is_red());
            }
        }
        if let Some(snaps) = &mut self.snapshots {
            snaps.push(state.y().iter().map(|c| c.is_red()).collect());
        }
    }

    /// Vertex ids of the latent vertices, in the order used by every
    /// per-vertex vector here.
    pub fn latent_ids(&self) -> &[usize] {
        &self.latent_ids
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    /// Retained (post-burn-in) records.
    pub fn records(&self) -> &[IterationRecord] {
        &self.records[self.burn_in.min(self.records.len())..]
    }

    /// Records from iteration 1, burn-in included.
    pub fn all_records(&self) -> &[IterationRecord] {
        &self.records
    }

    /// Number of retained iterations.
    pub fn samples(&self) -> usize {
        self.records().len()
    }

    /// Retained iterations in which each latent vertex was red.
    pub fn red_counts(&self) -> &[u64] {
        &self.red_counts
    }

    /// Fraction of retained iterations in which each latent vertex was red.
    pub fn marginal_red(&self) -> Result<Vec<f64>> {
        let h = self.samples();
        if h == 0 {
            return Err(Error::EmptyTrace("no post-burn-in iterations".into()));
        }
        Ok(self.red_counts.iter().map(|&c| c as f64 / h as f64).collect())
    }

    /// Retained means of `(p1, p2, q2, psi)`.
    pub fn param_means(&self) -> Result<[f64; 4]> {
        let recs = self.records();
        if recs.is_empty() {
            return Err(Error::EmptyTrace("no post-burn-in iterations".into()));
        }
        let mut sums = [0.0; 4];
        for r in recs {
            for (s, v) in sums.iter_mut().zip([r.p1, r.p2, r.q2, r.psi]) {
                *s += v;
            }
        }
        Ok(sums.map(|s| s / recs.len() as f64))
    }

    /// Post-burn-in acceptance rates of `(p1, p2, q2)`.
    pub fn acceptance_rates(&self) -> [f64; 3] {
        acceptance(self.records())
    }

    /// Acceptance rates over consecutive windows of `window` iterations,
    /// whole run included.
    pub fn windowed_acceptance(&self, window: usize) -> Vec<[f64; 3]> {
        self.records.chunks(window.max(1)).map(acceptance).collect()
    }

    pub fn has_snapshots(&self) -> bool {
        self.snapshots.is_some()
    }

    /// 0/1 red indicator of latent vertex `i` at every iteration from 1.
    pub fn indicator_series(&self, i: usize) -> Result<Vec<f64>> {
        let snaps = self.snapshots()?;
        Ok(snaps.iter().map(|row| f64::from(u8::from(row[i]))).collect())
    }

    /// Running red fraction of every latent vertex after each iteration,
    /// counted from iteration 1. Row `h` averages iterations `1..=h+1`.
    pub fn moving_average_marginals(&self) -> Result<Vec<Vec<f64>>> {
        let snaps = self.snapshots()?;
        let mut sums = vec![0u64; self.latent_ids.len()];
        Ok(snaps
            .iter()
            .enumerate()
            .map(|(h, row)| {
                for (s, &red) in sums.iter_mut().zip(row) {
                    *s += u64::from(red);
                }
                sums.iter().map(|&s| s as f64 / (h + 1) as f64).collect()
            })
            .collect())
    }

    /// Running means of `(p1, p2, q2, psi)` from iteration 1.
    pub fn moving_average_params(&self) -> Vec<[f64; 4]> {
        let mut sums = [0.0; 4];
        self.records
            .iter()
            .enumerate()
            .map(|(h, r)| {
                for (s, v) in sums.iter_mut().zip([r.p1, r.p2, r.q2, r.psi]) {
                    *s += v;
                }
                sums.map(|s| s / (h + 1) as f64)
            })
            .collect()
    }

    fn snapshots(&self) -> Result<&[Vec<bool>]> {
        self.snapshots
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("trace was recorded without snapshots".into()))
    }

    /// One row per iteration from 1:
    /// `iteration,psi,p1,p2,q2,accepted_p1,accepted_p2,accepted_q2,m`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Running marginals, one column per latent vertex labelled by its id
    /// (offset by `id_base`).
    pub fn write_marginals_csv<W: Write>(&self, out: W, id_base: usize) -> Result<()> {
        let series = self.moving_average_marginals()?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iteration".to_string()];
        header.extend(self.latent_ids.iter().map(|id| format!("v{}", id + id_base)));
        w.write_record(&header).map_err(csv_error)?;
        for (h, row) in series.iter().enumerate() {
            let mut fields = vec![(h + 1).to_string()];
            fields.extend(row.iter().map(f64::to_string));
            w.write_record(&fields).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn acceptance(records: &[IterationRecord]) -> [f64; 3] {
    if records.is_empty() {
        return [f64::NAN; 3];
    }
    let mut hits = [0usize; 3];
    for r in records {
        for (h, a) in hits.iter_mut().zip([r.accepted_p1, r.accepted_p2, r.accepted_q2]) {
            *h += usize::from(a);
        }
    }
    hits.map(|h| h as f64 / records.len() as f64)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidConfig(format!("csv: {other:?}")),
    }
}

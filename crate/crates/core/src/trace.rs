//! Per-step run records and their newline-delimited JSON serialization.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One cluster of the active set, summarized by its smallest enclosing
/// ball and member count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub center: Vec<f64>,
    pub radius: f64,
    pub count: usize,
}

/// State of the process at one step, plus the selection that was computed
/// *from* this state (absent on the final record, which has no outgoing
/// transition, and on step 0 before any step has been taken).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u32,
    /// Threshold of the transition out of this state.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threshold: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certain_count: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tie_pool_size: Option<u64>,
    pub n_clusters: usize,
    pub max_radius: f64,
    pub min_radius: f64,
    /// Radius of the smallest ball containing the whole active set.
    pub support_radius: f64,
    pub clusters: Vec<ClusterRow>,
    /// `|A_t ∩ A_s|` for each s < t, in step order.
    pub past_overlap: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub members: Option<Vec<u32>>,
    /// Wall time of the step that produced this state. Excluded from
    /// serialization so repeated runs write byte-identical traces.
    #[serde(skip, default)]
    pub wall_ms: f64,
}

/// Full history of one run: one record per visited state.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<StepRecord>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Thresholds in step order (C_0, C_1, ...), one per transition.
    pub fn thresholds(&self) -> Vec<u32> {
        self.records.iter().filter_map(|r| r.threshold).collect()
    }

    pub fn final_record(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// First step whose active set forms a single cluster.
    pub fn first_single_cluster_step(&self) -> Option<u32> {
        self.records.iter().find(|r| r.n_clusters == 1).map(|r| r.t)
    }

    pub fn members_at(&self, t: usize) -> Result<&[u32]> {
        self.records
            .get(t)
            .and_then(|r| r.members.as_deref())
            .ok_or(Error::MissingMembers)
    }

    /// Write one JSON object per record. `include_members` controls
    /// whether member id lists are kept in the output.
    pub fn write_jsonl<W: Write>(&self, mut out: W, include_members: bool) -> std::io::Result<()> {
        for record in &self.records {
            if include_members || record.members.is_none() {
                serde_json::to_writer(&mut out, record)?;
            } else {
                let mut slim = record.clone();
                slim.members = None;
                serde_json::to_writer(&mut out, &slim)?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> std::io::Result<Self> {
        let mut records = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: StepRecord = serde_json::from_str(&line)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            records.push(record);
        }
        Ok(RunTrace { records })
    }
}

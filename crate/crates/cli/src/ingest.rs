//! Newline-delimited JSON proposal records.
//!
//! One record per line:
//!
//! ```json
//! {"id": "p1", "dao": "example", "num_choices": 2,
//!  "voters": [{"weight": "12.5", "choice": 0}, {"weight": "3", "choice": 1}],
//!  "metadata": {"title": "..."}}
//! ```
//!
//! Weights are decimal strings parsed exactly at the configured scale.
//! Malformed lines are skipped and counted; a missing input is fatal.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bpriv_core::{VotingTranscript, Weight};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterRecord {
    pub weight: String,
    pub choice: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub id: String,
    pub dao: String,
    pub num_choices: usize,
    pub voters: Vec<VoterRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// A validated proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub dao: String,
    pub transcript: VotingTranscript,
    pub metadata: BTreeMap<String, String>,
}

impl Proposal {
    pub fn id(&self) -> &str {
        self.transcript.proposal_id()
    }

    /// The record this proposal serializes to, weights in canonical form.
    pub fn to_record(&self) -> ProposalRecord {
        let t = &self.transcript;
        ProposalRecord {
            id: t.proposal_id().to_string(),
            dao: self.dao.clone(),
            num_choices: t.num_choices(),
            voters: t
                .weights()
                .iter()
                .zip(t.choices())
                .map(|(w, &c)| VoterRecord {
                    weight: w.to_decimal_string(t.scale()),
                    choice: c,
                })
                .collect(),
            metadata: self.metadata.clone(),
        }
    }
}

/// Which filters apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Any number of choices.
    Attack,
    /// Binary proposals up to the voter cap.
    BPrivacy { max_voters: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub scale: u32,
    pub abstain_choice: Option<usize>,
    pub mode: Mode,
}

/// Counts of records seen and excluded per rule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub files: usize,
    pub records: usize,
    pub accepted: usize,
    pub malformed: usize,
    pub invalid: usize,
    pub not_binary: usize,
    pub too_many_voters: usize,
    pub abstentions_dropped: usize,
}

/// Input files: `path` itself, or the `.ndjson`/`.jsonl` files of a
/// directory in name order.
fn input_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.exists() {
        bail!("input {} does not exist", path.display());
    }
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("listing {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "ndjson" || e == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

/// Converts one record, dropping abstentions and renumbering the choices
/// above the abstention index.
pub fn to_proposal(
    record: ProposalRecord,
    options: &IngestOptions,
    report: &mut IngestReport,
) -> Result<Proposal, String> {
    let mut num_choices = record.num_choices;
    let mut weights = Vec::with_capacity(record.voters.len());
    let mut choices = Vec::with_capacity(record.voters.len());
    for v in &record.voters {
        if let Some(a) = options.abstain_choice {
            if v.choice == a {
                report.abstentions_dropped += 1;
                continue;
            }
        }
        let w = Weight::parse(&v.weight, options.scale).map_err(|e| e.to_string())?;
        let choice = match options.abstain_choice {
            Some(a) if v.choice > a => v.choice - 1,
            _ => v.choice,
        };
        weights.push(w);
        choices.push(choice);
    }
    if let Some(a) = options.abstain_choice {
        if a < num_choices {
            num_choices -= 1;
        }
    }
    let transcript =
        VotingTranscript::new(record.id, num_choices, options.scale, weights, choices).map_err(|e| e.to_string())?;
    Ok(Proposal {
        dao: record.dao,
        transcript,
        metadata: record.metadata,
    })
}

pub fn ingest(path: &Path, options: &IngestOptions) -> Result<(Vec<Proposal>, IngestReport)> {
    let files = input_files(path)?;
    let mut report = IngestReport {
        files: files.len(),
        ..Default::default()
    };
    let mut proposals = Vec::new();
    for file in files {
        let reader = BufReader::new(File::open(&file).with_context(|| format!("opening {}", file.display()))?);
        for (number, line) in reader.lines().enumerate() {
            let line = line.with_context(|| format!("reading {}", file.display()))?;
            if line.trim().is_empty() {
                continue;
            }
            report.records += 1;
            let record: ProposalRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    report.malformed += 1;
                    tracing::warn!(file = %file.display(), line = number + 1, error = %e, "skipping malformed record");
                    continue;
                }
            };
            if let Mode::BPrivacy { max_voters } = options.mode {
                if record.voters.len() > max_voters {
                    report.too_many_voters += 1;
                    continue;
                }
            }
            let id = record.id.clone();
            let proposal = match to_proposal(record, options, &mut report) {
                Ok(p) => p,
                Err(e) => {
                    report.invalid += 1;
                    tracing::warn!(proposal = %id, error = %e, "skipping invalid proposal");
                    continue;
                }
            };
            if matches!(options.mode, Mode::BPrivacy { .. }) && !proposal.transcript.is_binary() {
                report.not_binary += 1;
                continue;
            }
            proposals.push(proposal);
        }
    }
    report.accepted = proposals.len();
    Ok((proposals, report))
}

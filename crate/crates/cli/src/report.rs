//! Output files. Every run writes `summary.json` and `per_proposal.csv`;
//! attack runs add `per_dao.csv`, B-privacy runs add `per_dao.csv` and
//! `mdc_cohorts.csv`. Reals are printed with six decimals so identical runs
//! give byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use bpriv_core::optimizer::geometric_mean;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::ingest::IngestReport;
use crate::pipeline::{mdc_cohort, AttackRow, BPrivacyRow, MdcRow};

pub fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Aggregate attack metrics over a group of proposals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackAggregate {
    pub proposals: usize,
    pub failed: usize,
    pub mean_ballots_leaked_pct: f64,
    pub mean_weight_leaked_pct: f64,
    pub deniability_broken_pct: f64,
    pub full_recovery_pct: f64,
}

pub fn aggregate_attacks<'a>(rows: impl IntoIterator<Item = &'a AttackRow>) -> AttackAggregate {
    let rows: Vec<&AttackRow> = rows.into_iter().collect();
    let ok: Vec<&&AttackRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let k = ok.len().max(1) as f64;
    let mean = |f: fn(&AttackRow) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / k;
    AttackAggregate {
        proposals: rows.len(),
        failed: rows.len() - ok.len(),
        mean_ballots_leaked_pct: mean(|r| r.ballots_leaked_pct),
        mean_weight_leaked_pct: mean(|r| r.weight_leaked_pct),
        deniability_broken_pct: 100.0 * mean(|r| r.deniability_broken),
        full_recovery_pct: 100.0 * mean(|r| r.full_recovery),
    }
}

fn group_by<T, K: Ord>(rows: &[T], key: impl Fn(&T) -> K) -> BTreeMap<K, Vec<&T>> {
    let mut groups: BTreeMap<K, Vec<&T>> = BTreeMap::new();
    for r in rows {
        groups.entry(key(r)).or_default().push(r);
    }
    groups
}

pub fn write_attack_report(
    out: &Path,
    command: &str,
    config: &RunConfig,
    ingest: &IngestReport,
    rows: &[AttackRow],
) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_csv(
        &out.join("per_proposal.csv"),
        &[
            "id",
            "dao",
            "voters",
            "num_choices",
            "determined",
            "ballots_leaked_pct",
            "weight_leaked_pct",
            "deniability_broken",
            "full_recovery",
            "subset_sum",
            "error",
        ],
        rows.iter().map(|r| {
            vec![
                r.id.clone(),
                r.dao.clone(),
                r.voters.to_string(),
                r.num_choices.to_string(),
                fmt(r.determined),
                fmt(r.ballots_leaked_pct),
                fmt(r.weight_leaked_pct),
                fmt(r.deniability_broken),
                fmt(r.full_recovery),
                r.subset_sum.clone(),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    let per_dao: Vec<(String, AttackAggregate)> = group_by(rows, |r| r.dao.clone())
        .into_iter()
        .map(|(dao, rs)| (dao, aggregate_attacks(rs)))
        .collect();
    write_csv(
        &out.join("per_dao.csv"),
        &[
            "dao",
            "proposals",
            "failed",
            "mean_ballots_leaked_pct",
            "mean_weight_leaked_pct",
            "deniability_broken_pct",
            "full_recovery_pct",
        ],
        per_dao.iter().map(|(dao, a)| {
            vec![
                dao.clone(),
                a.proposals.to_string(),
                a.failed.to_string(),
                fmt(a.mean_ballots_leaked_pct),
                fmt(a.mean_weight_leaked_pct),
                fmt(a.deniability_broken_pct),
                fmt(a.full_recovery_pct),
            ]
        }),
    )?;
    write_json(
        &out.join("summary.json"),
        &json!({
            "command": command,
            "config": config,
            "ingest": ingest,
            "overall": aggregate_attacks(rows),
        }),
    )
}

/// Geometric means of relative B-privacy over a group of rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BPrivacyAggregate {
    pub proposals: usize,
    pub failed: usize,
    pub geomean_relative_noised: Option<f64>,
    pub geomean_relative_winner_only: Option<f64>,
}

pub fn aggregate_bprivacy<'a>(rows: impl IntoIterator<Item = &'a BPrivacyRow>) -> BPrivacyAggregate {
    let rows: Vec<&BPrivacyRow> = rows.into_iter().collect();
    let noised: Vec<f64> = rows.iter().filter_map(|r| r.relative_noised).collect();
    let winner: Vec<f64> = rows.iter().filter_map(|r| r.relative_winner_only).collect();
    BPrivacyAggregate {
        proposals: rows.len(),
        failed: rows.iter().filter(|r| r.error.is_some()).count(),
        geomean_relative_noised: geometric_mean(&noised),
        geomean_relative_winner_only: geometric_mean(&winner),
    }
}

const AGGREGATE_COLUMNS: [&str; 4] = [
    "proposals",
    "failed",
    "geomean_relative_noised",
    "geomean_relative_winner_only",
];

fn aggregate_cells(a: &BPrivacyAggregate) -> Vec<String> {
    vec![
        a.proposals.to_string(),
        a.failed.to_string(),
        fmt_opt(a.geomean_relative_noised),
        fmt_opt(a.geomean_relative_winner_only),
    ]
}

/// Groups rows by `key` and perturbation, in key then perturbation order.
fn by_key_and_d(
    rows: &[BPrivacyRow],
    key: impl Fn(&BPrivacyRow) -> String,
) -> Vec<(String, f64, BPrivacyAggregate)> {
    let mut order: Vec<f64> = Vec::new();
    for r in rows {
        if !order.contains(&r.d) {
            order.push(r.d);
        }
    }
    order.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    for (k, group) in group_by(rows, key) {
        for &d in &order {
            let at_d: Vec<&BPrivacyRow> = group.iter().copied().filter(|r| r.d == d).collect();
            if !at_d.is_empty() {
                out.push((k.clone(), d, aggregate_bprivacy(at_d)));
            }
        }
    }
    out
}

pub fn write_bprivacy_report(
    out: &Path,
    command: &str,
    config: &RunConfig,
    ingest: &IngestReport,
    rows: &[BPrivacyRow],
) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let budget = |b: &Option<crate::pipeline::PolicyBudget>| {
        b.as_ref()
            .map(|b| vec![fmt(b.budget), b.strategy.clone(), fmt(b.p_succ)])
            .unwrap_or_else(|| vec![String::new(); 3])
    };
    write_csv(
        &out.join("per_proposal.csv"),
        &[
            "id",
            "dao",
            "voters",
            "mdc",
            "mdc_cohort",
            "d",
            "noise_scale",
            "budget_public",
            "strategy_public",
            "p_succ_public",
            "budget_noised",
            "strategy_noised",
            "p_succ_noised",
            "budget_winner_only",
            "strategy_winner_only",
            "p_succ_winner_only",
            "relative_noised",
            "relative_winner_only",
            "error",
        ],
        rows.iter().map(|r| {
            let mut cells = vec![
                r.id.clone(),
                r.dao.clone(),
                r.voters.to_string(),
                r.mdc.to_string(),
                mdc_cohort(r.mdc).to_string(),
                fmt(r.d),
                fmt(r.noise_scale),
            ];
            cells.extend(budget(&r.public));
            cells.extend(budget(&r.noised));
            cells.extend(budget(&r.winner_only));
            cells.push(fmt_opt(r.relative_noised));
            cells.push(fmt_opt(r.relative_winner_only));
            cells.push(r.error.clone().unwrap_or_default());
            cells
        }),
    )?;
    let per_dao = by_key_and_d(rows, |r| r.dao.clone());
    let mut header = vec!["dao", "d"];
    header.extend(AGGREGATE_COLUMNS);
    write_csv(
        &out.join("per_dao.csv"),
        &header,
        per_dao.iter().map(|(dao, d, a)| {
            let mut cells = vec![dao.clone(), fmt(*d)];
            cells.extend(aggregate_cells(a));
            cells
        }),
    )?;
    let cohorts = by_key_and_d(rows, |r| mdc_cohort(r.mdc).to_string());
    let mut header = vec!["mdc_cohort", "d"];
    header.extend(AGGREGATE_COLUMNS);
    write_csv(
        &out.join("mdc_cohorts.csv"),
        &header,
        cohorts.iter().map(|(c, d, a)| {
            let mut cells = vec![c.clone(), fmt(*d)];
            cells.extend(aggregate_cells(a));
            cells
        }),
    )?;
    let overall: Vec<serde_json::Value> = by_key_and_d(rows, |_| String::new())
        .into_iter()
        .map(|(_, d, a)| json!({"d": d, "aggregate": a}))
        .collect();
    write_json(
        &out.join("summary.json"),
        &json!({
            "command": command,
            "config": config,
            "ingest": ingest,
            "overall": overall,
        }),
    )
}

pub fn write_mdc_report(
    out: &Path,
    config: &RunConfig,
    ingest: &IngestReport,
    rows: &[MdcRow],
) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_csv(
        &out.join("per_proposal.csv"),
        &["id", "dao", "voters", "mdc", "mdc_cohort", "error"],
        rows.iter().map(|r| {
            vec![
                r.id.clone(),
                r.dao.clone(),
                r.voters.to_string(),
                r.mdc.map(|m| m.to_string()).unwrap_or_default(),
                r.mdc.map(|m| mdc_cohort(m).to_string()).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for m in rows.iter().filter_map(|r| r.mdc) {
        *counts.entry(mdc_cohort(m)).or_default() += 1;
    }
    write_csv(
        &out.join("mdc_cohorts.csv"),
        &["mdc_cohort", "proposals"],
        counts.iter().map(|(c, n)| vec![c.to_string(), n.to_string()]),
    )?;
    write_json(
        &out.join("summary.json"),
        &json!({
            "command": "mdc",
            "config": config,
            "ingest": ingest,
            "cohorts": counts,
            "failed": rows.iter().filter(|r| r.error.is_some()).count(),
        }),
    )
}

//! Exploratory-statistics report bundle.
//!
//! Plot-ready tables: arrival and reporter CDFs, spoofed/non-spoofed From:
//! domain CDFs, the campaign duration table, vulnerability and trigger
//! distributions, the weekly spoof-distance trend, and the regressor
//! correlation matrix. Output is CSV; no rendering here.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Email;
use crate::dedup::{CampaignCluster, DurationClass};
use crate::econometrics::stats::{pearson, quantile_sorted, sample_sd};
use crate::llda::CognitiveProfile;
use crate::urlintel::EmailClicks;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub x: f64,
    pub p: f64,
}

/// Empirical CDF over raw values: one point per distinct value, cumulative
/// fraction, non-decreasing, ending at 1.
pub fn empirical_cdf(values: &[f64]) -> Vec<CdfPoint> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut out: Vec<CdfPoint> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.x == *v => last.p = p,
            _ => out.push(CdfPoint { x: *v, p }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class: String,
    pub n: usize,
    pub samples_min: f64,
    pub samples_q1: f64,
    pub samples_mean: f64,
    pub samples_median: f64,
    pub samples_q3: f64,
    pub samples_max: f64,
    pub samples_sd: f64,
    pub duration_min: f64,
    pub duration_q1: f64,
    pub duration_mean: f64,
    pub duration_median: f64,
    pub duration_q3: f64,
    pub duration_max: f64,
    pub duration_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: String,
    pub emails_with_vuln: usize,
    pub emails_with_vuln_clicked: usize,
    pub total_triggers: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerSummary {
    pub label: String,
    pub min: f64,
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyTrend {
    /// (week index since first email, mean spoof distance).
    pub points: Vec<(i64, f64)>,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrMatrix {
    pub names: Vec<String>,
    /// Row-major Pearson correlations; NaN when a column is constant.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub arrival_cdf: Vec<CdfPoint>,
    pub reporter_cdf: Vec<CdfPoint>,
    pub spoofed_from_cdf: Vec<CdfPoint>,
    pub nonspoofed_from_cdf: Vec<CdfPoint>,
    pub campaign_table: Vec<ClassStats>,
    pub vuln_distribution: Vec<LabelCount>,
    pub trigger_summary: Vec<TriggerSummary>,
    pub weekly_spoof_trend: Option<WeeklyTrend>,
    pub trend_note: Option<String>,
    pub regressor_correlation: CorrMatrix,
}

fn five_number(values: &mut [f64]) -> (f64, f64, f64, f64, f64, f64, f64) {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| quantile_sorted(values, p);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (
        q(0.0),
        q(0.25),
        mean,
        q(0.5),
        q(0.75),
        q(1.0),
        sample_sd(values),
    )
}

/// Assemble the whole bundle from pipeline artifacts. `spoofs` maps email
/// id to spoof distance; `spoof_cutoff` splits spoofed from non-spoofed
/// From: domains.
pub fn report_stats(
    emails: &[Email],
    campaigns: &[CampaignCluster],
    profiles: &[CognitiveProfile],
    clicks: &[EmailClicks],
    spoofs: &BTreeMap<String, f64>,
    labels: &[String],
    spoof_cutoff: f64,
) -> ReportBundle {
    // arrival CDF over dates
    let arrival: Vec<f64> = emails
        .iter()
        .filter_map(|e| e.date.map(|d| d.timestamp() as f64))
        .collect();
    let arrival_cdf = empirical_cdf(&arrival);

    // reporter CDF: emails per To: address
    let mut per_reporter: BTreeMap<&str, usize> = BTreeMap::new();
    for e in emails {
        *per_reporter.entry(e.to_addr.as_str()).or_insert(0) += 1;
    }
    let reporter_counts: Vec<f64> = per_reporter.values().map(|c| *c as f64).collect();
    let reporter_cdf = empirical_cdf(&reporter_counts);

    // spoofed / non-spoofed From: domain CDFs (emails per domain)
    let mut per_from: BTreeMap<&str, (usize, bool)> = BTreeMap::new();
    for e in emails {
        let spoofed = spoofs
            .get(&e.id)
            .map(|d| *d <= spoof_cutoff)
            .unwrap_or(false);
        let entry = per_from.entry(e.from_domain.as_str()).or_insert((0, spoofed));
        entry.0 += 1;
    }
    let spoofed_counts: Vec<f64> = per_from
        .values()
        .filter(|(_, s)| *s)
        .map(|(c, _)| *c as f64)
        .collect();
    let nonspoofed_counts: Vec<f64> = per_from
        .values()
        .filter(|(_, s)| !*s)
        .map(|(c, _)| *c as f64)
        .collect();

    // campaign duration table
    let mut campaign_table = Vec::new();
    for class in [
        DurationClass::SingleDay,
        DurationClass::Short,
        DurationClass::Long,
    ] {
        let members: Vec<&CampaignCluster> = campaigns
            .iter()
            .filter(|c| c.duration_class == class)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut samples: Vec<f64> = members.iter().map(|c| c.samples as f64).collect();
        let mut durations: Vec<f64> = members.iter().map(|c| c.duration_days).collect();
        let s = five_number(&mut samples);
        let d = five_number(&mut durations);
        campaign_table.push(ClassStats {
            class: class.as_str().to_string(),
            n: members.len(),
            samples_min: s.0,
            samples_q1: s.1,
            samples_mean: s.2,
            samples_median: s.3,
            samples_q3: s.4,
            samples_max: s.5,
            samples_sd: s.6,
            duration_min: d.0,
            duration_q1: d.1,
            duration_mean: d.2,
            duration_median: d.3,
            duration_q3: d.4,
            duration_max: d.5,
            duration_sd: d.6,
        });
    }

    // vulnerability / trigger distributions
    let clicked_ids: std::collections::BTreeSet<&str> =
        clicks.iter().map(|c| c.email_id.as_str()).collect();
    let k = labels.len();
    let mut vuln_distribution = Vec::with_capacity(k);
    let mut trigger_summary = Vec::with_capacity(k);
    for (i, label) in labels.iter().enumerate() {
        let mut with_vuln = 0usize;
        let mut with_vuln_clicked = 0usize;
        let mut total = 0u64;
        let mut counts: Vec<f64> = Vec::with_capacity(profiles.len());
        for p in profiles {
            let present = p.vulns_present.get(i).copied().unwrap_or(false);
            let count = p.trigger_counts.get(i).copied().unwrap_or(0);
            counts.push(count as f64);
            total += count as u64;
            if present {
                with_vuln += 1;
                if clicked_ids.contains(p.email_id.as_str()) {
                    with_vuln_clicked += 1;
                }
            }
        }
        vuln_distribution.push(LabelCount {
            label: label.clone(),
            emails_with_vuln: with_vuln,
            emails_with_vuln_clicked: with_vuln_clicked,
            total_triggers: total,
        });
        if !counts.is_empty() {
            counts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            trigger_summary.push(TriggerSummary {
                label: label.clone(),
                min: quantile_sorted(&counts, 0.0),
                q025: quantile_sorted(&counts, 0.025),
                median: quantile_sorted(&counts, 0.5),
                q975: quantile_sorted(&counts, 0.975),
                max: quantile_sorted(&counts, 1.0),
            });
        }
    }

    // weekly spoof-distance trend
    let mut trend_note = None;
    let weekly_spoof_trend = {
        let dated: Vec<(i64, f64)> = emails
            .iter()
            .filter_map(|e| {
                let d = e.date?;
                let s = spoofs.get(&e.id)?;
                Some((d.timestamp(), *s))
            })
            .collect();
        if dated.is_empty() {
            trend_note = Some("no dated emails with spoof distances".to_string());
            None
        } else {
            let t0 = dated.iter().map(|(t, _)| *t).min().unwrap();
            let mut by_week: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
            for (t, s) in dated {
                by_week.entry((t - t0) / (7 * 86_400)).or_default().push(s);
            }
            if by_week.len() < 3 {
                trend_note = Some(format!(
                    "only {} distinct weeks; trend omitted",
                    by_week.len()
                ));
                None
            } else {
                let points: Vec<(i64, f64)> = by_week
                    .into_iter()
                    .map(|(w, vals)| (w, vals.iter().sum::<f64>() / vals.len() as f64))
                    .collect();
                let xs: Vec<f64> = points.iter().map(|(w, _)| *w as f64).collect();
                let ys: Vec<f64> = points.iter().map(|(_, m)| *m).collect();
                match pearson(&xs, &ys) {
                    Some(correlation) => Some(WeeklyTrend {
                        points,
                        correlation,
                    }),
                    None => {
                        trend_note =
                            Some("constant spoof distance across weeks; trend undefined".into());
                        None
                    }
                }
            }
        }
    };

    // regressor correlation matrix over (trigger counts..., spoof distance)
    let mut names: Vec<String> = labels.to_vec();
    names.push("SpoofDist".to_string());
    let columns: Vec<Vec<f64>> = (0..=k)
        .map(|c| {
            profiles
                .iter()
                .map(|p| {
                    if c < k {
                        p.trigger_counts.get(c).copied().unwrap_or(0) as f64
                    } else {
                        spoofs.get(&p.email_id).copied().unwrap_or(0.0)
                    }
                })
                .collect()
        })
        .collect();
    let values: Vec<Vec<f64>> = (0..names.len())
        .map(|i| {
            (0..names.len())
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        pearson(&columns[i], &columns[j]).unwrap_or(f64::NAN)
                    }
                })
                .collect()
        })
        .collect();

    ReportBundle {
        arrival_cdf,
        reporter_cdf,
        spoofed_from_cdf: empirical_cdf(&spoofed_counts),
        nonspoofed_from_cdf: empirical_cdf(&nonspoofed_counts),
        campaign_table,
        vuln_distribution,
        trigger_summary,
        weekly_spoof_trend,
        trend_note,
        regressor_correlation: CorrMatrix { names, values },
    }
}

fn write_cdf(path: &Path, cdf: &[CdfPoint]) -> std::io::Result<()> {
    let mut out = String::from("x,p\n");
    for pt in cdf {
        out.push_str(&format!("{},{}\n", pt.x, pt.p));
    }
    std::fs::write(path, out)
}

/// Emit the bundle as plot-ready CSV files under `dir`.
pub fn write_report_csvs(bundle: &ReportBundle, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_cdf(&dir.join("arrival_cdf.csv"), &bundle.arrival_cdf)?;
    write_cdf(&dir.join("reporter_cdf.csv"), &bundle.reporter_cdf)?;
    write_cdf(&dir.join("spoofed_from_cdf.csv"), &bundle.spoofed_from_cdf)?;
    write_cdf(
        &dir.join("nonspoofed_from_cdf.csv"),
        &bundle.nonspoofed_from_cdf,
    )?;

    let mut campaigns = String::from(
        "class,n,samples_min,samples_q1,samples_mean,samples_median,samples_q3,samples_max,samples_sd,duration_min,duration_q1,duration_mean,duration_median,duration_q3,duration_max,duration_sd\n",
    );
    for c in &bundle.campaign_table {
        campaigns.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.class,
            c.n,
            c.samples_min,
            c.samples_q1,
            c.samples_mean,
            c.samples_median,
            c.samples_q3,
            c.samples_max,
            c.samples_sd,
            c.duration_min,
            c.duration_q1,
            c.duration_mean,
            c.duration_median,
            c.duration_q3,
            c.duration_max,
            c.duration_sd
        ));
    }
    std::fs::write(dir.join("campaign_durations.csv"), campaigns)?;

    let mut vulns =
        String::from("label,emails_with_vuln,emails_with_vuln_clicked,total_triggers\n");
    for v in &bundle.vuln_distribution {
        vulns.push_str(&format!(
            "{},{},{},{}\n",
            v.label, v.emails_with_vuln, v.emails_with_vuln_clicked, v.total_triggers
        ));
    }
    std::fs::write(dir.join("vuln_distribution.csv"), vulns)?;

    let mut triggers = String::from("label,min,q025,median,q975,max\n");
    for t in &bundle.trigger_summary {
        triggers.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.label, t.min, t.q025, t.median, t.q975, t.max
        ));
    }
    std::fs::write(dir.join("trigger_summary.csv"), triggers)?;

    let mut trend = String::from("week,mean_spoof_dist\n");
    if let Some(t) = &bundle.weekly_spoof_trend {
        for (w, m) in &t.points {
            trend.push_str(&format!("{w},{m}\n"));
        }
        trend.push_str(&format!("# pearson_correlation,{}\n", t.correlation));
    } else if let Some(note) = &bundle.trend_note {
        trend.push_str(&format!("# {note}\n"));
    }
    std::fs::write(dir.join("weekly_spoof_trend.csv"), trend)?;

    let mut corr = String::from("regressor");
    for n in &bundle.regressor_correlation.names {
        corr.push(',');
        corr.push_str(n);
    }
    corr.push('\n');
    for (i, n) in bundle.regressor_correlation.names.iter().enumerate() {
        corr.push_str(n);
        for v in &bundle.regressor_correlation.values[i] {
            corr.push(',');
            if v.is_nan() {
                corr.push_str("NA");
            } else {
                corr.push_str(&format!("{v}"));
            }
        }
        corr.push('\n');
    }
    std::fs::write(dir.join("regressor_correlation.csv"), corr)?;
    Ok(())
}

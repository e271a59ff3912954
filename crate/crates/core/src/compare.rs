//! Side-by-side runs of several schemes over a set of seeds.
//!
//! Every (scheme, seed) pair runs on the placement drawn from that seed, so
//! all schemes see the same topology. Runs are independent and execute in
//! parallel; results are gathered and sorted before anything is written, so
//! the output does not depend on thread scheduling.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{Scheme, SimConfig};
use crate::engine::{run_state, SimState};
use crate::error::{Error, Result};
use crate::metrics::{fmt_f64, MetricsSeries};

pub const COMPARE_HEADER: &str = "scheme,seed,round,energy_nj,cum_energy_nj,dead_nodes";
pub const SUMMARY_HEADER: &str = "scheme,runs,mean_cum_energy_nj,mean_dead_nodes";

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub base: SimConfig,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
}

impl RunManifest {
    /// All three schemes over `seeds`.
    pub fn new(base: SimConfig, seeds: impl IntoIterator<Item = u64>) -> Self {
        Self {
            base,
            schemes: Scheme::ALL.to_vec(),
            seeds: seeds.into_iter().collect(),
        }
    }

    pub fn config_for(&self, scheme: Scheme, seed: u64) -> SimConfig {
        let mut c = self.base.clone();
        c.run.scheme = scheme;
        c.run.seed = seed;
        c
    }
}

#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub seed: u64,
    pub series: MetricsSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub runs: usize,
    pub mean_cum_energy: f64,
    pub mean_dead: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// Sorted by scheme, then seed.
    pub runs: Vec<SchemeRun>,
    /// One entry per scheme, in scheme order.
    pub summary: Vec<SchemeSummary>,
}

/// Runs every scheme on every seed of the manifest.
pub fn compare_schemes(manifest: &RunManifest) -> Result<Comparison> {
    let jobs: Vec<(Scheme, u64)> = manifest
        .schemes
        .iter()
        .flat_map(|&s| manifest.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let mut runs = jobs
        .into_par_iter()
        .map(|(scheme, seed)| {
            let mut state = SimState::new(manifest.config_for(scheme, seed))?;
            state.record_log = false;
            Ok(SchemeRun {
                scheme,
                seed,
                series: run_state(&mut state).series,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|r| (r.scheme, r.seed));
    let summary = summarize(&runs);
    Ok(Comparison { runs, summary })
}

fn summarize(runs: &[SchemeRun]) -> Vec<SchemeSummary> {
    let mut out: Vec<SchemeSummary> = Vec::new();
    for r in runs {
        let e = r.series.final_cum_energy();
        let d = f64::from(r.series.final_dead_nodes());
        match out.last_mut() {
            Some(s) if s.scheme == r.scheme => {
                s.runs += 1;
                s.mean_cum_energy += e;
                s.mean_dead += d;
            }
            _ => out.push(SchemeSummary {
                scheme: r.scheme,
                runs: 1,
                mean_cum_energy: e,
                mean_dead: d,
            }),
        }
    }
    for s in &mut out {
        s.mean_cum_energy /= s.runs as f64;
        s.mean_dead /= s.runs as f64;
    }
    out
}

/// `(cum_energy, dead)` pairs to check, ordered as the schemes should rank.
fn ordering_violations(values: &[(Scheme, f64, f64)]) -> Vec<String> {
    let mut out = Vec::new();
    for w in values.windows(2) {
        let ((a, ea, da), (b, eb, db)) = (w[0], w[1]);
        if ea > eb {
            out.push(format!("energy: {a} {} > {b} {}", fmt_f64(ea), fmt_f64(eb)));
        }
        if da > db {
            out.push(format!("dead nodes: {a} {da} > {b} {db}"));
        }
    }
    let p = values.iter().find(|v| v.0 == Scheme::Proposed);
    let all = values.iter().find(|v| v.0 == Scheme::AllActive);
    if let (Some(p), Some(all)) = (p, all) {
        if p.1 >= all.1 {
            out.push(format!(
                "energy: proposed {} not below all_active {}",
                fmt_f64(p.1),
                fmt_f64(all.1)
            ));
        }
    }
    out
}

impl Comparison {
    pub fn summary_for(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.summary.iter().find(|s| s.scheme == scheme)
    }

    /// Failures of proposed ≤ wound-only static ≤ all-active on the means,
    /// plus proposed strictly below all-active on energy. Schemes absent from
    /// the manifest are skipped.
    pub fn ordering_violations(&self) -> Vec<String> {
        let values: Vec<_> = self
            .summary
            .iter()
            .map(|s| (s.scheme, s.mean_cum_energy, s.mean_dead))
            .collect();
        ordering_violations(&values)
    }

    pub fn ordering_holds(&self) -> bool {
        self.ordering_violations().is_empty()
    }

    /// Seeds on which the ordering holds for that seed's runs alone.
    pub fn seeds_in_order(&self) -> Vec<u64> {
        let mut seeds: Vec<u64> = self.runs.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        seeds
            .into_iter()
            .filter(|&seed| {
                let values: Vec<_> = self
                    .runs
                    .iter()
                    .filter(|r| r.seed == seed)
                    .map(|r| {
                        (
                            r.scheme,
                            r.series.final_cum_energy(),
                            f64::from(r.series.final_dead_nodes()),
                        )
                    })
                    .collect();
                ordering_violations(&values).is_empty()
            })
            .collect()
    }

    /// Long format: one row per scheme, seed and round.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(COMPARE_HEADER);
        out.push('\n');
        for r in &self.runs {
            for m in &r.series.rounds {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.scheme,
                    r.seed,
                    m.round,
                    fmt_f64(m.energy_nj),
                    fmt_f64(m.cum_energy_nj),
                    m.dead_nodes
                );
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(SUMMARY_HEADER);
        out.push('\n');
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                s.scheme,
                s.runs,
                fmt_f64(s.mean_cum_energy),
                fmt_f64(s.mean_dead)
            );
        }
        out
    }

    /// Writes `compare.csv` and `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [
            ("compare.csv", self.to_csv()),
            ("summary.csv", self.summary_csv()),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: Scheme, e: f64, d: f64) -> (Scheme, f64, f64) {
        (s, e, d)
    }

    #[test]
    fn ordering_rules() {
        use Scheme::*;
        assert!(ordering_violations(&[
            v(Proposed, 1.0, 1.0),
            v(WoundOnlyStatic, 1.0, 1.0),
            v(AllActive, 2.0, 1.0)
        ])
        .is_empty());
        // Equal energy with all-active is not enough.
        assert_eq!(
            ordering_violations(&[v(Proposed, 2.0, 0.0), v(AllActive, 2.0, 0.0)]).len(),
            1
        );
        assert_eq!(
            ordering_violations(&[
                v(Proposed, 3.0, 5.0),
                v(WoundOnlyStatic, 2.0, 4.0),
                v(AllActive, 9.0, 9.0)
            ])
            .len(),
            2
        );
        assert!(ordering_violations(&[v(WoundOnlyStatic, 1.0, 1.0)]).is_empty());
    }

    #[test]
    fn means_per_scheme() {
        let mk = |scheme, seed, e: f64, d: u32| {
            let mut series = MetricsSeries::default();
            series.rounds.push(crate::metrics::RoundMetrics {
                cum_energy_nj: e,
                dead_nodes: d,
                ..Default::default()
            });
            SchemeRun {
                scheme,
                seed,
                series,
            }
        };
        let runs = vec![
            mk(Scheme::Proposed, 1, 10.0, 1),
            mk(Scheme::Proposed, 2, 20.0, 2),
            mk(Scheme::AllActive, 1, 40.0, 7),
        ];
        let s = summarize(&runs);
        assert_eq!(s.len(), 2);
        assert_eq!(
            (s[0].runs, s[0].mean_cum_energy, s[0].mean_dead),
            (2, 15.0, 1.5)
        );
        assert_eq!(
            (s[1].runs, s[1].mean_cum_energy, s[1].mean_dead),
            (1, 40.0, 7.0)
        );
    }
}

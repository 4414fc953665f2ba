use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use qumvn_core::FrequencyTable;

use crate::period::{factors_from_period, recover_period, PeriodPolicy};
use crate::plan::ShorInstance;

/// One distinct control-register reading.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportRow {
    pub value: u64,
    pub count: u64,
    pub period: Option<u64>,
    pub factors: Option<(u64, u64)>,
}

impl ReportRow {
    pub fn success(&self) -> bool {
        self.factors.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct ShorReport {
    pub instance: ShorInstance,
    pub policy: PeriodPolicy,
    pub rows: Vec<ReportRow>,
    pub samples: u64,
    pub successes: u64,
    pub elapsed: Duration,
    /// Factor pair from the most frequent successful reading.
    pub factors: Option<(u64, u64)>,
}

impl ShorReport {
    pub fn percent(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            100.0 * self.successes as f64 / self.samples as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("value,frequency,success\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.value, r.count, u8::from(r.success()));
        }
        s
    }

    /// `key: value` lines; wall time is left out so the text depends only on the seed.
    pub fn summary(&self) -> String {
        let inst = &self.instance;
        let pq = self.factors.map_or_else(|| "-".to_string(), |(p, q)| format!("{p},{q}"));
        format!(
            "qubits: {}\nN: {}\nseed a: {}\nsamples: {}\nsuccesses: {}\n% success: {:.2}\np,q: {}\n",
            inst.reported_total(),
            inst.n,
            inst.a,
            self.samples,
            self.successes,
            self.percent(),
            pq,
        )
    }

    pub fn time_line(&self) -> String {
        format!("time (sec): {:.3}", self.elapsed.as_secs_f64())
    }
}

/// Classifies every control-register reading in `freq`.
pub fn classify_and_report(freq: &FrequencyTable, inst: &ShorInstance, policy: PeriodPolicy) -> ShorReport {
    let counts: BTreeMap<u64, u64> = freq.register_counts(inst.upper_register());
    classify_counts(&counts, inst, policy)
}

pub fn classify_counts(counts: &BTreeMap<u64, u64>, inst: &ShorInstance, policy: PeriodPolicy) -> ShorReport {
    let rows: Vec<ReportRow> = counts
        .iter()
        .map(|(&value, &count)| {
            let period = recover_period(value, inst.upper, inst.n, inst.a, policy);
            let factors = period.and_then(|r| factors_from_period(r, inst.a, inst.n));
            ReportRow { value, count, period, factors }
        })
        .collect();
    let samples = rows.iter().map(|r| r.count).sum();
    let successes = rows.iter().filter(|r| r.success()).map(|r| r.count).sum();
    let factors = rows
        .iter()
        .filter(|r| r.success())
        .max_by_key(|r| (r.count, std::cmp::Reverse(r.value)))
        .and_then(|r| r.factors);
    ShorReport { instance: *inst, policy, rows, samples, successes, elapsed: Duration::ZERO, factors }
}

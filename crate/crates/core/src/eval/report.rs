//! Flat `key=value` evaluation reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    LinkPrediction,
    NodeClassification,
    Inductive,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::LinkPrediction => "link-prediction",
            Task::NodeClassification => "node-classification",
            Task::Inductive => "inductive",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "link-prediction" => Ok(Task::LinkPrediction),
            "node-classification" => Ok(Task::NodeClassification),
            "inductive" => Ok(Task::Inductive),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

/// One classification result at a given training fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F1Row {
    pub train_frac: f64,
    pub micro: f64,
    pub macro_: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub task: Task,
    pub seed: u64,
    pub auc: Option<f64>,
    pub ap: Option<f64>,
    pub f1: Vec<F1Row>,
    /// Settings the run was produced with, written as `config.<key>`.
    pub config: BTreeMap<String, String>,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} = {v} outside [0, 1]")))
    }
}

impl EvalReport {
    pub fn new(task: Task, seed: u64) -> Self {
        EvalReport { task, seed, auc: None, ap: None, f1: Vec::new(), config: BTreeMap::new() }
    }

    pub fn with_link_metrics(mut self, auc: f64, ap: f64) -> Self {
        self.auc = Some(auc);
        self.ap = Some(ap);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.auc.map_or(Ok(()), |v| check_unit("auc", v))?;
        self.ap.map_or(Ok(()), |v| check_unit("ap", v))?;
        for r in &self.f1 {
            check_unit("f1_micro", r.micro)?;
            check_unit("f1_macro", r.macro_)?;
        }
        Ok(())
    }

    /// Single-fraction runs use `f1_micro`/`f1_macro`; sweeps suffix the
    /// training fraction as `f1_micro@0.3`.
    pub fn to_kv(&self) -> String {
        let mut out = format!("task={}\nseed={}\n", self.task, self.seed);
        if let Some(v) = self.auc {
            out += &format!("auc={v}\n");
        }
        if let Some(v) = self.ap {
            out += &format!("ap={v}\n");
        }
        for r in &self.f1 {
            out += &format!("train_frac@{0}={0}\nf1_micro@{0}={1}\nf1_macro@{0}={2}\n", r.train_frac, r.micro, r.macro_);
        }
        for (k, v) in &self.config {
            out += &format!("config.{k}={v}\n");
        }
        out
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut task = None;
        let mut seed = None;
        let mut report = EvalReport::new(Task::LinkPrediction, 0);
        let mut f1: BTreeMap<String, F1Row> = BTreeMap::new();
        let num = |k: &str, v: &str| v.parse::<f64>().map_err(|_| Error::Config(format!("{k}: bad number {v:?}")));
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got {line:?}")))?;
            if let Some(c) = k.strip_prefix("config.") {
                report.config.insert(c.to_string(), v.to_string());
                continue;
            }
            if let Some((metric, frac)) = k.split_once('@') {
                let row = f1.entry(frac.to_string()).or_insert(F1Row { train_frac: num(k, frac)?, micro: 0.0, macro_: 0.0 });
                match metric {
                    "f1_micro" => row.micro = num(k, v)?,
                    "f1_macro" => row.macro_ = num(k, v)?,
                    "train_frac" => {}
                    _ => return Err(Error::Config(format!("unknown report key {k:?}"))),
                }
                continue;
            }
            match k {
                "task" => task = Some(v.parse()?),
                "seed" => seed = Some(v.parse().map_err(|_| Error::Config(format!("bad seed {v:?}")))?),
                "auc" => report.auc = Some(num(k, v)?),
                "ap" => report.ap = Some(num(k, v)?),
                _ => return Err(Error::Config(format!("unknown report key {k:?}"))),
            }
        }
        report.task = task.ok_or_else(|| Error::Config("report lacks `task`".into()))?;
        report.seed = seed.ok_or_else(|| Error::Config("report lacks `seed`".into()))?;
        report.f1 = f1.into_values().collect();
        report.f1.sort_by(|a, b| a.train_frac.total_cmp(&b.train_frac));
        report.validate()?;
        Ok(report)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv())
    }
}

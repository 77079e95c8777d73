//! Retained posterior draws and their on-disk bundle.
//!
//! A bundle is a directory holding `bundle.json` (names, labels, chain
//! configuration, diagnostics) and four CSV files: `hyper.csv`,
//! `latents.csv`, `pred_next.csv` and `pred_next2.csv`. Floats are written in
//! shortest round-trip form, so reading a bundle back gives bit-identical
//! draws.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::ChainConfig;
use crate::model::{CharacterLatents, Hyperparams};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
pub const BUNDLE_FILE: &str = "bundle.json";
/// `tau` is drawn by the same grid update as `lambda` and `beta`.
pub const TAU_UPDATE: &str = "grid";
const HYPER_FILE: &str = "hyper.csv";
const LATENTS_FILE: &str = "latents.csv";
const PRED_NEXT_FILE: &str = "pred_next.csv";
const PRED_NEXT2_FILE: &str = "pred_next2.csv";

/// Which predicted period: `d + 1` or `d + 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Next,
    Following,
}

impl Horizon {
    /// Periods past the last observed one.
    pub fn offset(self) -> usize {
        match self {
            Horizon::Next => 1,
            Horizon::Following => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    entity_names: Vec<String>,
    period_labels: Vec<String>,
    config: ChainConfig,
    hyper_draws: Vec<[f64; 6]>,
    /// Row-major: draw `k`, entity `i` at `k * n_entities + i`.
    latent_draws: Vec<CharacterLatents>,
    pred_next: Vec<u32>,
    pred_next2: Vec<u32>,
    diagnostics: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleHeader {
    format_version: u32,
    entity_names: Vec<String>,
    period_labels: Vec<String>,
    n_samples: usize,
    config: ChainConfig,
    /// How `tau` is redrawn; recorded because other choices are possible.
    tau_update: String,
    diagnostics: Vec<String>,
}

impl PosteriorSamples {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        entity_names: Vec<String>,
        period_labels: Vec<String>,
        config: ChainConfig,
        hyper_draws: Vec<[f64; 6]>,
        latent_draws: Vec<CharacterLatents>,
        pred_next: Vec<u32>,
        pred_next2: Vec<u32>,
        diagnostics: Vec<String>,
    ) -> Result<Self> {
        let n = hyper_draws.len();
        let m = entity_names.len();
        if n == 0 {
            return Err(Error::Shape("no retained draws".into()));
        }
        for (what, len) in [
            ("latent", latent_draws.len()),
            ("pred_next", pred_next.len()),
            ("pred_next2", pred_next2.len()),
        ] {
            if len != n * m {
                return Err(Error::Shape(format!(
                    "{what} draws: expected {n} x {m} = {}, got {len}",
                    n * m
                )));
            }
        }
        Ok(Self {
            entity_names,
            period_labels,
            config,
            hyper_draws,
            latent_draws,
            pred_next,
            pred_next2,
            diagnostics,
        })
    }

    /// Number of retained draws.
    pub fn n(&self) -> usize {
        self.hyper_draws.len()
    }

    pub fn n_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entity_names
    }

    pub fn entity_index(&self, name: &str) -> Option<usize> {
        self.entity_names.iter().position(|n| n == name)
    }

    pub fn period_labels(&self) -> &[String] {
        &self.period_labels
    }

    /// Number of observed periods the chain was fit to.
    pub fn observed_periods(&self) -> usize {
        self.period_labels.len()
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    /// Grid cells that barely moved during the run.
    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    pub fn hyper_draws(&self) -> &[[f64; 6]] {
        &self.hyper_draws
    }

    pub fn hyper(&self, draw: usize) -> Hyperparams {
        let v = self.hyper_draws[draw];
        Hyperparams {
            mu_lambda: v[0],
            sigma_lambda: v[1],
            mu_tau: v[2],
            sigma_tau: v[3],
            mu_beta: v[4],
            sigma_beta: v[5],
        }
    }

    /// All draws of hyperparameter `index` (in [`Hyperparams::NAMES`] order).
    pub fn hyper_column(&self, index: usize) -> Vec<f64> {
        self.hyper_draws.iter().map(|h| h[index]).collect()
    }

    pub fn latents(&self, draw: usize, entity: usize) -> CharacterLatents {
        self.latent_draws[draw * self.n_entities() + entity]
    }

    fn pred_slice(&self, horizon: Horizon) -> &[u32] {
        match horizon {
            Horizon::Next => &self.pred_next,
            Horizon::Following => &self.pred_next2,
        }
    }

    pub fn prediction(&self, horizon: Horizon, draw: usize, entity: usize) -> u32 {
        self.pred_slice(horizon)[draw * self.n_entities() + entity]
    }

    /// Predictive draws for one entity, in draw order.
    pub fn predictions(&self, horizon: Horizon, entity: usize) -> Vec<u32> {
        let m = self.n_entities();
        self.pred_slice(horizon)
            .iter()
            .skip(entity)
            .step_by(m)
            .copied()
            .collect()
    }

    /// Per-draw sum of the predictions over all entities.
    pub fn prediction_totals(&self, horizon: Horizon) -> Vec<u64> {
        self.pred_slice(horizon)
            .chunks(self.n_entities())
            .map(|c| c.iter().map(|&x| u64::from(x)).sum())
            .collect()
    }

    /// Write the bundle into `dir`, creating it if needed. Returns the file
    /// names written.
    pub fn write_bundle(&self, dir: &Path) -> Result<Vec<String>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let header = BundleHeader {
            format_version: BUNDLE_FORMAT_VERSION,
            entity_names: self.entity_names.clone(),
            period_labels: self.period_labels.clone(),
            n_samples: self.n(),
            config: self.config,
            tau_update: TAU_UPDATE.to_string(),
            diagnostics: self.diagnostics.clone(),
        };
        let json = serde_json::to_string_pretty(&header)
            .map_err(|e| Error::Format(format!("bundle header: {e}")))?;

        let mut hyper = format!("sample,{}\n", Hyperparams::NAMES.join(","));
        for (k, h) in self.hyper_draws.iter().enumerate() {
            let _ = write!(hyper, "{}", k + 1);
            for v in h {
                let _ = write!(hyper, ",{v}");
            }
            hyper.push('\n');
        }

        let mut latents = String::from("sample,entity,lambda,tau,beta\n");
        let m = self.n_entities();
        for (idx, l) in self.latent_draws.iter().enumerate() {
            let _ = writeln!(
                latents,
                "{},{},{},{},{}",
                idx / m + 1,
                idx % m + 1,
                l.lambda,
                l.tau,
                l.beta
            );
        }

        let files = [
            (BUNDLE_FILE, json + "\n"),
            (HYPER_FILE, hyper),
            (LATENTS_FILE, latents),
            (PRED_NEXT_FILE, self.prediction_csv(Horizon::Next)),
            (PRED_NEXT2_FILE, self.prediction_csv(Horizon::Following)),
        ];
        let mut written = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(name.to_string());
        }
        Ok(written)
    }

    fn prediction_csv(&self, horizon: Horizon) -> String {
        let mut out = String::from("sample");
        for name in &self.entity_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (k, chunk) in self.pred_slice(horizon).chunks(self.n_entities()).enumerate() {
            let _ = write!(out, "{}", k + 1);
            for x in chunk {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn read_bundle(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        };
        let header: BundleHeader = serde_json::from_str(&read(BUNDLE_FILE)?)
            .map_err(|e| Error::Format(format!("{BUNDLE_FILE}: {e}")))?;
        if header.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported bundle version {}",
                header.format_version
            )));
        }
        let n = header.n_samples;
        let m = header.entity_names.len();

        let hyper_rows = parse_table::<f64>(&read(HYPER_FILE)?, HYPER_FILE, 7)?;
        check_rows(HYPER_FILE, hyper_rows.len(), n)?;
        let hyper_draws = hyper_rows
            .iter()
            .map(|r| [r[1], r[2], r[3], r[4], r[5], r[6]])
            .collect();

        let latent_rows = parse_table::<f64>(&read(LATENTS_FILE)?, LATENTS_FILE, 5)?;
        check_rows(LATENTS_FILE, latent_rows.len(), n * m)?;
        let latent_draws = latent_rows
            .iter()
            .map(|r| CharacterLatents::new(r[2], r[3], r[4]))
            .collect();

        let mut preds = Vec::new();
        for name in [PRED_NEXT_FILE, PRED_NEXT2_FILE] {
            let rows = parse_table::<u32>(&read(name)?, name, m + 1)?;
            check_rows(name, rows.len(), n)?;
            preds.push(rows.into_iter().flat_map(|r| r.into_iter().skip(1)).collect::<Vec<_>>());
        }
        let pred_next2 = preds.pop().unwrap_or_default();
        let pred_next = preds.pop().unwrap_or_default();

        Self::from_parts(
            header.entity_names,
            header.period_labels,
            header.config,
            hyper_draws,
            latent_draws,
            pred_next,
            pred_next2,
            header.diagnostics,
        )
    }
}

fn check_rows(file: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Format(format!("{file}: expected {expected} rows, found {got}")))
    }
}

/// Parse a headed CSV whose cells all have type `T`.
fn parse_table<T: std::str::FromStr>(text: &str, file: &str, width: usize) -> Result<Vec<Vec<T>>> {
    let mut lines = text.lines();
    if lines.next().is_none() {
        return Err(Error::Format(format!("{file}: empty file")));
    }
    let mut rows = Vec::new();
    for (r, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(Error::Format(format!(
                "{file}: line {} has {} fields, expected {width}",
                r + 2,
                cells.len()
            )));
        }
        let row = cells
            .iter()
            .map(|c| {
                c.parse::<T>()
                    .map_err(|_| Error::Format(format!("{file}: line {}: bad value {c:?}", r + 2)))
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

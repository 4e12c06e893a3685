use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{Experiment, ExperimentConfig, StabilityFamily};
use crate::cocycle::{
    conormal_sweep, cotangent_expansion, expansion_lambda, furstenberg_integral, lyapunov_spectrum, tangent_expansion,
    Bundle, CotangentFrame,
};
use crate::error::{Error, Result};
use crate::measure::{dd_distance, DrivingMeasure};
use crate::models::{build_model, Model, TorusPoint};
use crate::spectral::{
    build_galerkin, essential_radius_estimate, lasota_yorke_fit, operator_spectrum, pierrehumbert_phase_sweep,
    stability_sweep,
};
use crate::stats::{
    berry_esseen_scaling, clt_experiment, correlation_series, green_kubo_variance, mixing_rate_fit, triple_correlation,
    StatsBudget,
};

/// Version of the `report.json` layout.
pub const REPORT_FORMAT: u32 = 1;

/// Flat rows destined for `series.csv` or `table.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flat {
    pub file: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Flat {
    fn series(header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Flat {
            file: "series.csv",
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    fn table(header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Flat {
            file: "table.csv",
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    /// CSV text with `config_hash` and `seed` columns prepended to every row.
    pub fn to_csv(&self, config_hash: &str, seed: u64) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["config_hash".to_string(), "seed".to_string()];
        header.extend(self.header.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut row = vec![config_hash.to_string(), seed.to_string()];
            row.extend(r.iter().cloned());
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("csv: {e}"))
}

/// Typed results of one experiment, before persistence.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub results: Value,
    pub flat: Flat,
    pub warnings: Vec<String>,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Internal(format!("serialising results: {e}")))
}

fn f(x: f64) -> String {
    x.to_string()
}

/// SHA-256 of the canonical JSON form of the config.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canon = serde_json::to_string(cfg).expect("configs serialise");
    Sha256::digest(canon.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn measure_of(cfg: &ExperimentConfig, model: &Model) -> DrivingMeasure {
    cfg.measure.clone().unwrap_or_else(|| model.template())
}

fn origin(model: &Model, base: &Option<Vec<f64>>) -> TorusPoint {
    TorusPoint::new(base.clone().unwrap_or_else(|| vec![0.0; model.dim()]))
}

/// Run the experiment described by `cfg` on the current rayon pool.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = build_model(&cfg.model)?;
    let mu = measure_of(cfg, &model);
    model.validate_measure(&mu)?;
    let mut budget = cfg.budget.clone();
    budget.seed = cfg.seed;
    let seed = cfg.seed;
    let mut warnings = Vec::new();
    let (results, flat) = match &cfg.experiment {
        Experiment::Expansion {
            n,
            bundle,
            base,
            direction,
            search,
        } => {
            let est = match direction {
                Some(v) => {
                    let x = origin(&model, base);
                    match bundle {
                        Bundle::Cotangent => {
                            cotangent_expansion(&model, &mu, *n, &CotangentFrame::new(x, v.clone())?, &budget)?
                        }
                        Bundle::Tangent => tangent_expansion(&model, &mu, *n, &x, v, &budget)?,
                    }
                }
                None => {
                    let mut plan = search.clone().unwrap_or_default();
                    plan.bundle = *bundle;
                    expansion_lambda(&model, &mu, *n, &plan, &budget)?
                }
            };
            warnings.extend(est.warnings.iter().cloned());
            let flat = Flat::table(
                &["quantity", "value"],
                vec![
                    vec!["value".into(), f(est.value)],
                    vec!["stderr".into(), f(est.stderr)],
                    vec!["samples".into(), est.samples.to_string()],
                    vec!["steps".into(), est.steps.to_string()],
                ],
            );
            (to_value(&est)?, flat)
        }
        Experiment::Lyapunov {
            t,
            x0,
            period,
            furstenberg,
        } => {
            let rep = lyapunov_spectrum(&model, &mu, *t, &origin(&model, x0), seed, *period)?;
            let furst = match furstenberg {
                Some(fs) => Some(furstenberg_integral(
                    &model,
                    &mu,
                    fs.burn_in,
                    fs.samples,
                    fs.seed.unwrap_or(seed.wrapping_add(1)),
                    None,
                )?),
                None => None,
            };
            let rows = rep
                .exponents
                .iter()
                .enumerate()
                .map(|(i, l)| vec![i.to_string(), f(*l), f(rep.stderr[i])])
                .collect();
            (
                json!({ "spectrum": to_value(&rep)?, "furstenberg": to_value(&furst)? }),
                Flat::table(&["index", "exponent", "stderr"], rows),
            )
        }
        Experiment::Conormal { pairs, word_length } => {
            let sw = conormal_sweep(&model, &mu, *pairs, *word_length, seed)?;
            let flat = Flat::table(
                &["quantity", "value"],
                vec![
                    vec!["max_log_discrepancy".into(), f(sw.max_log_discrepancy)],
                    vec!["max_abs_log_growth".into(), f(sw.max_abs_log_growth)],
                    vec!["pairs".into(), sw.pairs.to_string()],
                ],
            );
            (to_value(&sw)?, flat)
        }
        Experiment::Spectrum { k, s } => {
            let op = build_galerkin(&model, &mu, *k, *s)?;
            let rep = operator_spectrum(&op, *s)?;
            if rep.max_truncation_loss > 1e-3 {
                warnings.push(format!("Galerkin truncation loss {:.3e}", rep.max_truncation_loss));
            }
            let rows = rep
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(i, z)| vec![i.to_string(), f(z.re), f(z.im), f(z.norm())])
                .collect();
            (to_value(&rep)?, Flat::series(&["rank", "re", "im", "modulus"], rows))
        }
        Experiment::EssentialRadius {
            s_list,
            r,
            n_max,
            probes,
        } => {
            let ests = s_list
                .iter()
                .map(|&s| essential_radius_estimate(&model, &mu, s, *r, *n_max, probes))
                .collect::<Result<Vec<_>>>()?;
            let mut rows = Vec::new();
            for e in &ests {
                for (i, rho) in e.rho_max.iter().enumerate() {
                    rows.push(vec![f(e.s), (i + 1).to_string(), f(*rho), f(e.covector_moment_max[i])]);
                }
            }
            (
                json!({ "estimates": to_value(&ests)? }),
                Flat::series(&["s", "n", "rho_max", "covector_moment_max"], rows),
            )
        }
        Experiment::LasotaYorke {
            s,
            s_bar,
            r,
            n_max,
            n_list,
            probes,
        } => {
            let e = essential_radius_estimate(&model, &mu, *s, *r, *n_max, probes)?;
            let modes = probes.modes(model.dim(), *r);
            let ly = lasota_yorke_fit(&model, &mu, *s, *s_bar, n_list, &modes, e.eta_hat)?;
            if ly.gapless {
                warnings.push("eta_hat >= 1: no strong-norm contraction, flagged gapless".into());
            }
            let rows = ly.table.iter().map(|(n, c)| vec![n.to_string(), f(*c)]).collect();
            (
                json!({ "essential": to_value(&e)?, "lasota_yorke": to_value(&ly)? }),
                Flat::table(&["n", "c_n"], rows),
            )
        }
        Experiment::Stability { k, s, family, grid } => {
            let sw = match family {
                StabilityFamily::PhaseDiscretisation { qs } => {
                    let Model::Pierrehumbert(p) = &model else {
                        return Err(Error::UnsupportedModel(
                            "phase-discretisation sweeps need the Pierrehumbert model".into(),
                        ));
                    };
                    pierrehumbert_phase_sweep(p.tau, qs, *k, *s)?
                }
                StabilityFamily::Measures { members } => {
                    let fam: Vec<(String, f64, DrivingMeasure)> = members
                        .iter()
                        .map(|m| (m.label.clone(), m.parameter, m.measure.clone()))
                        .collect();
                    stability_sweep(&model, &mu, &fam, *k, *s, grid.as_ref())?
                }
            };
            let rows = sw
                .members
                .iter()
                .map(|m| {
                    vec![
                        m.label.clone(),
                        f(m.parameter),
                        f(m.subleading.re),
                        f(m.subleading.im),
                        f(m.deviation),
                        m.dd_to_base.map(f).unwrap_or_default(),
                    ]
                })
                .collect();
            (
                to_value(&sw)?,
                Flat::table(&["label", "parameter", "re", "im", "deviation", "dd_to_base"], rows),
            )
        }
        Experiment::Correlation {
            phi,
            psi,
            n_max,
            method,
            samples,
            k,
        } => {
            let phi = phi.build()?;
            let psi = psi
                .as_ref()
                .map(|p| p.build())
                .transpose()?
                .unwrap_or_else(|| phi.clone());
            let b = StatsBudget {
                samples: *samples,
                seed,
                k: *k,
            };
            let series = correlation_series(&model, &mu, &phi, &psi, *n_max, *method, &b)?;
            let fit = if series.values.len() >= 6 {
                Some(mixing_rate_fit(&series)?)
            } else {
                None
            };
            warnings.extend(series.warnings.iter().cloned());
            let rows = series
                .values
                .iter()
                .enumerate()
                .map(|(n, v)| {
                    let se = series.stderr.as_ref().map(|s| f(s[n])).unwrap_or_default();
                    vec![n.to_string(), f(v.re), f(v.im), se]
                })
                .collect();
            (
                json!({ "series": to_value(&series)?, "fit": to_value(&fit)? }),
                Flat::series(&["n", "re", "im", "stderr"], rows),
            )
        }
        Experiment::MultipleMixing {
            phi0,
            phi1,
            phi2,
            n1,
            n2,
            method,
            samples,
            k,
        } => {
            let (a, b, c) = (phi0.build()?, phi1.build()?, phi2.build()?);
            let budget = StatsBudget {
                samples: *samples,
                seed,
                k: *k,
            };
            let t = triple_correlation(&model, &mu, [&a, &b, &c], *n1, *n2, *method, &budget)?;
            warnings.extend(t.warnings.iter().cloned());
            let flat = Flat::table(
                &["n1", "n2", "re", "im", "stderr"],
                vec![vec![
                    n1.to_string(),
                    n2.to_string(),
                    f(t.value.re),
                    f(t.value.im),
                    t.stderr.map(f).unwrap_or_default(),
                ]],
            );
            (to_value(&t)?, flat)
        }
        Experiment::GreenKubo { phi, green_kubo } => {
            let g = green_kubo_variance(&model, &mu, &phi.build()?, green_kubo)?;
            warnings.extend(g.diagnostic.iter().cloned());
            let flat = Flat::table(
                &["quantity", "value"],
                vec![
                    vec!["sigma2".into(), g.sigma2.map(f).unwrap_or_default()],
                    vec!["partial_sum".into(), f(g.partial_sum)],
                    vec!["tail_bound".into(), f(g.tail_bound)],
                ],
            );
            (to_value(&g)?, flat)
        }
        Experiment::Clt {
            phi,
            n,
            trials,
            green_kubo,
        } => {
            let r = clt_experiment(&model, &mu, &phi.build()?, *n, *trials, seed, green_kubo)?;
            warnings.extend(r.warnings.iter().cloned());
            let flat = Flat::table(
                &["n", "trials", "sigma2_gk", "sigma2_mc", "ks_distance"],
                vec![vec![
                    r.n.to_string(),
                    r.trials.to_string(),
                    r.sigma2_gk.map(f).unwrap_or_default(),
                    f(r.sigma2_mc),
                    f(r.ks_distance),
                ]],
            );
            (to_value(&r)?, flat)
        }
        Experiment::BerryEsseen {
            phi,
            horizons,
            trials,
            green_kubo,
        } => {
            let b = berry_esseen_scaling(&model, &mu, &phi.build()?, horizons, *trials, seed, green_kubo)?;
            warnings.extend(b.warnings.iter().cloned());
            let rows = b
                .rows
                .iter()
                .map(|r| vec![r.n.to_string(), f(r.ks_distance), f(r.sqrt_n_ks)])
                .collect();
            (to_value(&b)?, Flat::table(&["n", "ks_distance", "sqrt_n_ks"], rows))
        }
        Experiment::DdDistance { other, grid } => {
            let d = dd_distance(&model, &mu, other, grid)?;
            (
                json!({ "dd": d, "points_per_axis": grid.points_per_axis }),
                Flat::table(&["quantity", "value"], vec![vec!["dd".into(), f(d)]]),
            )
        }
    };
    Ok(Outcome {
        results,
        flat,
        warnings,
    })
}

/// A persisted run.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub report: Value,
}

/// Directory name `<stem>-<UTC timestamp>-<hash8>`.
pub fn run_dir_name(stem: &str, config_hash: &str) -> String {
    let ts = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    format!("{stem}-{ts}-{}", &config_hash[..8])
}

/// Execute and write `report.json` plus the CSV into `dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, threads: Option<usize>) -> Result<RunRecord> {
    let started = Instant::now();
    let outcome = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(|| execute(cfg))?,
        None => execute(cfg)?,
    };
    let hash = config_hash(cfg);
    std::fs::create_dir_all(dir)?;
    let report = json!({
        "config": to_value(cfg)?,
        "experiment": cfg.experiment.name(),
        "results": outcome.results,
        "provenance": {
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "report_format": REPORT_FORMAT,
            "config_hash": hash,
            "seed": cfg.seed,
            "threads": threads.unwrap_or_else(rayon::current_num_threads),
            "wall_time_s": started.elapsed().as_secs_f64(),
        },
        "warnings": outcome.warnings,
    });
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(dir.join("report.json"), text + "\n")?;
    std::fs::write(dir.join(outcome.flat.file), outcome.flat.to_csv(&hash, cfg.seed)?)?;
    Ok(RunRecord {
        dir: dir.to_path_buf(),
        report,
    })
}

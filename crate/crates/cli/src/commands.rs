use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rlb_core::approx::{self, ApproxConfig, NnModel};
use rlb_core::config::KvConfig;
use rlb_core::ctr_model::auc_scores;
use rlb_core::dp::{diff_table, solve_value_table_with, SolveOptions, ValueTable};
use rlb_core::evaluator::{
    episode_budget, read_report, run_eval, score_records, summarize, write_report, write_summary, EvalConfig,
    ReportRow, DEFAULT_C0_GRID,
};
use rlb_core::landscape::{DEFAULT_DELTA_MAX, DEFAULT_LAPLACE};
use rlb_core::log_data::{read_log_file, write_log, ParsedLog};
use rlb_core::strategies::{default_lin_grid, tune_lin_b0, StrategyKind, StrategyParams};
use rlb_core::synthetic::SyntheticCampaign;
use rlb_core::{campaign_stats, CampaignStats, CtrHyper, CtrModel, LandscapeModel, LogSchema, Optimizer};

use crate::settings::{Ratio, Settings};
use crate::{
    EvaluateArgs, FitLandscapeArgs, GenerateArgs, PrepareArgs, ReportArgs, SolveDpArgs, TrainCtrArgs, TrainNnArgs,
};

const CTR_FILE: &str = "ctr.txt";
const STATS_FILE: &str = "stats.cfg";
const LANDSCAPE_FILE: &str = "landscape.txt";
const VALUE_FILE: &str = "value.bin";
const NN_FILE: &str = "nn.txt";

fn read_log(path: &Path, delta_max: u32) -> Result<ParsedLog> {
    if !path.is_file() {
        bail!("input log not found: {}", path.display());
    }
    let schema = LogSchema {
        delta_max: Some(delta_max),
        feature_dim: None,
    };
    let parsed = read_log_file(path, &schema).with_context(|| format!("reading {}", path.display()))?;
    if parsed.records.is_empty() {
        bail!("{} holds no valid records", path.display());
    }
    Ok(parsed)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn model_dir(s: &Settings, flag: Option<PathBuf>) -> Result<PathBuf> {
    let dir = s.path(flag, "model_dir")?;
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn need(dir: &Path, file: &str, made_by: &str) -> Result<PathBuf> {
    let p = dir.join(file);
    if !p.is_file() {
        bail!("{} not found; run `rlb {made_by}` first", p.display());
    }
    Ok(p)
}

fn load_stats(dir: &Path) -> Result<(CampaignStats, usize)> {
    let kv = KvConfig::load(&need(dir, STATS_FILE, "train-ctr")?)?;
    let dim = kv.get("feature_dim")?.unwrap_or(0);
    Ok((CampaignStats::from_config(&kv)?, dim))
}

fn solve_opts(s: &Settings, flag: Option<usize>) -> Result<SolveOptions> {
    let mb = s.or(flag, "max_memory_mb", 4096usize)?;
    Ok(SolveOptions { max_bytes: mb << 20 })
}

pub fn generate(s: &Settings, a: GenerateArgs) -> Result<()> {
    let out = s.path(a.out_dir, "out_dir")?;
    std::fs::create_dir_all(&out)?;
    let train_n = s.or(a.train_records, "train_records", 100_000usize)?;
    let test_n = s.or(a.test_records, "test_records", 50_000usize)?;
    let gen = SyntheticCampaign {
        seed: s.or(a.seed, "seed", 7u64)?,
        ..SyntheticCampaign::default()
    };
    let parts = gen.generate_split(&[train_n, test_n]);
    for (name, recs) in ["train.log", "test.log"].iter().zip(&parts) {
        let mut w = create(&out.join(name))?;
        write_log(&mut w, recs)?;
        w.flush()?;
    }
    println!("wrote {train_n} training and {test_n} test records to {}", out.display());
    Ok(())
}

pub fn prepare(s: &Settings, a: PrepareArgs) -> Result<()> {
    let out = s.path(a.out_dir, "out_dir")?;
    let dm = s.or(a.delta_max, "delta_max", DEFAULT_DELTA_MAX)?;
    let mut inputs = vec![("train", s.path(a.train, "train")?)];
    if let Some(t) = s.opt(a.test, "test")? {
        inputs.push(("test", t));
    }
    std::fs::create_dir_all(&out)?;
    for (name, path) in inputs {
        let parsed = read_log(&path, dm)?;
        let dest = out.join(format!("{name}.log"));
        let mut w = create(&dest)?;
        write_log(&mut w, &parsed.records)?;
        w.flush()?;
        let clicks = parsed.records.iter().filter(|r| r.click).count();
        println!(
            "{name}: {} records, {clicks} clicks, {} malformed lines skipped, feature_dim {} -> {}",
            parsed.records.len(),
            parsed.skipped,
            parsed.feature_dim(),
            dest.display()
        );
    }
    Ok(())
}

pub fn train_ctr(s: &Settings, a: TrainCtrArgs) -> Result<()> {
    let dir = model_dir(s, a.model_dir)?;
    let dm = s.or(a.delta_max, "delta_max", DEFAULT_DELTA_MAX)?;
    let train = read_log(&s.path(a.train, "train")?, dm)?;
    let test = match s.opt(a.test, "test")? {
        Some(p) => Some(read_log(&p, dm)?),
        None => None,
    };
    let dim = train.feature_dim().max(test.as_ref().map_or(0, ParsedLog::feature_dim));
    let mut hyper = CtrHyper::default();
    if let Some(o) = s.opt::<Optimizer>(a.optimizer.map(|o| o.parse()).transpose()?, "optimizer")? {
        hyper.optimizer = o;
    }
    hyper.learning_rate = s.or(a.learning_rate, "learning_rate", hyper.learning_rate)?;
    hyper.l2 = s.or(a.l2, "l2", hyper.l2)?;
    hyper.epochs = s.or(a.epochs, "epochs", hyper.epochs)?;
    hyper.seed = s.or(a.seed, "seed", hyper.seed)?;
    hyper.negative_sampling = s.opt(a.negative_sampling, "negative_sampling")?;

    let model = rlb_core::train_ctr(&train.records, dim, &hyper)?;
    let stats = campaign_stats(&train.records, &model)?;
    model.save(&dir.join(CTR_FILE))?;
    let mut kv = stats.to_config();
    kv.set("feature_dim", dim);
    std::fs::write(dir.join(STATS_FILE), kv.to_text())?;

    let auc_of = |log: &ParsedLog| {
        let scores: Vec<f64> = log.records.iter().map(|r| model.predict_known(&r.features)).collect();
        let labels: Vec<bool> = log.records.iter().map(|r| r.click).collect();
        auc_scores(&scores, &labels).ok()
    };
    let fmt = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.4}"));
    print!("train_auc={}", fmt(auc_of(&train)));
    if let Some(t) = &test {
        print!(" test_auc={}", fmt(auc_of(t)));
    }
    println!(
        " theta_avg={:.6} cpm_train={:.3} records={} clicks={}",
        stats.theta_avg, stats.cpm_train, stats.n_records, stats.n_clicks
    );
    Ok(())
}

pub fn fit_landscape(s: &Settings, a: FitLandscapeArgs) -> Result<()> {
    let dir = model_dir(s, a.model_dir)?;
    let dm = s.or(a.delta_max, "delta_max", DEFAULT_DELTA_MAX)?;
    let laplace = s.or(a.laplace, "laplace", DEFAULT_LAPLACE)?;
    let train = read_log(&s.path(a.train, "train")?, dm)?;
    let l = rlb_core::fit_landscape(train.records.iter().map(|r| r.market_price), dm, laplace)?;
    l.save(&dir.join(LANDSCAPE_FILE))?;
    let mean: f64 = l.pdf().iter().enumerate().map(|(d, p)| d as f64 * p).sum();
    println!("landscape over 0..={dm} from {} prices, mean {mean:.2}", train.records.len());
    Ok(())
}

pub fn solve_dp(s: &Settings, a: SolveDpArgs) -> Result<()> {
    let dir = model_dir(s, a.model_dir)?;
    let (stats, _) = load_stats(&dir)?;
    let l = LandscapeModel::load(&need(&dir, LANDSCAPE_FILE, "fit-landscape")?)?;
    let t = s.or(a.episode_len, "episode_len", 1000usize)?;
    let budget = match s.opt(a.budget, "budget")? {
        Some(b) => b,
        None => {
            let c0: Ratio = s.or(a.c0.map(|c| c.parse()).transpose().map_err(anyhow::Error::msg)?, "c0", Ratio(0.5))?;
            episode_budget(stats.cpm_train, t, c0.0)
        }
    };
    let v = solve_value_table_with(&l, stats.theta_avg, t, budget, &solve_opts(s, a.max_memory_mb)?)?;
    v.save(&dir.join(VALUE_FILE))?;
    println!("value table T={t} B={budget} -> {}", dir.join(VALUE_FILE).display());
    if a.text || s.or(None, "text", false)? {
        let p = dir.join("value.txt");
        let mut w = create(&p)?;
        v.write_text(&mut w)?;
        w.flush()?;
        println!("text export -> {}", p.display());
    }
    if a.diff || s.or(None, "diff", false)? {
        let p = dir.join("diff.bin");
        diff_table(&v).save(&p)?;
        println!("differential table -> {}", p.display());
    }
    Ok(())
}

pub fn train_nn(s: &Settings, a: TrainNnArgs) -> Result<()> {
    let dir = model_dir(s, a.model_dir)?;
    let (stats, _) = load_stats(&dir)?;
    let l = LandscapeModel::load(&need(&dir, LANDSCAPE_FILE, "fit-landscape")?)?;
    let t0 = s.or(a.t0, "t0", 1000usize)?;
    let b0 = s.or(a.b0, "b0", episode_budget(stats.cpm_train, t0, 0.5))?;
    let mut cfg = ApproxConfig::new(t0, b0);
    cfg.epochs = s.or(a.epochs, "epochs", cfg.epochs)?;
    cfg.learning_rate = s.or(a.learning_rate, "learning_rate", cfg.learning_rate)?;
    cfg.batch_size = s.or(a.batch_size, "batch_size", cfg.batch_size)?;
    cfg.train_cells = s.or(a.train_cells, "train_cells", cfg.train_cells)?;
    cfg.seed = s.or(a.seed, "seed", cfg.seed)?;
    let v = solve_value_table_with(&l, stats.theta_avg, t0, b0 + 1, &solve_opts(s, a.max_memory_mb)?)?;
    let d = diff_table(&v);
    drop(v);
    let fit = approx::train_nn(&d, &cfg)?;
    fit.model.save(&dir.join(NN_FILE))?;
    println!(
        "network on T0={t0} B0={b0}: rmse={:.4e} rmse/theta_avg={:.4e} final_loss={:.4e} -> {}",
        fit.rmse,
        fit.rmse / stats.theta_avg,
        fit.epoch_loss.last().copied().unwrap_or(f64::NAN),
        dir.join(NN_FILE).display()
    );
    Ok(())
}

/// Reuse value.bin when it covers (t, b), else solve.
fn value_table(dir: &Path, l: &LandscapeModel, theta_avg: f64, t: usize, b: u64, opts: &SolveOptions) -> Result<ValueTable> {
    let p = dir.join(VALUE_FILE);
    if p.is_file() {
        let v = ValueTable::load(&p)?;
        if v.t_max() >= t && v.b_max() >= b {
            return Ok(v);
        }
    }
    Ok(solve_value_table_with(l, theta_avg, t, b, opts)?)
}

pub fn evaluate(s: &Settings, a: EvaluateArgs) -> Result<()> {
    let dir = s.path(a.model_dir, "model_dir")?;
    let (stats, _) = load_stats(&dir)?;
    let ctr = CtrModel::load(&need(&dir, CTR_FILE, "train-ctr")?)?;
    let l = LandscapeModel::load(&need(&dir, LANDSCAPE_FILE, "fit-landscape")?)?;
    let dm = l.delta_max();
    let t = s.or(a.episode_len, "episode_len", 1000usize)?;
    let c0s: Vec<f64> = match s.list::<Ratio>(a.c0, "c0")? {
        Some(v) => v.into_iter().map(|r| r.0).collect(),
        None => DEFAULT_C0_GRID.to_vec(),
    };
    let kinds: Vec<StrategyKind> = match s.list(a.strategies, "strategies")? {
        Some(v) => v,
        None => StrategyKind::ALL.to_vec(),
    };
    let campaign = match s.opt(a.campaign, "campaign")? {
        Some(c) => c,
        None => dir
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "campaign".into()),
    };
    let test = score_records(&read_log(&s.path(a.test, "test")?, dm)?.records, &ctr);
    let train = match s.opt(a.train, "train")? {
        Some(p) => Some(score_records(&read_log(&p, dm)?.records, &ctr)),
        None => None,
    };
    let opts = solve_opts(s, a.max_memory_mb)?;
    let b_top = c0s.iter().map(|&c| episode_budget(stats.cpm_train, t, c)).max().unwrap_or(0);

    let table = if kinds.iter().any(|k| k.needs_table()) {
        Some(Arc::new(value_table(&dir, &l, stats.theta_avg, t, b_top, &opts)?))
    } else {
        None
    };
    let nn = if kinds.iter().any(|k| k.needs_network()) {
        Some(Arc::new(NnModel::load(&need(&dir, NN_FILE, "train-nn")?)?))
    } else {
        None
    };
    let (t0, b0) = match &nn {
        Some(m) => (
            s.or(a.t0, "t0", m.t_scale.round() as usize)?,
            s.or(a.b0, "b0", m.b_scale.round() as u64)?,
        ),
        None => (0, 0),
    };
    let delegate = s.or(a.mapa_delegate, "mapa_delegate", "table".to_string())?;
    let mapa_table = match (kinds.contains(&StrategyKind::RlbNnMapA), delegate.as_str()) {
        (false, _) | (true, "nn") => None,
        (true, "table") => Some(Arc::new(value_table(&dir, &l, stats.theta_avg, t0, b0, &opts)?)),
        (true, other) => bail!("mapa_delegate must be `table` or `nn`, got {other:?}"),
    };
    let lin_b0 = s.opt(a.lin_b0, "lin_b0")?;
    let cpc = match s.opt(a.cpc, "cpc")? {
        Some(c) => c,
        None => stats.ecpc().unwrap_or(0.0),
    };

    let mut rows = Vec::new();
    for &c0 in &c0s {
        let cfg = EvalConfig {
            episode_len: t,
            c0,
            cpm_train: stats.cpm_train,
        };
        cfg.validate()?;
        for &k in &kinds {
            let params = match k {
                StrategyKind::SsMdp => StrategyParams::SsMdp {
                    table: table.clone().unwrap(),
                    theta_avg: stats.theta_avg,
                    delta_max: dm,
                },
                StrategyKind::Rlb => StrategyParams::Rlb {
                    table: table.clone().unwrap(),
                    delta_max: dm,
                },
                StrategyKind::Mcpc => StrategyParams::Mcpc { cpc },
                StrategyKind::Lin => {
                    let b0 = match (lin_b0, &train) {
                        (Some(b), _) => b,
                        (None, Some(tr)) => tune_lin_b0(tr, stats.theta_avg, t, cfg.budget(), &default_lin_grid())?,
                        (None, None) => bail!("lin needs --train for tuning or a fixed --lin-b0"),
                    };
                    StrategyParams::Lin {
                        b0,
                        theta_avg: stats.theta_avg,
                    }
                }
                StrategyKind::RlbNn => StrategyParams::RlbNn {
                    model: nn.clone().unwrap(),
                    delta_max: dm,
                },
                StrategyKind::RlbNnSeg => StrategyParams::RlbNnSeg {
                    model: nn.clone().unwrap(),
                    delta_max: dm,
                    t0,
                },
                StrategyKind::RlbNnMapD => StrategyParams::RlbNnMapD {
                    model: nn.clone().unwrap(),
                    delta_max: dm,
                    t0,
                    b0,
                },
                StrategyKind::RlbNnMapA => StrategyParams::RlbNnMapA {
                    model: nn.clone().unwrap(),
                    table: mapa_table.clone(),
                    delta_max: dm,
                    t0,
                    b0,
                },
            };
            let m = run_eval(&cfg, &params, &test)?;
            rows.push(ReportRow::new(&campaign, k.as_str(), &cfg, &m));
        }
    }
    match s.opt(a.out, "out")? {
        Some(p) => {
            let mut w = create(&p)?;
            write_report(&mut w, &rows)?;
            w.flush()?;
            eprintln!("{} rows -> {}", rows.len(), p.display());
        }
        None => write_report(std::io::stdout().lock(), &rows)?,
    }
    Ok(())
}

pub fn report(s: &Settings, a: ReportArgs) -> Result<()> {
    let inputs: Vec<PathBuf> = s.list(a.input, "input")?.unwrap_or_default();
    if inputs.is_empty() {
        bail!("missing --input (comma-separated evaluation CSVs)");
    }
    let mut rows = Vec::new();
    for p in &inputs {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        rows.extend(read_report(f).with_context(|| format!("reading {}", p.display()))?);
    }
    let summary = summarize(&rows);
    match s.opt(a.out, "out")? {
        Some(p) => {
            let mut w = create(&p)?;
            write_summary(&mut w, &summary)?;
            w.flush()?;
        }
        None => write_summary(std::io::stdout().lock(), &summary)?,
    }
    Ok(())
}

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Cursor};
use std::path::{Path, PathBuf};

use rotman::estimator::{predict_fast, predict_oracle, PoseEstimate, PredictionRecord};
use rotman::evalkit::{
    benchmark_tpf, default_interval_tables, intervals_to_tsv, mae, spectrum_rows, spectrum_to_tsv, IntervalTable,
    MaeSummary, MetricReport, TimingStats,
};
use rotman::linalg::Matrix;
use rotman::manifold::{fit_axis, gen_fine_factors, params_from_json, params_to_json, FitConfig, SinusoidalParams};
use rotman::multilinear::io::{read_factorset, write_factorset, write_tensor};
use rotman::multilinear::{hosvd, reconstruct, FactorSet, PoseMode};
use rotman::neuralnet::{
    build_encoder, build_head_for, bundle_from_json, bundle_to_json, encoder_targets, head_training_set, train,
    PoseModelBundle, TargetSource,
};
use rotman::posegen::io::{read_dataset, write_dataset, DatasetHeader, DatasetRecord};
use rotman::posegen::{
    euler_to_matrix, generate_dataset, make_identity_shapes, normalize_landmarks, populate_tensor, random_poses,
    render_sample, rotate_by, split_ids, transpose3, Axis, EulerPose, GridSpec, LandmarkSet, PoseDataset, PoseGrid,
    Sample,
};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SeedUse};
use crate::error::{io_err, CliError, CliResult, Context};
use crate::parallel::par_map;

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    fs::write(path, bytes).map_err(io_err(path))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn load_dataset(path: &Path) -> CliResult<(DatasetHeader, PoseDataset<f64>)> {
    let f = File::open(path).map_err(io_err(path))?;
    read_dataset(BufReader::new(f)).context(format!("reading dataset {}", path.display()))
}

fn load_factors(path: &Path) -> CliResult<FactorSet<f64>> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    read_factorset(&mut Cursor::new(bytes)).context(format!("reading factors {}", path.display()))
}

fn load_params(path: &Path) -> CliResult<SinusoidalParams<f64>> {
    params_from_json(&read_text(path)?).context(format!("reading curve parameters {}", path.display()))
}

fn load_bundle(path: &Path) -> CliResult<PoseModelBundle<f64>> {
    bundle_from_json(&read_text(path)?).context(format!("reading model bundle {}", path.display()))
}

/// Grid recorded in the dataset header, else the configured one.
fn dataset_grid(cfg: &RunConfig, header: &DatasetHeader) -> GridSpec {
    header.grid.unwrap_or(cfg.grid)
}

/// Identity ids used for decomposition and training, and the held-out rest.
fn identity_split(cfg: &RunConfig, ds: &PoseDataset<f64>) -> CliResult<(BTreeSet<i64>, BTreeSet<i64>)> {
    split_ids(&ds.identity_ids(), cfg.data.train_fraction, cfg.derived_seed(SeedUse::Split))
        .context("splitting identities")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub path: PathBuf,
    pub identities: usize,
    pub cells: usize,
    pub records: usize,
}

/// Renders every identity at every grid cell and writes the dataset file.
pub fn cmd_generate(cfg: &RunConfig) -> CliResult<GenerateSummary> {
    cfg.validate()?;
    let shapes = make_identity_shapes::<f64>(
        cfg.data.identities,
        cfg.data.landmarks,
        cfg.data.variation,
        cfg.derived_seed(SeedUse::Shapes),
    )
    .context("building identity shapes")?;
    let grid = PoseGrid::from_spec(&cfg.grid).context("building pose grid")?;
    let ds = generate_dataset(&shapes, &grid).context("rendering dataset")?;
    let header = DatasetHeader::new(cfg.data.landmarks, Some(cfg.grid), Some(cfg.seed));
    let mut buf = Vec::new();
    write_dataset(&mut buf, &header, &ds).context("encoding dataset")?;
    let path = cfg.path(&cfg.paths.dataset);
    write_file(&path, &buf)?;
    Ok(GenerateSummary { path, identities: shapes.len(), cells: grid.cell_count(), records: ds.len() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposeSummary {
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub train_ids: Vec<i64>,
    /// Energy share captured by the kept components, per mode (1-based order).
    pub energy: Vec<f64>,
    pub relative_error: f64,
}

/// Builds the training tensor, decomposes it and writes tensor, factors and spectra.
pub fn cmd_decompose(cfg: &RunConfig) -> CliResult<DecomposeSummary> {
    cfg.validate()?;
    let (header, ds) = load_dataset(&cfg.path(&cfg.paths.dataset))?;
    let grid = PoseGrid::from_spec(&dataset_grid(cfg, &header)).context("building pose grid")?;
    let (train_ids, _) = identity_split(cfg, &ds)?;
    let train_set = ds.filter_ids(&train_ids);
    let tensor = populate_tensor(&train_set, &grid).context("populating tensor")?;
    let dims = tensor.dims().to_vec();
    let ranks = cfg.ranks(&dims);
    let fs = hosvd(&tensor, &ranks).context("decomposing tensor")?;

    let mut buf = Vec::new();
    write_tensor(&mut buf, &tensor).context("encoding tensor")?;
    write_file(&cfg.path(&cfg.paths.tensor), &buf)?;
    buf.clear();
    write_factorset(&mut buf, &fs).context("encoding factors")?;
    write_file(&cfg.path(&cfg.paths.factors), &buf)?;
    let rows = spectrum_rows(&fs).context("summarizing spectra")?;
    write_file(&cfg.path(&cfg.paths.spectra), spectrum_to_tsv(&rows).as_bytes())?;

    let energy = fs
        .spectra
        .iter()
        .zip(&ranks)
        .map(|(s, &r)| s.energy_ratio(r))
        .collect::<rotman::Result<Vec<_>>>()
        .context("energy ratios")?;
    let approx = reconstruct(&fs).context("reconstructing tensor")?;
    let relative_error = approx.relative_error(&tensor).context("reconstruction error")?;
    Ok(DecomposeSummary { dims, ranks, train_ids: train_ids.into_iter().collect(), energy, relative_error })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisFitSummary {
    pub axis: Axis,
    pub residual_rms: Vec<f64>,
    pub column_rms: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub converged: Vec<bool>,
}

/// Fits cosine curves to every retained rotation-factor column and writes them.
pub fn cmd_fit(cfg: &RunConfig) -> CliResult<Vec<AxisFitSummary>> {
    cfg.validate()?;
    let fs = load_factors(&cfg.path(&cfg.paths.factors))?;
    let header = read_header(&cfg.path(&cfg.paths.dataset))?;
    let grid = PoseGrid::<f64>::from_spec(&dataset_grid(cfg, &header)).context("building pose grid")?;
    let fit_cfg = FitConfig { rel_tol: cfg.fit.rel_tol, max_iterations: cfg.fit.max_iterations };
    let mut fits = Vec::new();
    let mut summary = Vec::new();
    for axis in Axis::ALL {
        let factor = fs.factor(PoseMode::from(axis));
        let fit = fit_axis(axis, factor, grid.bins(axis), &fit_cfg).context(format!("fitting {axis} curves"))?;
        let column_rms = (0..factor.cols())
            .map(|j| {
                let c = factor.column(j);
                (c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64).sqrt()
            })
            .collect();
        for (j, d) in fit.dims.iter().enumerate() {
            if d.degenerate {
                log::warn!("{axis} dimension {} is constant; its curve is flat", j + 1);
            }
            if !d.converged {
                log::warn!("{axis} dimension {} hit the iteration cap", j + 1);
            }
        }
        summary.push(AxisFitSummary {
            axis,
            residual_rms: fit.dims.iter().map(|d| d.residual_rms).collect(),
            column_rms,
            degenerate: fit.dims.iter().map(|d| d.degenerate).collect(),
            converged: fit.dims.iter().map(|d| d.converged).collect(),
        });
        fits.push(fit);
    }
    let [yaw, pitch, roll]: [_; 3] = fits.try_into().expect("three axes");
    let params = SinusoidalParams { yaw, pitch, roll };
    write_file(&cfg.path(&cfg.paths.params), params_to_json(&params).context("encoding curves")?.as_bytes())?;
    Ok(summary)
}

fn read_header(path: &Path) -> CliResult<DatasetHeader> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut first = String::new();
    BufReader::new(f).read_line(&mut first).map_err(io_err(path))?;
    let header: DatasetHeader = serde_json::from_str(&first)
        .map_err(|e| CliError::Core { context: format!("reading {}", path.display()), source: e.into() })?;
    Ok(header)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetSummary {
    pub name: String,
    pub samples: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    pub encoder: NetSummary,
    pub heads: Vec<NetSummary>,
}

fn features_matrix(samples: &[Sample<f64>]) -> Matrix<f64> {
    let d = samples.first().map_or(0, |s| s.features.len());
    Matrix::from_fn(samples.len(), d, |i, j| samples[i].features[j])
}

/// Trains the encoder on the training identities and one head per axis on its
/// fine curve table, then writes the bundle and the loss curves.
pub fn cmd_train(cfg: &RunConfig) -> CliResult<TrainSummary> {
    cfg.validate()?;
    let (header, ds) = load_dataset(&cfg.path(&cfg.paths.dataset))?;
    let spec = dataset_grid(cfg, &header);
    let grid = PoseGrid::from_spec(&spec).context("building pose grid")?;
    let fs = load_factors(&cfg.path(&cfg.paths.factors))?;
    let params = load_params(&cfg.path(&cfg.paths.params))?;
    let (train_ids, _) = identity_split(cfg, &ds)?;
    let train_set = ds.filter_ids(&train_ids);

    let smoothed = match cfg.train.targets {
        TargetSource::Raw => None,
        TargetSource::Smoothed => Some(&params),
    };
    let targets = encoder_targets(&fs, &train_set, &grid, smoothed).context("building encoder targets")?;
    let inputs = features_matrix(&train_set.samples);
    let mut encoder = build_encoder(inputs.cols(), cfg.derived_seed(SeedUse::EncoderInit)).context("building encoder")?;
    if cfg.train.encoder.epochs == 0 || cfg.train.head.epochs == 0 {
        log::warn!("zero training epochs: the bundle keeps untrained weights");
    }
    let enc_cfg = cfg.train.encoder.train_config(cfg.derived_seed(SeedUse::EncoderShuffle));
    log::info!("training encoder on {} samples for {} epochs", inputs.rows(), enc_cfg.epochs);
    let enc_report = train(&mut encoder, &inputs, &targets, &enc_cfg).context("training encoder")?;

    let mut losses = String::from("net\tepoch\tloss\n");
    let mut push_losses = |name: &str, initial: f64, epochs: &[f64]| {
        losses.push_str(&format!("{name}\t0\t{initial}\n"));
        for (e, l) in epochs.iter().enumerate() {
            losses.push_str(&format!("{name}\t{}\t{l}\n", e + 1));
        }
    };
    push_losses("encoder", enc_report.initial_loss, &enc_report.epoch_losses);

    let latent_dims = Axis::ALL.map(|a| fs.factor(PoseMode::from(a)).cols());
    let mut heads = Vec::new();
    let mut head_summaries = Vec::new();
    for (k, axis) in Axis::ALL.into_iter().enumerate() {
        let table = gen_fine_factors(params.axis(axis), spec.range(axis), cfg.fit.fine_step)
            .context(format!("sampling {axis} curves"))?;
        let (x, y) = head_training_set(&table).context("head training set")?;
        let mut head = build_head_for(axis, latent_dims[k], cfg.derived_seed(SeedUse::HeadInit(axis)))
            .context("building head")?;
        let head_cfg = cfg.train.head.train_config(cfg.derived_seed(SeedUse::HeadShuffle(axis)));
        log::info!("training {axis} head on {} samples", x.rows());
        let rep = train(&mut head, &x, &y, &head_cfg).context(format!("training {axis} head"))?;
        push_losses(&format!("head_{axis}"), rep.initial_loss, &rep.epoch_losses);
        head_summaries.push(NetSummary {
            name: format!("head_{axis}"),
            samples: x.rows(),
            initial_loss: rep.initial_loss,
            final_loss: rep.final_loss,
        });
        heads.push(head);
    }
    let [head_yaw, head_pitch, head_roll]: [_; 3] = heads.try_into().expect("three heads");
    let bundle = PoseModelBundle { encoder, head_yaw, head_pitch, head_roll, latent_dims, grid: spec };
    write_file(&cfg.path(&cfg.paths.bundle), bundle_to_json(&bundle).context("encoding bundle")?.as_bytes())?;
    write_file(&cfg.path(&cfg.paths.losses), losses.as_bytes())?;
    Ok(TrainSummary {
        encoder: NetSummary {
            name: "encoder".into(),
            samples: inputs.rows(),
            initial_loss: enc_report.initial_loss,
            final_loss: enc_report.final_loss,
        },
        heads: head_summaries,
    })
}

/// Landmarks of each identity in its unrotated pose, recovered from any one of its samples.
fn base_shapes(ds: &PoseDataset<f64>, ids: &BTreeSet<i64>) -> CliResult<Vec<(i64, LandmarkSet<f64>)>> {
    ids.iter()
        .map(|&id| {
            let s = ds
                .samples
                .iter()
                .find(|s| s.id == id)
                .ok_or_else(|| CliError::Usage(format!("identity {id} has no samples")))?;
            let rotated = LandmarkSet::from_flat(&s.features).context("reading landmarks")?;
            Ok((id, rotate_by(&rotated, &transpose3(&euler_to_matrix(&s.pose)))))
        })
        .collect()
}

/// Held-out identities rendered at random poses inside the grid ranges.
pub fn synthetic_test_set(cfg: &RunConfig) -> CliResult<PoseDataset<f64>> {
    let (header, ds) = load_dataset(&cfg.path(&cfg.paths.dataset))?;
    let spec = dataset_grid(cfg, &header);
    let (_, test_ids) = identity_split(cfg, &ds)?;
    let shapes = base_shapes(&ds, &test_ids)?;
    let poses = random_poses::<f64>(cfg.eval.test_poses, &spec, cfg.derived_seed(SeedUse::TestPoses));
    let samples = poses
        .iter()
        .enumerate()
        .map(|(i, pose)| {
            let (id, shape) = &shapes[i % shapes.len()];
            Ok(Sample { id: *id, pose: *pose, features: render_sample(shape, pose).context("rendering")? })
        })
        .collect::<CliResult<Vec<_>>>()?;
    PoseDataset::new(samples).context("assembling test set")
}

/// Re-normalizes every sample; a no-op for generated data.
fn normalized(ds: PoseDataset<f64>) -> CliResult<PoseDataset<f64>> {
    let samples = ds
        .samples
        .into_iter()
        .map(|s| {
            let shape = LandmarkSet::from_flat(&s.features).context("reading landmarks")?;
            let features = normalize_landmarks(&shape).context(format!("normalizing sample {}", s.id))?.flatten();
            Ok(Sample { features, ..s })
        })
        .collect::<CliResult<Vec<_>>>()?;
    PoseDataset::new(samples).context("assembling samples")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleComparison {
    pub samples: usize,
    /// Oracle against ground truth.
    pub oracle: MetricReport,
    /// Fast path against ground truth on the same samples.
    pub fast: MaeSummary,
    /// Fast path against the oracle.
    pub agreement: MaeSummary,
    pub converged: usize,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub source: String,
    pub fast: MetricReport,
    pub out_of_range: usize,
    pub intervals: Vec<IntervalTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleComparison>,
}

/// Fast-path accuracy, per-interval errors, latency and the oracle cross-check.
pub fn cmd_eval(cfg: &RunConfig) -> CliResult<EvalReport> {
    cfg.validate()?;
    let bundle = load_bundle(&cfg.path(&cfg.paths.bundle))?;
    let (source, test) = match &cfg.eval.external {
        Some(p) => (p.display().to_string(), normalized(load_dataset(p)?.1)?),
        None => ("held-out identities at random poses".to_string(), synthetic_test_set(cfg)?),
    };
    if test.is_empty() {
        return Err(CliError::Usage("evaluation set is empty".into()));
    }
    if test.feature_dim() != bundle.encoder.input_dim() {
        return Err(CliError::Core {
            context: "evaluation set".into(),
            source: rotman::Error::Shape(format!(
                "{} features per sample, model expects {}",
                test.feature_dim(),
                bundle.encoder.input_dim()
            )),
        });
    }
    let workers = cfg.workers();
    let fast: Vec<PoseEstimate<f64>> = par_map(&test.samples, workers, |s| predict_fast(&bundle, &s.features))
        .into_iter()
        .collect::<rotman::Result<_>>()
        .context("fast-path prediction")?;
    let truths: Vec<EulerPose<f64>> = test.samples.iter().map(|s| s.pose).collect();
    let preds: Vec<EulerPose<f64>> = fast.iter().map(|e| e.pose).collect();

    let features: Vec<Vec<f64>> = test.samples.iter().map(|s| s.features.clone()).collect();
    let repeats = cfg.eval.bench_frames.div_ceil(features.len()).max(1);
    let timing = benchmark_tpf(&bundle, &features, repeats).context("timing fast path")?;
    let report = MetricReport::compute(&preds, &truths, Some(timing)).context("fast-path metrics")?;
    let in_range = test.samples.iter().all(|s| {
        Axis::ALL.iter().all(|&a| bundle.grid.range(a).contains(s.pose.get(a)))
    });
    let intervals = if in_range {
        default_interval_tables(&preds, &truths, &bundle.grid).context("interval errors")?
    } else {
        log::warn!("some ground-truth angles fall outside the trained ranges; interval tables skipped");
        Vec::new()
    };

    let oracle = if cfg.eval.oracle_sample > 0 {
        let fs = load_factors(&cfg.path(&cfg.paths.factors))?;
        let params = load_params(&cfg.path(&cfg.paths.params))?;
        let n = cfg.eval.oracle_sample.min(test.len());
        let subset = &test.samples[..n];
        let est: Vec<PoseEstimate<f64>> =
            par_map(subset, workers, |s| predict_oracle(&fs, &params, &s.features, &cfg.oracle))
                .into_iter()
                .collect::<rotman::Result<_>>()
                .context("oracle prediction")?;
        let opred: Vec<EulerPose<f64>> = est.iter().map(|e| e.pose).collect();
        Some(OracleComparison {
            samples: n,
            oracle: MetricReport::compute(&opred, &truths[..n], None).context("oracle metrics")?,
            fast: mae(&preds[..n], &truths[..n]).context("fast subset metrics")?,
            agreement: mae(&preds[..n], &opred).context("agreement")?,
            converged: est.iter().filter(|e| e.converged).count(),
            mean_seconds: est.iter().map(|e| e.elapsed).sum::<f64>() / n as f64,
        })
    } else {
        None
    };

    let records: Vec<PredictionRecord> =
        test.samples.iter().zip(&fast).map(|(s, e)| PredictionRecord::new(s.id, Some(s.pose), e)).collect();
    let mut buf = Vec::new();
    rotman::estimator::write_records(&mut buf, &records).context("encoding predictions")?;
    write_file(&cfg.path(&cfg.paths.predictions), &buf)?;
    let out = EvalReport { source, fast: report, out_of_range: fast.iter().filter(|e| e.out_of_range).count(), intervals, oracle };
    write_file(&cfg.path(&cfg.paths.metrics), out.fast.to_tsv().as_bytes())?;
    write_file(&cfg.path(&cfg.paths.intervals), intervals_to_tsv(&out.intervals).as_bytes())?;
    let json = serde_json::to_string_pretty(&out).expect("report serializes");
    write_file(&cfg.path(&cfg.paths.report), json.as_bytes())?;
    Ok(out)
}

/// Predicts the pose of one dataset-format record (a JSON line).
pub fn cmd_predict(cfg: &RunConfig, line: &str) -> CliResult<PredictionRecord> {
    let bundle = load_bundle(&cfg.path(&cfg.paths.bundle))?;
    let rec: DatasetRecord = serde_json::from_str(line.trim())
        .map_err(|e| CliError::Core { context: "reading input record".into(), source: e.into() })?;
    let sample = rec.to_sample::<f64>();
    let shape = LandmarkSet::from_flat(&sample.features).context("reading landmarks")?;
    let features = normalize_landmarks(&shape).context("normalizing landmarks")?.flatten();
    let est = predict_fast(&bundle, &features).context("predicting")?;
    Ok(PredictionRecord::new(sample.id, Some(sample.pose), &est))
}

/// Latency of the fast path on the calling thread. With `input_dim` a freshly
/// initialized bundle of that width is timed on random inputs instead of the
/// trained one (weights do not affect latency).
pub fn cmd_bench(cfg: &RunConfig, input_dim: Option<usize>, frames: usize) -> CliResult<TimingStats> {
    let frames = frames.max(1);
    let (bundle, features) = match input_dim {
        Some(d) => {
            let bundle = untrained_bundle(d, cfg.seed).context("building bundle")?;
            let features = (0..64)
                .map(|i| (0..d).map(|j| (((i * 31 + j * 17) % 97) as f64 / 48.5) - 1.0).collect())
                .collect::<Vec<Vec<f64>>>();
            (bundle, features)
        }
        None => {
            let bundle = load_bundle(&cfg.path(&cfg.paths.bundle))?;
            let (_, ds) = load_dataset(&cfg.path(&cfg.paths.dataset))?;
            let features = ds.samples.iter().take(frames).map(|s| s.features.clone()).collect::<Vec<_>>();
            (bundle, features)
        }
    };
    let repeats = frames.div_ceil(features.len()).max(1);
    benchmark_tpf(&bundle, &features, repeats).context("timing fast path")
}

/// Bundle with initial weights for an encoder of width `input_dim`.
pub fn untrained_bundle(input_dim: usize, seed: u64) -> rotman::Result<PoseModelBundle<f64>> {
    Ok(PoseModelBundle {
        encoder: build_encoder(input_dim, seed)?,
        head_yaw: build_head_for(Axis::Yaw, 3, seed + 1)?,
        head_pitch: build_head_for(Axis::Pitch, 3, seed + 2)?,
        head_roll: build_head_for(Axis::Roll, 3, seed + 3)?,
        latent_dims: [3, 3, 3],
        grid: GridSpec::default(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub generate: GenerateSummary,
    pub decompose: DecomposeSummary,
    pub fit: Vec<AxisFitSummary>,
    pub train: TrainSummary,
    pub eval: EvalReport,
}

/// generate → decompose → fit → train → eval.
pub fn run_pipeline(cfg: &RunConfig) -> CliResult<PipelineSummary> {
    Ok(PipelineSummary {
        generate: cmd_generate(cfg)?,
        decompose: cmd_decompose(cfg)?,
        fit: cmd_fit(cfg)?,
        train: cmd_train(cfg)?,
        eval: cmd_eval(cfg)?,
    })
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{anyhow, bail, Context, Result};
use cogload::config::RunConfig;
use cogload::defaults;
use cogload::eeg::{count_blinks, iaf_course, normalize_course, theta_course, PowerCourse};
use cogload::gaze::{build_pursuit_dataset, NormalizationScope, PursuitSpeed, TrajectoryShape};
use cogload::io::{csv_table, load_recording, save_recording, series_to_trial, svg_polyline, trial_annotations, write_atomic};
use cogload::learn::{
    fit_linear_regression, holdout, leave_one_person_out, lopo_by_condition, lopo_regression, loro_by_condition,
    train_linear_svm, Aggregation, FeatureDataset, FoldTable, LinearModel, Targets,
};
use cogload::spectral::{detect_iaf, BandSpec};
use cogload::stream::{replay_series, Difficulty, DifficultyController, Pipeline, StreamSession, WindowPolicy};
use cogload::synth::{eyes_pair, gen_nback_schedule, gen_pursuit_trials, synthesize, PursuitFixture, SynthSpec};
use cogload::TimeSeries;
use log::info;
use serde::Serialize;

use crate::manifest::{self, Record};
use crate::*;

pub fn run(cli: &Cli, mut config: RunConfig, argv: &[String]) -> Result<()> {
    let record = match &cli.command {
        Cmd::Synth(cmd) => synth(cmd, &config)?,
        Cmd::IafDetect(a) => iaf_detect(a, &mut config)?,
        Cmd::Bandpower(a) => bandpower(a, &config)?,
        Cmd::PursuitFeatures(a) => pursuit_features(a, &mut config)?,
        Cmd::Train(a) => train(a, &mut config)?,
        Cmd::Evaluate(a) => evaluate(a, &mut config)?,
        Cmd::Regress(a) => regress(a)?,
        Cmd::Stream(a) => stream(a, &config)?,
        Cmd::Blinks(a) => blinks(a, &mut config)?,
        Cmd::Rerun(a) => return rerun(a),
    };
    let mut record = record;
    if let Some(c) = &cli.config {
        record.inputs.push(c.clone());
    }
    if let Some(path) = manifest::write(&record, argv, &config)? {
        info!("manifest {}", path.display());
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load(path: &Path) -> Result<TimeSeries> {
    load_recording(path).with_context(|| format!("loading {}", path.display()))
}

// ── synth ──────────────────────────────────────────────

fn synth(cmd: &SynthCmd, _config: &RunConfig) -> Result<Record> {
    match cmd {
        SynthCmd::EegPair(a) => {
            let (open, closed) = eyes_pair(a.seed, a.alpha_hz, a.amplitude, a.noise, a.duration_s, a.rate_hz)?;
            fs::create_dir_all(&a.out)?;
            save_recording(&open, &a.out.join("open.csv"))?;
            save_recording(&closed, &a.out.join("closed.csv"))?;
            println!("wrote {} and {}", a.out.join("open.csv").display(), a.out.join("closed.csv").display());
            Ok(Record::output(&a.out).seed("synth", a.seed))
        }
        SynthCmd::Pursuit(a) => {
            let fixture = PursuitFixture {
                seed: a.seed,
                persons: a.persons,
                repetitions: a.repetitions,
                shapes: a.shapes.iter().map(|s| s.parse()).collect::<Result<Vec<TrajectoryShape>, _>>()?,
                speeds: a.speeds.iter().map(|s| s.parse()).collect::<Result<Vec<PursuitSpeed>, _>>()?,
                label_sigmas_px: a.sigmas.clone(),
                lag_ms: a.lag_ms,
                duration_s: a.duration_s,
                rate_hz: defaults::GAZE_RATE_HZ,
            };
            let trials = gen_pursuit_trials(&fixture)?;
            fs::create_dir_all(&a.out)?;
            for (i, trial) in trials.iter().enumerate() {
                let series = cogload::io::gaze_to_series(&trial.path, &trial.gaze)?;
                let series = series.clone().with_annotations(trial_annotations(series.t0_s(), trial))?;
                save_recording(&series, &a.out.join(format!("trial-{i:04}.csv")))?;
            }
            println!("wrote {} trials to {}", trials.len(), a.out.display());
            Ok(Record::output(&a.out).seed("synth", a.seed))
        }
        SynthCmd::Spec(a) => {
            let text = fs::read_to_string(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
            let spec = SynthSpec::from_toml(&text)?;
            let series = synthesize(&spec)?;
            save_recording(&series, &a.out)?;
            let seed = match &spec {
                SynthSpec::Eeg(s) => s.seed,
                SynthSpec::Gaze(s) => s.seed,
                SynthSpec::Pupil(s) => s.seed,
            };
            println!("wrote {} samples × {} channels to {}", series.n_samples(), series.n_channels(), a.out.display());
            Ok(Record::output(&a.out).input(&a.spec).seed("synth", seed))
        }
        SynthCmd::Nback(a) => {
            let schedule = gen_nback_schedule(a.n, a.length, a.match_rate, a.seed)?;
            write_json(&a.out, &schedule)?;
            println!("{}-back, {} stimuli, {} matches, {} s", a.n, schedule.len(), schedule.match_count(), schedule.span_s());
            Ok(Record::output(&a.out).seed("schedule", a.seed))
        }
    }
}

// ── EEG ────────────────────────────────────────────────

fn iaf_detect(a: &IafDetectArgs, config: &mut RunConfig) -> Result<Record> {
    if let Some(h) = a.half_width_hz {
        config.iaf_half_width_hz = h;
    }
    let band = detect_iaf(&load(&a.open)?, &load(&a.closed)?, &config.iaf_params()?)?;
    write_json(&a.out, &band)?;
    println!("IAF {} Hz, band {}-{} Hz", band.center_hz, band.low_hz, band.high_hz);
    Ok(Record::output(&a.out).input(&a.open).input(&a.closed))
}

fn present(series: &TimeSeries, region: &[&str]) -> Vec<String> {
    region.iter().filter(|l| series.channel(l).is_some()).map(|l| l.to_string()).collect()
}

fn bandpower(a: &BandpowerArgs, config: &RunConfig) -> Result<Record> {
    let series = load(&a.input)?;
    let params = config.eeg_params();
    let mut record = Record::output(&a.out).input(&a.input);
    let course_of = |s: &TimeSeries| -> Result<PowerCourse<f64>> {
        match a.kind {
            BandKind::Iaf => {
                let path = a.band.as_ref().ok_or_else(|| anyhow!("--band is required for --kind iaf"))?;
                let band: BandSpec = read_json(path)?;
                let electrodes = if a.electrodes.is_empty() { present(s, &defaults::OCCIPITAL) } else { a.electrodes.clone() };
                Ok(iaf_course(s, &band, &electrodes, &params)?)
            }
            BandKind::Theta => {
                let electrodes = if a.electrodes.is_empty() { present(s, &defaults::FRONTAL) } else { a.electrodes.clone() };
                Ok(theta_course(s, &electrodes, &params)?)
            }
        }
    };
    let mut course = course_of(&series)?;
    if let Some(b) = &a.band {
        record = record.input(b);
    }
    if let Some(base) = &a.baseline {
        course = normalize_course(&course, &course_of(&load(base)?)?)?;
        record = record.input(base);
    }
    let rows = course.frame_times_s.iter().zip(&course.values).map(|(&t, &v)| vec![t, v]);
    write_atomic(&a.out, csv_table(&["time_s", "power"], rows).as_bytes())?;
    if let Some(svg) = &a.svg {
        let title = format!("band power {}-{} Hz", course.band.low_hz, course.band.high_hz);
        write_atomic(svg, svg_polyline(&title, &course.frame_times_s, &course.values).as_bytes())?;
        record.outputs.push(svg.clone());
    }
    println!("{} frames, mean power {}", course.len(), course.mean().unwrap_or(f64::NAN));
    Ok(record)
}

fn blinks(a: &BlinksArgs, config: &mut RunConfig) -> Result<Record> {
    if let Some(t) = a.threshold_uv {
        config.blink_threshold_uv = t;
    }
    let report = count_blinks(&load(&a.input)?, &config.blink_params())?;
    write_json(&a.out, &report)?;
    println!("{} blinks, {} per minute", report.count, report.per_minute);
    Ok(Record::output(&a.out).input(&a.input))
}

// ── pursuit and learning ───────────────────────────────

fn recordings_in(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = vec![];
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .filter(|f| f.extension().is_some_and(|e| e == "csv") && !f.to_string_lossy().ends_with(".annotations.csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        bail!("no recordings found");
    }
    Ok(files)
}

fn pursuit_features(a: &PursuitFeaturesArgs, config: &mut RunConfig) -> Result<Record> {
    if let Some(s) = a.normalization {
        config.normalization = match s {
            Scope::PerTrial => NormalizationScope::PerTrial,
            Scope::PerPerson => NormalizationScope::PerPerson,
            Scope::Global => NormalizationScope::Global,
        };
    }
    let files = recordings_in(&a.inputs)?;
    let trials = files
        .iter()
        .map(|f| series_to_trial(&load(f)?).with_context(|| format!("reading trial {}", f.display())))
        .collect::<Result<Vec<_>>>()?;
    let instances = build_pursuit_dataset(&trials, &config.instance_params(), config.normalization)?;
    let ds = FeatureDataset::from_pursuit(&instances)?;
    write_json(&a.out, &ds)?;
    println!("{} instances × {} attributes from {} trials", ds.len(), ds.n_attributes(), trials.len());
    let mut record = Record::output(&a.out);
    record.inputs = a.inputs.clone();
    Ok(record)
}

fn svm_overrides(config: &mut RunConfig, c: Option<f64>, epochs: Option<usize>, seed: Option<u64>) {
    if let Some(c) = c {
        config.svm_c = c;
    }
    if let Some(e) = epochs {
        config.svm_epochs = e;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
}

fn train(a: &TrainArgs, config: &mut RunConfig) -> Result<Record> {
    svm_overrides(config, a.c, a.epochs, a.seed);
    let ds: FeatureDataset = read_json(&a.dataset)?;
    let model = match &ds.y {
        Targets::Classes(_) => train_linear_svm(&ds, &config.svm_params())?,
        Targets::Values(y) => {
            if ds.n_attributes() != 1 {
                bail!("regression needs exactly one attribute, dataset has {}", ds.n_attributes());
            }
            let x: Vec<f64> = ds.x.iter().map(|r| r[0]).collect();
            fit_linear_regression(&x, y)?
        }
    };
    write_atomic(&a.out, (model.to_json()? + "\n").as_bytes())?;
    println!("trained {:?} on {} instances", model.kind, ds.len());
    Ok(Record::output(&a.out).input(&a.dataset).seed("svm", config.seed))
}

fn evaluate(a: &EvaluateArgs, config: &mut RunConfig) -> Result<Record> {
    svm_overrides(config, a.c, a.epochs, a.seed);
    let ds: FeatureDataset = read_json(&a.dataset)?;
    let params = config.svm_params();
    let trainer = |d: &FeatureDataset| train_linear_svm(d, &params);
    let mut record = Record::output(&a.out).input(&a.dataset).seed("svm", config.seed);
    match a.scheme {
        SchemeArg::Lopo => {
            let report = leave_one_person_out(&ds, trainer)?;
            write_atomic(&a.out, (report.to_json()? + "\n").as_bytes())?;
            println!("leave-one-person-out: {} folds, accuracy {:.4}", report.folds.len(), report.accuracy().unwrap_or(f64::NAN));
            if a.by_condition {
                let (table, _) = lopo_by_condition(&ds, trainer)?;
                print!("{table}");
            }
        }
        SchemeArg::Loro => {
            let table_def = match &a.fold_table {
                Some(p) => {
                    record = record.input(p);
                    FoldTable { entries: read_json(p)? }
                }
                None => FoldTable::default(),
            };
            let (table, reports) = loro_by_condition(&ds, &table_def, trainer, config.seed)?;
            write_json(&a.out, &serde_json::json!({ "scheme": "loro-classify", "table": table, "reports": reports }))?;
            print!("{table}");
        }
        SchemeArg::Holdout => {
            if a.test_persons.is_empty() {
                bail!("--test-persons is required for the holdout scheme");
            }
            let report = holdout(&ds, &a.test_persons, trainer)?;
            write_atomic(&a.out, (report.to_json()? + "\n").as_bytes())?;
            println!("holdout {:?}: accuracy {:.4}", a.test_persons, report.accuracy().unwrap_or(f64::NAN));
        }
    }
    Ok(record)
}

fn regression_table(path: &Path) -> Result<FeatureDataset> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, h)| h.trim()).unwrap_or_default();
    if header != "person,condition,x,y" {
        bail!("{}: expected header `person,condition,x,y`, found `{header}`", path.display());
    }
    let (mut x, mut y, mut p, mut c) = (vec![], vec![], vec![], vec![]);
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || anyhow!(cogload::Error::Parse { line: i + 1, reason: format!("expected 4 fields, found `{line}`") });
        if cells.len() != 4 {
            return Err(bad());
        }
        p.push(cells[0].parse().map_err(|_| bad())?);
        c.push(cells[1].to_string());
        x.push(vec![cells[2].parse().map_err(|_| bad())?]);
        y.push(cells[3].parse().map_err(|_| bad())?);
    }
    let n = y.len();
    Ok(FeatureDataset::new(x, Targets::Values(y), p, vec![0; n], c)?)
}

fn regress(a: &RegressArgs) -> Result<Record> {
    let (ds, input) = match (&a.input, &a.dataset) {
        (Some(p), _) => (regression_table(p)?, p),
        (None, Some(p)) => (read_json(p)?, p),
        (None, None) => bail!("one of --input or --dataset is required"),
    };
    let aggregation = match a.aggregation {
        AggregationArg::None => Aggregation::None,
        AggregationArg::MeanPerCondition => Aggregation::MeanPerCondition,
    };
    let report = lopo_regression(&ds, aggregation)?;
    write_atomic(&a.out, (report.to_json()? + "\n").as_bytes())?;
    if let Some(reg) = &report.regression {
        println!("{:>6} {:>10} {:>8} {:>8} {:>8} {:>10} {:>10}", "n", "F", "R", "R²", "RMSE", "LOPO RMSE", "LOPO R²");
        if let Some(d) = &reg.full_fit {
            let f = d.f.map_or("inf".to_string(), |f| format!("{f:.2}"));
            println!("{:>6} {:>10} {:>8.3} {:>8.3} {:>8.3} {:>10.3} {:>10.3}", reg.n, f, d.r, d.r2, d.rmse, reg.rmse, reg.r2);
        }
    }
    Ok(Record::output(&a.out).input(input))
}

// ── streaming ──────────────────────────────────────────

fn stream(a: &StreamArgs, config: &RunConfig) -> Result<Record> {
    let series = load(&a.input)?;
    let model = LinearModel::from_json(&fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?)?;
    let mut record = Record::output(&a.out).input(&a.input).input(&a.model);
    let (pipeline, mut policy) = match a.pipeline {
        PipelineArg::PupilWindow => (Pipeline::PupilWindow, WindowPolicy { window_s: config.pupil_window_s, hop_s: config.pupil_window_s }),
        PipelineArg::PursuitDeviation => (Pipeline::PursuitDeviation, WindowPolicy { window_s: config.pupil_window_s, hop_s: config.pupil_window_s }),
        PipelineArg::IafCourse => {
            let path = a.band.as_ref().ok_or_else(|| anyhow!("--band is required for the iaf-course pipeline"))?;
            record = record.input(path);
            let electrodes = if a.electrodes.is_empty() { present(&series, &defaults::OCCIPITAL) } else { a.electrodes.clone() };
            (Pipeline::IafCourse { band: read_json(path)?, electrodes }, WindowPolicy { window_s: config.window_s, hop_s: config.hop_s })
        }
    };
    if let Some(w) = a.window_s {
        policy.window_s = w;
    }
    if let Some(h) = a.hop_s {
        policy.hop_s = h;
    }
    let mut session = StreamSession::with_capacity_s(
        pipeline,
        policy,
        model,
        series.rate_hz(),
        series.channels().to_vec(),
        series.t0_s(),
        config.stream_buffer_s,
    )?;
    if a.controller {
        let initial = match a.initial {
            DifficultyArg::Easy => Difficulty::Easy,
            DifficultyArg::Difficult => Difficulty::Difficult,
        };
        session = session.with_controller(DifficultyController::new(a.high_class, initial, a.task_period_s));
    }
    let sizes: Vec<usize> = if a.block == 0 { vec![] } else { std::iter::repeat_n(a.block, series.n_samples().div_ceil(a.block)).collect() };
    replay_series(&mut session, &series, &sizes)?;
    let report = session.report();
    write_atomic(&a.out, (report.to_json()? + "\n").as_bytes())?;
    println!("{} decisions, {} difficulty switches", report.decisions.len(), report.switch_count);
    Ok(record)
}

// ── reproducibility ────────────────────────────────────

fn rerun(a: &RerunArgs) -> Result<()> {
    let m = manifest::load(&a.manifest)?;
    let changed = manifest::mismatches(&m.inputs);
    if !changed.is_empty() {
        bail!("inputs changed since the original run: {}", changed.join(", "));
    }
    let exe = std::env::current_exe()?;
    let status = Command::new(exe).args(&m.argv).status()?;
    if !status.success() {
        bail!("re-executed command failed ({status})");
    }
    let differ = manifest::mismatches(&m.outputs);
    if !differ.is_empty() {
        bail!("outputs differ from the manifest: {}", differ.join(", "));
    }
    println!("reproduced {} output file(s) from {}", m.outputs.len(), a.manifest.display());
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{self, report, HeatmapMode};
use crate::features::{
    compute_features, feature_schema, write_features_csv, PlayerDerivedFeatures,
};
use crate::frames::{
    batch_frames, build_player_frame, build_team_frame, read_frame_csv, write_frame_csv, BatchItem,
    FrameError, FrameSidecar, PlayerPanel, TreatmentFrame,
};
use crate::ingestion::{
    build_patch_timeline, load_catalog, load_matches, top_champions, ChampionCatalog, ChampionId,
    IngestError, LoadOptions, TelemetryTables,
};
use crate::synthetic::{generate, SyntheticSpec};
use crate::tree::{export, fit, to_dot, trim, CausalTree, ExportFormat, TreeError};

use super::{Cli, CliError, Command, FitScope, RunConfig, RunManifest, SkippedEntry, EXIT_OK};

struct Ctx {
    config: RunConfig,
    manifest: RunManifest,
}

pub(super) fn execute(cli: &Cli, argv: Vec<String>) -> i32 {
    let name = cli.command.name();
    let (config, early) = match cli
        .effective_config()
        .and_then(|c| c.validate().map(|()| c))
    {
        Ok(c) => (c, None),
        Err(e) => {
            let mut c = RunConfig::default();
            if let Some(o) = &cli.out {
                c.out = o.clone();
            }
            (c, Some(e))
        }
    };
    let threads = config
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let mut ctx = Ctx {
        manifest: RunManifest::new(name, argv, config.clone(), threads),
        config,
    };

    let result = match early {
        Some(e) => Err(e),
        None => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, cli, &mut ctx)),
            Err(e) => Err(CliError::Usage(format!("thread pool: {e}"))),
        },
    };
    let code = match &result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ctx.manifest.exit_code = code;
    ctx.manifest.error = result.err().map(|e| e.to_string());
    let path = RunManifest::path(&ctx.config.out, name);
    let written = fs::create_dir_all(&ctx.config.out).and_then(|()| {
        fs::write(
            &path,
            serde_json::to_vec_pretty(&ctx.manifest).expect("manifest serializes"),
        )
    });
    if let Err(e) = written {
        eprintln!("error: cannot write {}: {e}", path.display());
    }
    code
}

fn dispatch(command: &Command, cli: &Cli, ctx: &mut Ctx) -> Result<(), CliError> {
    match command {
        Command::Ingest => cmd_ingest(ctx),
        Command::Features => cmd_features(ctx),
        Command::Fit { scope } => cmd_fit(ctx, scope),
        Command::Analyze => cmd_analyze(ctx),
        Command::Synth { spec } => cmd_synth(ctx, spec, cli.seed),
        Command::Report { alpha } => cmd_report(ctx, *alpha),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl Ctx {
    fn out(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.config.out.join(rel)
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::write(path, bytes).map_err(io_err(path))?;
        self.manifest.record_output(path, bytes);
        Ok(())
    }

    fn skip(&mut self, frame: String, reason: String) {
        log::warn!("skipping {frame}: {reason}");
        self.manifest
            .skipped_frames
            .push(SkippedEntry { frame, reason });
    }
}

struct Loaded {
    /// Every valid row, used for history features.
    all: TelemetryTables,
    /// Rows used for frames and reports.
    scoped: TelemetryTables,
    catalog: ChampionCatalog,
}

fn load(ctx: &mut Ctx) -> Result<Loaded, CliError> {
    let (matches, players) = ctx.config.telemetry_paths()?;
    let (matches, players) = (matches.to_path_buf(), players.to_path_buf());
    let catalog_path = ctx.config.inputs.catalog.clone();
    for p in [Some(&matches), Some(&players), catalog_path.as_ref()]
        .into_iter()
        .flatten()
    {
        ctx.manifest.record_input(p);
    }
    let catalog = match &catalog_path {
        Some(p) => load_catalog(p)?,
        None => ChampionCatalog::default(),
    };
    let opts = LoadOptions {
        max_reject_rate: ctx.config.max_reject_rate,
        catalog: catalog_path.as_ref().map(|_| &catalog),
    };
    let loaded = ctx
        .manifest
        .stage("ingest", |_| load_matches(&matches, &players, &opts));
    let all = match loaded {
        Ok(t) => t,
        Err(IngestError::RejectRateExceeded {
            rate,
            threshold,
            rejected,
            total,
            report,
        }) => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf).map_err(IngestError::from)?;
            ctx.write(&ctx.out("rejects.csv"), &buf)?;
            ctx.manifest.count("rows_read", total);
            ctx.manifest.count("rejects", rejected);
            return Err(IngestError::RejectRateExceeded {
                rate,
                threshold,
                rejected,
                total,
                report,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    let mut buf = Vec::new();
    all.rejects.write_csv(&mut buf).map_err(IngestError::from)?;
    ctx.write(&ctx.out("rejects.csv"), &buf)?;

    let scoped = if ctx.config.competitive_only {
        all.competitive()
    } else {
        all.clone()
    };
    let m = &mut ctx.manifest;
    m.count("rows_read", all.rows_read);
    m.count("rejects", all.rejects.len());
    m.count("matches", all.matches.len());
    m.count("player_matches", all.player_matches.len());
    m.count("scoped_matches", scoped.matches.len());
    m.count("scoped_player_matches", scoped.player_matches.len());
    m.count("catalog_champions", catalog.len());
    Ok(Loaded {
        all,
        scoped,
        catalog,
    })
}

fn features(ctx: &mut Ctx, loaded: &Loaded) -> Vec<PlayerDerivedFeatures> {
    let gap = ctx.config.session_gap_secs;
    let f = ctx
        .manifest
        .stage("features", |_| compute_features(&loaded.all, gap));
    ctx.manifest.count("feature_rows", f.len());
    f
}

fn cmd_ingest(ctx: &mut Ctx) -> Result<(), CliError> {
    let loaded = load(ctx)?;
    let timeline = build_patch_timeline(&loaded.scoped.matches);
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["patch", "first_seen"])
        .map_err(IngestError::from)?;
    for e in timeline.entries() {
        out.write_record([e.version.to_string(), e.first_seen.to_string()])
            .map_err(IngestError::from)?;
    }
    let bytes = out
        .into_inner()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.write(&ctx.out("patch_timeline.csv"), &bytes)?;
    ctx.manifest.count("patches", timeline.len());
    Ok(())
}

fn cmd_features(ctx: &mut Ctx) -> Result<(), CliError> {
    let loaded = load(ctx)?;
    let feats = features(ctx, &loaded);
    let mut buf = Vec::new();
    write_features_csv(&feats, &mut buf)?;
    ctx.write(&ctx.out("features.csv"), &buf)?;

    let mut columns = vec![
        serde_json::json!({"position": 0, "name": "user_id", "kind": "key"}),
        serde_json::json!({"position": 1, "name": "match_id", "kind": "key"}),
    ];
    for (i, (name, kind)) in feature_schema().into_iter().enumerate() {
        columns.push(serde_json::json!({"position": i + 2, "name": name, "kind": kind}));
    }
    let manifest = serde_json::json!({
        "file": "features.csv",
        "missing": "empty field",
        "order": "user_id ascending, then match start, then match_id",
        "columns": columns,
    });
    ctx.write(
        &ctx.out("features_columns.json"),
        &serde_json::to_vec_pretty(&manifest).expect("json"),
    )
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_frame(ctx: &mut Ctx, stem: &str, frame: &TreatmentFrame) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_frame_csv(frame, &mut buf)?;
    ctx.write(&ctx.out(format!("frames/{stem}.csv")), &buf)?;
    let sidecar = serde_json::to_vec_pretty(&FrameSidecar::describe(frame)).expect("json");
    ctx.write(&ctx.out(format!("frames/{stem}.json")), &sidecar)
}

fn write_tree(ctx: &mut Ctx, dir: &Path, stem: &str, tree: &CausalTree) -> Result<(), CliError> {
    ctx.write(
        &dir.join(format!("{stem}.json")),
        export(tree, ExportFormat::Json).as_bytes(),
    )?;
    ctx.write(
        &dir.join(format!("{stem}.dot")),
        export(tree, ExportFormat::Dot).as_bytes(),
    )
}

fn fit_checked(
    frame: &TreatmentFrame,
    config: &crate::tree::TreeConfig,
) -> Result<CausalTree, TreeError> {
    let tree = fit(frame, config)?;
    tree.check_invariants()?;
    Ok(tree)
}

/// Fits one frame; unfittable frames are logged as skipped. A built frame is
/// saved under `frames/<frame_stem>.csv` when `frame_stem` is given.
fn fit_single(
    ctx: &mut Ctx,
    stem: &str,
    frame_stem: Option<String>,
    frame: Result<TreatmentFrame, FrameError>,
) -> Result<(), CliError> {
    let frame = match frame {
        Ok(f) => f,
        Err(
            e @ (FrameError::DegenerateArm { .. }
            | FrameError::Empty(_)
            | FrameError::MissingPatch(_)),
        ) => {
            ctx.skip(stem.to_string(), e.to_string());
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    ctx.manifest.count("frame_rows", frame.n_rows());
    if let Some(fs) = frame_stem {
        write_frame(ctx, &fs, &frame)?;
    }
    let config = ctx.config.tree_config();
    match ctx.manifest.stage("fit", |_| fit_checked(&frame, &config)) {
        Ok(tree) => {
            ctx.manifest.count("trees", 1);
            let dir = ctx.config.trees_dir();
            write_tree(ctx, &dir, stem, &tree)
        }
        Err(e @ (TreeError::Unfittable(_) | TreeError::InsufficientArm { .. })) => {
            ctx.skip(stem.to_string(), e.to_string());
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_fit(ctx: &mut Ctx, scope: &FitScope) -> Result<(), CliError> {
    match scope {
        FitScope::Frame(path) => {
            let sidecar_path = path.with_extension("json");
            ctx.manifest.record_input(path);
            ctx.manifest.record_input(&sidecar_path);
            let text = fs::read_to_string(&sidecar_path).map_err(io_err(&sidecar_path))?;
            let sidecar: FrameSidecar = serde_json::from_str(&text).map_err(FrameError::from)?;
            let file = fs::File::open(path).map_err(io_err(path))?;
            let frame = read_frame_csv(std::io::BufReader::new(file), &sidecar)?;
            let stem = format!(
                "frame_{}",
                slug(&path.file_stem().unwrap_or_default().to_string_lossy())
            );
            fit_single(ctx, &stem, None, Ok(frame))
        }
        FitScope::Team(pair) => {
            let loaded = load(ctx)?;
            if loaded.catalog.is_empty() {
                return Err(CliError::Usage("team frames need inputs.catalog".into()));
            }
            let frame = build_team_frame(
                &loaded.scoped.matches,
                &loaded.scoped.player_matches,
                &loaded.catalog,
                *pair,
            );
            let frame_stem = format!("frame_team_{}_{}", pair.control, pair.treated);
            fit_single(ctx, &format!("team_{pair}"), Some(frame_stem), frame)
        }
        FitScope::Player(key, pair) => {
            let loaded = load(ctx)?;
            let champion = if loaded.catalog.is_empty() {
                ChampionId::new(key.as_str())
            } else {
                loaded
                    .catalog
                    .resolve(key)
                    .ok_or_else(|| CliError::Usage(format!("unknown champion `{key}`")))?
            };
            let feats = features(ctx, &loaded);
            let panel = PlayerPanel::build(&loaded.scoped, &feats);
            let frame = build_player_frame(&panel, &loaded.catalog, &champion, *pair);
            let name = slug(loaded.catalog.display_name(&champion));
            let frame_stem = format!("frame_{name}_{}_{}", pair.control, pair.treated);
            fit_single(
                ctx,
                &format!("player_{name}_{pair}"),
                Some(frame_stem),
                frame,
            )
        }
        FitScope::Batch => fit_batch(ctx),
    }
}

fn fit_batch(ctx: &mut Ctx) -> Result<(), CliError> {
    let loaded = load(ctx)?;
    let feats = features(ctx, &loaded);
    let champions = top_champions(
        &loaded.scoped.player_matches,
        &loaded.catalog,
        ctx.config.top_k_champions,
    );
    let timeline = build_patch_timeline(&loaded.scoped.matches);
    let panel = ctx
        .manifest
        .stage("panel", |_| PlayerPanel::build(&loaded.scoped, &feats));
    let config = ctx.config.tree_config();
    let dir = ctx.config.trees_dir();
    let chunk = rayon::current_num_threads().max(1) * 4;

    let mut items = batch_frames(
        &panel,
        &loaded.catalog,
        &champions,
        &timeline,
        config.min_arm_count,
    )
    .peekable();
    let mut index = csv::Writer::from_writer(Vec::new());
    index
        .write_record([
            "champion",
            "champion_name",
            "pair",
            "n_rows",
            "n_treated",
            "n_control",
            "leaves",
            "root_tau",
            "root_p",
            "file",
        ])
        .map_err(IngestError::from)?;
    let (mut n_trees, mut n_frames) = (0usize, 0usize);
    let start = std::time::Instant::now();
    while items.peek().is_some() {
        let batch: Vec<BatchItem> = items.by_ref().take(chunk).collect();
        let fitted: Vec<(BatchItem, Option<Result<CausalTree, TreeError>>)> = batch
            .into_par_iter()
            .map(|item| {
                let tree = match &item {
                    BatchItem::Frame { frame, .. } => Some(fit_checked(frame, &config)),
                    BatchItem::Skipped(_) => None,
                };
                (item, tree)
            })
            .collect();
        for (item, tree) in fitted {
            match (item, tree) {
                (BatchItem::Skipped(s), _) => {
                    let name = loaded.catalog.display_name(&s.champion).to_string();
                    ctx.skip(format!("player_{}_{}", slug(&name), s.pair), s.reason);
                }
                (
                    BatchItem::Frame {
                        champion,
                        pair,
                        frame,
                    },
                    Some(result),
                ) => {
                    n_frames += 1;
                    let name = loaded.catalog.display_name(&champion).to_string();
                    let stem = format!("player_{}_{pair}", slug(&name));
                    match result {
                        Ok(tree) => {
                            n_trees += 1;
                            write_tree(ctx, &dir, &stem, &tree)?;
                            let (nt, nc) = frame.arm_sizes();
                            index
                                .write_record([
                                    champion.to_string(),
                                    name,
                                    pair.to_string(),
                                    frame.n_rows().to_string(),
                                    nt.to_string(),
                                    nc.to_string(),
                                    tree.root.leaves().len().to_string(),
                                    crate::format::fmt_g9(tree.root.effect.tau),
                                    crate::format::fmt_g9(tree.root.effect.p_value),
                                    format!("{stem}.json"),
                                ])
                                .map_err(IngestError::from)?;
                        }
                        Err(e @ TreeError::Invariant(_)) => return Err(e.into()),
                        Err(e) => ctx.skip(stem, e.to_string()),
                    }
                }
                (BatchItem::Frame { .. }, None) => unreachable!("frames are always fitted"),
            }
        }
    }
    ctx.manifest.timings.push(super::StageTiming {
        stage: "fit".into(),
        millis: start.elapsed().as_secs_f64() * 1e3,
    });
    let bytes = index
        .into_inner()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.write(&dir.join("index.csv"), &bytes)?;
    ctx.manifest.count("champions", champions.len());
    ctx.manifest.count("pairs", timeline.pairs().len());
    ctx.manifest.count("frames", n_frames);
    ctx.manifest.count("trees", n_trees);
    ctx.manifest
        .count("skipped_frames", ctx.manifest.skipped_frames.len());
    Ok(())
}

/// Fitted trees in `dir`, by file name. Other JSON files are ignored.
fn read_trees(ctx: &mut Ctx, dir: &Path) -> Result<Vec<(String, CausalTree)>, CliError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut trees = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p).map_err(io_err(&p))?;
        match CausalTree::from_json(&text) {
            Ok(t) => {
                ctx.manifest.record_input(&p);
                trees.push((
                    p.file_stem()
                        .unwrap_or_default()
                        .to_string_lossy()
                        .into_owned(),
                    t,
                ));
            }
            Err(e) => log::debug!("{} is not a tree: {e}", p.display()),
        }
    }
    ctx.manifest.count("trees_read", trees.len());
    Ok(trees)
}

fn cmd_analyze(ctx: &mut Ctx) -> Result<(), CliError> {
    let a = ctx.config.analysis.clone();
    let mut buf = Vec::new();
    report::write_manifest(&mut buf)?;
    ctx.write(&ctx.out("reports_manifest.json"), &buf)?;

    let loaded = load(ctx)?;
    let timeline = build_patch_timeline(&loaded.scoped.matches);
    let tables = &loaded.scoped;

    if a.ate_series {
        match analysis::ate_series(
            &tables.matches,
            &tables.player_matches,
            &timeline,
            a.outcome,
        ) {
            Ok(series) => {
                let mut buf = Vec::new();
                report::write_ate_series_csv(&series, &mut buf)?;
                ctx.write(&ctx.out("ate_series.csv"), &buf)?;
            }
            Err(e) => log::warn!("ate series skipped: {e}"),
        }
    }
    if a.win_rates {
        let champions = top_champions(
            &tables.player_matches,
            &loaded.catalog,
            a.win_rate_champions,
        );
        let series: Vec<_> = champions
            .iter()
            .map(|c| analysis::win_rate_series(&tables.matches, &tables.player_matches, c))
            .collect();
        let mut buf = Vec::new();
        report::write_win_rates_csv(&series, &loaded.catalog, &mut buf)?;
        ctx.write(&ctx.out("win_rates.csv"), &buf)?;
    }
    if a.heatmaps && !ctx.config.binnings.is_empty() {
        let feats = features(ctx, &loaded);
        for spec in ctx.config.binnings.clone() {
            if a.heatmap_mode == HeatmapMode::Ate && timeline.len() < 2 {
                log::warn!("heatmap {} skipped: fewer than 2 patches", spec.feature);
                continue;
            }
            let rows = analysis::heatmap_rows(tables, &feats, &spec.feature, a.outcome)?;
            let table = analysis::heatmap_table(&rows, &spec, &timeline, a.heatmap_mode)?;
            let mut buf = Vec::new();
            report::write_heatmap_csv(&table, &mut buf)?;
            ctx.write(
                &ctx.out(format!("heatmap_{}.csv", slug(&spec.feature))),
                &buf,
            )?;
        }
    }
    if a.importance || a.effect_gaps {
        let dir = ctx.config.trees_dir();
        let trees: Vec<CausalTree> = read_trees(ctx, &dir)?.into_iter().map(|(_, t)| t).collect();
        if trees.is_empty() {
            log::warn!(
                "no trees in {}; importance and effect-gap reports are empty",
                dir.display()
            );
        }
        let importance = analysis::feature_importance(&trees);
        if a.importance {
            let mut buf = Vec::new();
            report::write_feature_importance_csv(&importance, &mut buf)?;
            ctx.write(&ctx.out("feature_importance.csv"), &buf)?;
        }
        if a.effect_gaps {
            let gaps =
                analysis::effect_gap_report(&trees, &importance, a.top_features, a.gap_weighting);
            let mut buf = Vec::new();
            report::write_effect_gaps_csv(&gaps, &mut buf)?;
            ctx.write(&ctx.out("effect_gaps.csv"), &buf)?;
        }
    }
    Ok(())
}

fn cmd_synth(ctx: &mut Ctx, spec_path: &Path, seed_flag: Option<u64>) -> Result<(), CliError> {
    ctx.manifest.record_input(spec_path);
    let text = fs::read_to_string(spec_path).map_err(io_err(spec_path))?;
    let mut spec = SyntheticSpec::from_json(&text)?;
    if let Some(s) = seed_flag {
        spec.seed = s;
    }
    let (frame, oracle) = ctx.manifest.stage("generate", |_| generate(&spec))?;
    let (nt, nc) = frame.arm_sizes();
    ctx.manifest.count("rows", frame.n_rows());
    ctx.manifest.count("treated", nt);
    ctx.manifest.count("control", nc);

    let mut buf = Vec::new();
    write_frame_csv(&frame, &mut buf)?;
    ctx.write(&ctx.out("synth/frame.csv"), &buf)?;
    let sidecar = serde_json::to_vec_pretty(&FrameSidecar::describe(&frame)).expect("json");
    ctx.write(&ctx.out("synth/frame.json"), &sidecar)?;
    ctx.write(
        &ctx.out("synth/oracle.json"),
        &serde_json::to_vec_pretty(&oracle).expect("json"),
    )?;
    ctx.write(
        &ctx.out("synth/spec.json"),
        &serde_json::to_vec_pretty(&spec).expect("json"),
    )
}

fn cmd_report(ctx: &mut Ctx, alpha: Option<f64>) -> Result<(), CliError> {
    let alpha = alpha.unwrap_or(ctx.config.display_alpha());
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(CliError::Usage(format!(
            "display alpha must be positive, got {alpha}"
        )));
    }
    let dir = ctx.config.trees_dir();
    let trees = read_trees(ctx, &dir)?;
    if trees.is_empty() {
        log::warn!("no trees in {}", dir.display());
    }
    let mut summary = csv::Writer::from_writer(Vec::new());
    summary
        .write_record([
            "tree",
            "fitted_nodes",
            "shown_nodes",
            "leaves",
            "root_tau",
            "root_p",
        ])
        .map_err(IngestError::from)?;
    for (stem, tree) in &trees {
        let shown = trim(tree, alpha);
        ctx.write(
            &ctx.out(format!("report/{stem}.trimmed.json")),
            &serde_json::to_vec_pretty(&shown).expect("json"),
        )?;
        ctx.write(
            &ctx.out(format!("report/{stem}.trimmed.dot")),
            to_dot(&shown).as_bytes(),
        )?;
        summary
            .write_record([
                stem.clone(),
                tree.root.node_count().to_string(),
                shown.root.node_count().to_string(),
                tree.root.leaves().len().to_string(),
                crate::format::fmt_g9(tree.root.effect.tau),
                crate::format::fmt_g9(tree.root.effect.p_value),
            ])
            .map_err(IngestError::from)?;
    }
    let bytes = summary
        .into_inner()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.write(&ctx.out("report/summary.csv"), &bytes)
}

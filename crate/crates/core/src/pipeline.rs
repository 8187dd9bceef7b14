//! End-to-end runs: load and normalize the input, generate candidates,
//! dilate, select, connect, write the artifacts and evaluate.
//!
//! Everything between loading and writing happens in the unit-box frame:
//! the input is scaled so its longest bbox axis spans [0, 1]. Written
//! skeletons and selections are mapped back to input coordinates.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::index::sample as sample_indices;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::connect::{connect_selected, skeleton_stats, Skeleton, SkeletonStats};
use crate::cover::{build_coverage, dilate, CoverageMatrix, DilationMode};
use crate::error::{Error, Result};
use crate::geom::{Aabb, NormalizeTransform, Point3};
use crate::inner::{
    candidates_random, candidates_voronoi_cloud, candidates_voronoi_mesh, estimate_radii, CandidateBall,
    CandidateOrigin, GenerationStats, Shape,
};
use crate::io::{
    format_g9, load_mesh, load_point_cloud, read_index_list, read_skeleton, write_mesh, write_point_cloud,
    write_report, write_skeleton, OrientedPointCloud, TriangleMesh,
};
use crate::partition::{partition_samples, solve_partitioned, PartStats, PartitionSpec};
use crate::recon::{hausdorff, sample_reconstruction, ErrorTriple};
use crate::rng::{stage_rng, stream_rng, Stage};
use crate::sample::{as_samples, sample_mesh_surface_stage, SampleSource, SurfaceSampleSet};
use crate::solve::{Fixings, Selection, Solver};

/// Sample weight radius for the connection step when dilation is by scaling.
pub const SCALING_CONNECT_DELTA: f64 = 0.02;
pub const DEFAULT_N_EVAL: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputType {
    Mesh,
    Cloud,
}

impl InputType {
    /// `.obj` is a mesh; `.ply` is a mesh when it declares faces; anything
    /// else is read as an oriented point cloud.
    pub fn detect(path: &Path) -> Result<InputType> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "obj" => Ok(InputType::Mesh),
            "ply" => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let faces = text
                    .lines()
                    .take_while(|l| l.trim() != "end_header")
                    .filter_map(|l| l.strip_prefix("element face "))
                    .any(|n| n.trim().parse::<usize>().is_ok_and(|n| n > 0));
                Ok(if faces { InputType::Mesh } else { InputType::Cloud })
            }
            _ => Ok(InputType::Cloud),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateMode {
    Voronoi,
    Random,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PartitionConfig {
    pub k: Option<usize>,
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    /// Detected from the file when `None`.
    pub input_type: Option<InputType>,
    pub n_cover: usize,
    pub n_gen: usize,
    pub candidates: CandidateMode,
    pub n_random: usize,
    pub dilation: DilationMode,
    pub solver: Solver,
    pub seed: u64,
    pub ignore: Option<PathBuf>,
    pub force_in: Option<PathBuf>,
    pub force_out: Option<PathBuf>,
    pub partition: Option<PartitionConfig>,
    pub connect_boost: f64,
    /// Output prefix.
    pub out: PathBuf,
    pub n_eval: usize,
    pub dump_instance: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::new(),
            input_type: None,
            n_cover: 1500,
            n_gen: 4000,
            candidates: CandidateMode::Voronoi,
            n_random: 10_000,
            dilation: DilationMode::default(),
            solver: Solver::default(),
            seed: 0,
            ignore: None,
            force_in: None,
            force_out: None,
            partition: None,
            connect_boost: 1.0,
            out: PathBuf::from("out"),
            n_eval: DEFAULT_N_EVAL,
            dump_instance: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_cover == 0 || self.n_gen == 0 || self.n_random == 0 || self.n_eval == 0 {
            return bad("sample and candidate counts must be at least 1".into());
        }
        if self.candidates == CandidateMode::Voronoi && self.n_gen < 4 {
            return bad(format!("n_gen must be at least 4 for Voronoi candidates, got {}", self.n_gen));
        }
        if !(self.connect_boost > 0.0 && self.connect_boost.is_finite()) {
            return bad(format!("connect boost must be > 0, got {}", self.connect_boost));
        }
        if let Some(PartitionConfig { k: Some(0), .. }) = self.partition {
            return bad("partition k must be at least 1".into());
        }
        self.dilation.validate()
    }

    /// Radius of the surface-sample balls in the connection triangulation.
    pub fn connect_delta(&self) -> f64 {
        match self.dilation {
            DilationMode::Offset(d) => d,
            DilationMode::Scaling(_) => SCALING_CONNECT_DELTA,
        }
    }
}

/// Input in the unit-box frame.
#[derive(Debug, Clone)]
pub enum Input {
    Mesh(TriangleMesh),
    Cloud(OrientedPointCloud),
}

#[derive(Debug, Clone)]
pub struct LoadedInput {
    pub input: Input,
    pub input_type: InputType,
    pub transform: NormalizeTransform,
}

impl LoadedInput {
    pub fn from_mesh(mesh: &TriangleMesh) -> Result<Self> {
        let bbox = mesh.bbox().ok_or(Error::EmptyMesh)?;
        let transform = NormalizeTransform::for_box(&bbox)?;
        Ok(LoadedInput {
            input: Input::Mesh(mesh.map_vertices(|p| transform.apply(p))),
            input_type: InputType::Mesh,
            transform,
        })
    }

    pub fn from_cloud(cloud: &OrientedPointCloud) -> Result<Self> {
        let bbox = Aabb::from_points(&cloud.points)
            .ok_or_else(|| Error::DegenerateInput("point cloud is empty".into()))?;
        let transform = NormalizeTransform::for_box(&bbox)?;
        Ok(LoadedInput {
            input: Input::Cloud(OrientedPointCloud {
                points: cloud.points.iter().map(|&p| transform.apply(p)).collect(),
                normals: cloud.normals.clone(),
            }),
            input_type: InputType::Cloud,
            transform,
        })
    }

    pub fn shape(&self) -> Shape<'_> {
        match &self.input {
            Input::Mesh(m) => Shape::Mesh(m),
            Input::Cloud(c) => Shape::Cloud(c),
        }
    }

    /// Bounding-box diagonal in the unit-box frame.
    pub fn diagonal(&self) -> f64 {
        let bbox = match &self.input {
            Input::Mesh(m) => m.bbox(),
            Input::Cloud(c) => Aabb::from_points(&c.points),
        };
        bbox.map_or(0.0, |b| b.diagonal())
    }
}

pub fn load_input(path: &Path, ty: Option<InputType>) -> Result<LoadedInput> {
    let ty = match ty {
        Some(t) => t,
        None => InputType::detect(path)?,
    };
    match ty {
        InputType::Mesh => LoadedInput::from_mesh(&load_mesh(path)?),
        InputType::Cloud => LoadedInput::from_cloud(&load_point_cloud(path)?),
    }
}

/// Seeded subset of `k` cloud points (all when the cloud is small enough),
/// kept in input order.
fn cloud_subset(cloud: &OrientedPointCloud, k: usize, seed: u64, stage: Stage) -> SurfaceSampleSet {
    let all = as_samples(cloud);
    if cloud.len() <= k {
        return all;
    }
    let mut idx = sample_indices(&mut stage_rng(seed, stage), cloud.len(), k).into_vec();
    idx.sort_unstable();
    SurfaceSampleSet {
        points: idx.iter().map(|&i| cloud.points[i]).collect(),
        normals: Some(idx.iter().map(|&i| cloud.normals[i]).collect()),
        source: SampleSource::Cloud,
    }
}

/// Surface samples for the cover universe (`Stage::CoverSamples`) or for
/// candidate generation and connection (`Stage::GenSamples`).
pub fn surface_samples(input: &LoadedInput, m: usize, seed: u64, stage: Stage) -> Result<SurfaceSampleSet> {
    match &input.input {
        Input::Mesh(mesh) => sample_mesh_surface_stage(mesh, m, seed, stage),
        Input::Cloud(c) => Ok(cloud_subset(c, m, seed, stage)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    #[serde(flatten)]
    pub errors: ErrorTriple,
    pub surface_samples: usize,
    pub reconstruction_drawn: usize,
    pub reconstruction_kept: usize,
    pub diagonal: f64,
}

/// Hausdorff errors of a unit-box-frame skeleton against the input. Mesh
/// inputs are resampled with `n_eval` points; clouds use every point.
pub fn evaluate(skel: &Skeleton, input: &LoadedInput, n_eval: usize, seed: u64) -> Result<Evaluation> {
    let surface = match &input.input {
        Input::Mesh(m) => sample_mesh_surface_stage(m, n_eval, seed, Stage::EvalSurface)?.points,
        Input::Cloud(c) => c.points.clone(),
    };
    let rec = sample_reconstruction(skel, n_eval, seed)?;
    let diagonal = input.diagonal();
    let errors = hausdorff(&surface, &rec.points, diagonal)?;
    Ok(Evaluation {
        errors,
        surface_samples: surface.len(),
        reconstruction_drawn: rec.drawn,
        reconstruction_kept: rec.points.len(),
        diagonal,
    })
}

fn skeleton_to_input(s: &Skeleton, tf: &NormalizeTransform) -> Skeleton {
    Skeleton {
        vertices: s.vertices.iter().map(|&p| tf.invert(p)).collect(),
        radii: s.radii.iter().map(|&r| tf.invert_length(r)).collect(),
        ..s.clone()
    }
}

fn skeleton_to_unit(s: &Skeleton, tf: &NormalizeTransform) -> Skeleton {
    Skeleton {
        vertices: s.vertices.iter().map(|&p| tf.apply(p)).collect(),
        radii: s.radii.iter().map(|&r| tf.apply_length(r)).collect(),
        ..s.clone()
    }
}

/// Rows to ignore: each line is a cover-sample index, or six numbers
/// `xmin ymin zmin xmax ymax zmax` giving a box in input coordinates whose
/// samples are all ignored.
pub fn read_ignore(path: &Path, samples: &[Point3], tf: &NormalizeTransform) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            msg,
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.len() {
            1 => {
                let j: usize = toks[0]
                    .parse()
                    .map_err(|_| perr(format!("expected a sample index, got `{}`", toks[0])))?;
                if j >= samples.len() {
                    return Err(Error::IndexOutOfRange {
                        index: j,
                        len: samples.len(),
                    });
                }
                rows.push(j);
            }
            6 => {
                let v: Vec<f64> = toks
                    .iter()
                    .map(|t| t.parse().map_err(|_| perr(format!("invalid number `{t}`"))))
                    .collect::<Result<_>>()?;
                let lo = tf.apply(Point3::new(v[0], v[1], v[2]));
                let hi = tf.apply(Point3::new(v[3], v[4], v[5]));
                let b = Aabb {
                    min: lo.min_by_component(hi),
                    max: lo.max_by_component(hi),
                };
                rows.extend((0..samples.len()).filter(|&j| b.contains(samples[j])));
            }
            n => return Err(perr(format!("expected 1 or 6 fields, got {n}"))),
        }
    }
    rows.sort_unstable();
    rows.dedup();
    Ok(rows)
}

/// Every required cover sample lies within `r'` of a selected center,
/// checked directly on positions.
pub fn coverage_holds(samples: &[Point3], required: &[bool], selected: &[CandidateBall]) -> bool {
    use rayon::prelude::*;
    (0..samples.len()).into_par_iter().all(|j| {
        !required[j]
            || selected
                .iter()
                .any(|b| b.center.distance(samples[j]) <= b.dilated_radius())
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Counts {
    pub surface_samples: usize,
    pub generation_samples: usize,
    pub candidates: usize,
    pub dropped_candidates: usize,
    pub ignored_samples: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DilationReport {
    pub mode: &'static str,
    pub delta_r: Option<f64>,
    pub sigma_r: Option<f64>,
}

impl From<DilationMode> for DilationReport {
    fn from(d: DilationMode) -> Self {
        match d {
            DilationMode::Offset(v) => DilationReport {
                mode: "offset",
                delta_r: Some(v),
                sigma_r: None,
            },
            DilationMode::Scaling(v) => DilationReport {
                mode: "scale",
                delta_r: None,
                sigma_r: Some(v),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    pub name: crate::solve::SolverKind,
    pub optimal: bool,
    pub objective: usize,
    pub time_limit: Option<f64>,
    pub forced_in: Vec<usize>,
    pub forced_out: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub k: usize,
    pub parts: Vec<PartStats>,
    pub repaired_rows: Vec<usize>,
    pub repair_chosen: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionReport {
    pub surface_samples: usize,
    pub sample_radius: f64,
    pub boost: f64,
    /// Coordinate perturbation of the connection triangulation.
    pub jitter: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub load: f64,
    pub sampling: f64,
    pub candidates: f64,
    pub coverage: f64,
    pub selection: f64,
    pub connection: f64,
    pub evaluation: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub input: String,
    pub input_type: InputType,
    pub seed: u64,
    pub candidate_mode: CandidateMode,
    pub counts: Counts,
    pub dilation: DilationReport,
    pub solver: SolverReport,
    pub coverage_verified: bool,
    pub errors: Evaluation,
    pub skeleton: SkeletonStats,
    pub generation: GenerationStats,
    pub connection: ConnectionReport,
    pub partition: Option<PartitionReport>,
    pub normalize: NormalizeTransform,
    pub outputs: Vec<String>,
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize)]
struct ErrorReport {
    input: String,
    seed: u64,
    error: ErrorBody,
}

#[derive(Debug, Clone, Serialize)]
struct ErrorBody {
    category: &'static str,
    message: String,
    uncovered_samples: Option<Vec<usize>>,
    part: Option<usize>,
}

/// In-memory results of a run, all in the unit-box frame.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub loaded: LoadedInput,
    pub cover: SurfaceSampleSet,
    pub gen: SurfaceSampleSet,
    pub candidates: Vec<CandidateBall>,
    pub matrix: CoverageMatrix,
    pub selection: Selection,
    pub skeleton: Skeleton,
}

pub fn output_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Runs the pipeline and writes `<out>.skel.obj`, `<out>.skel.obj.radii`,
/// `<out>.selection.txt` and `<out>.report.json`. On failure after the
/// configuration is accepted, the report file describes the error instead.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let result = run_inner(config);
    if let Err(e) = &result {
        let (uncovered, part) = match e {
            Error::Infeasible { rows, part } => (Some(rows.clone()), *part),
            _ => (None, None),
        };
        let report = ErrorReport {
            input: config.input.display().to_string(),
            seed: config.seed,
            error: ErrorBody {
                category: e.category(),
                message: e.to_string(),
                uncovered_samples: uncovered,
                part,
            },
        };
        let _ = write_report(&output_path(&config.out, ".report.json"), &report);
    }
    result
}

fn run_inner(config: &RunConfig) -> Result<RunOutput> {
    let t_total = Instant::now();
    let mut timing = Timing::default();

    let t = Instant::now();
    let loaded = load_input(&config.input, config.input_type)?;
    timing.load = secs(t);

    let t = Instant::now();
    let cover = surface_samples(&loaded, config.n_cover, config.seed, Stage::CoverSamples)?;
    let gen = surface_samples(&loaded, config.n_gen, config.seed, Stage::GenSamples)?;
    timing.sampling = secs(t);

    let t = Instant::now();
    let (centers, generation, origin) = match (config.candidates, &loaded.input) {
        (CandidateMode::Random, _) => {
            let (c, s) = candidates_random(loaded.shape(), config.n_random, config.seed)?;
            (c, s, CandidateOrigin::Random)
        }
        (CandidateMode::Voronoi, Input::Mesh(m)) => {
            let (c, s) = candidates_voronoi_mesh(&gen, m, config.seed)?;
            (c, s, CandidateOrigin::Voronoi)
        }
        (CandidateMode::Voronoi, Input::Cloud(_)) => {
            let (c, s) = candidates_voronoi_cloud(&gen)?;
            (c, s, CandidateOrigin::Voronoi)
        }
    };
    let (balls, dropped) = estimate_radii(&centers, origin, &cover)?;
    if balls.is_empty() {
        return Err(Error::DegenerateInput("no interior candidates were generated".into()));
    }
    let candidates = dilate(&balls, config.dilation)?;
    timing.candidates = secs(t);

    let t = Instant::now();
    let mut matrix = build_coverage(&cover.points, &candidates)?;
    let ignored = match &config.ignore {
        Some(p) => read_ignore(p, &cover.points, &loaded.transform)?,
        None => Vec::new(),
    };
    matrix = matrix.into_ignorable(&ignored)?;
    let fix = Fixings::new(
        config.force_in.as_deref().map(read_index_list).transpose()?.unwrap_or_default(),
        config.force_out.as_deref().map(read_index_list).transpose()?.unwrap_or_default(),
    )?;
    let mut outputs = Vec::new();
    if config.dump_instance {
        let p = output_path(&config.out, ".instance.txt");
        matrix.write_instance(&p)?;
        outputs.push(p.display().to_string());
    }
    timing.coverage = secs(t);

    let t = Instant::now();
    let (selection, partition) = match &config.partition {
        None => (config.solver.solve(&matrix, &fix)?, None),
        Some(pc) => {
            let spec = match &pc.labels {
                Some(path) => PartitionSpec::Labels {
                    labels: read_index_list(path)?,
                    k: pc.k,
                },
                None => PartitionSpec::KMeans {
                    k: pc.k.unwrap_or(1),
                    seed: config.seed,
                },
            };
            let centers: Vec<Point3> = candidates.iter().map(|b| b.center).collect();
            let part = partition_samples(&cover.points, &centers, &spec)?;
            let out = solve_partitioned(&matrix, &part, &config.solver, &fix)?;
            let report = PartitionReport {
                k: part.k,
                parts: out.parts,
                repaired_rows: out.repaired_rows,
                repair_chosen: out.repair_chosen,
            };
            (out.selection, Some(report))
        }
    };
    timing.selection = secs(t);
    let selected: Vec<CandidateBall> = selection.chosen.iter().map(|&i| candidates[i]).collect();
    let coverage_verified = coverage_holds(&cover.points, matrix.required(), &selected);
    assert!(coverage_verified, "selected balls leave a required sample uncovered");

    let t = Instant::now();
    let delta = config.connect_delta();
    let skeleton = connect_selected(&selected, &gen.points, delta, config.connect_boost)?;
    timing.connection = secs(t);

    let skel_path = output_path(&config.out, ".skel.obj");
    write_skeleton(&skel_path, &skeleton_to_input(&skeleton, &loaded.transform))?;
    let sel_path = output_path(&config.out, ".selection.txt");
    write_selection(&sel_path, &selection, &candidates, &loaded.transform)?;

    // Evaluate what was written, so re-evaluating the files reproduces it.
    let t = Instant::now();
    let written = skeleton_to_unit(&read_skeleton(&skel_path)?, &loaded.transform);
    let errors = evaluate(&written, &loaded, config.n_eval, config.seed)?;
    timing.evaluation = secs(t);

    let report_path = output_path(&config.out, ".report.json");
    outputs.splice(
        0..0,
        [&skel_path, &crate::io::radii_path(&skel_path), &sel_path, &report_path]
            .iter()
            .map(|p| p.display().to_string()),
    );
    timing.total = secs(t_total);
    let report = RunReport {
        input: config.input.display().to_string(),
        input_type: loaded.input_type,
        seed: config.seed,
        candidate_mode: config.candidates,
        counts: Counts {
            surface_samples: cover.len(),
            generation_samples: gen.len(),
            candidates: candidates.len(),
            dropped_candidates: dropped,
            ignored_samples: ignored.len(),
            selected: selection.objective,
        },
        dilation: config.dilation.into(),
        solver: SolverReport {
            name: selection.solver,
            optimal: selection.optimal,
            objective: selection.objective,
            time_limit: match config.solver {
                Solver::Exact { time_limit } => Some(time_limit.as_secs_f64()),
                Solver::Greedy => None,
            },
            forced_in: fix.forced_in.clone(),
            forced_out: fix.forced_out.clone(),
        },
        coverage_verified,
        errors,
        skeleton: skeleton_stats(&skeleton),
        generation,
        connection: ConnectionReport {
            surface_samples: gen.len(),
            sample_radius: delta,
            boost: config.connect_boost,
            jitter: if selected.len() > 1 {
                let pts: Vec<Point3> = selected.iter().map(|b| b.center).chain(gen.points.iter().copied()).collect();
                crate::tri::jitter(&pts)
            } else {
                0.0
            },
        },
        partition,
        normalize: loaded.transform,
        outputs,
        timing,
    };
    write_report(&report_path, &report)?;
    Ok(RunOutput {
        report,
        loaded,
        cover,
        gen,
        candidates,
        matrix,
        selection,
        skeleton,
    })
}

/// One line per chosen candidate: `index x y z r r'` in input coordinates.
pub fn write_selection(path: &Path, sel: &Selection, cands: &[CandidateBall], tf: &NormalizeTransform) -> Result<()> {
    let mut s = String::from("# index x y z r r_dilated\n");
    for &i in &sel.chosen {
        let b = &cands[i];
        let c = tf.invert(b.center);
        let _ = writeln!(
            s,
            "{} {} {} {} {} {}",
            i,
            format_g9(c.x),
            format_g9(c.y),
            format_g9(c.z),
            format_g9(tf.invert_length(b.radius)),
            format_g9(tf.invert_length(b.dilated_radius()))
        );
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub skeleton: String,
    pub input: String,
    pub seed: u64,
    pub errors: Evaluation,
    pub stats: SkeletonStats,
}

/// Scores any skeleton file (input coordinates) against an input shape.
pub fn run_eval(skeleton: &Path, input: &Path, ty: Option<InputType>, n_eval: usize, seed: u64) -> Result<EvalReport> {
    let loaded = load_input(input, ty)?;
    let skel = read_skeleton(skeleton)?;
    let unit = skeleton_to_unit(&skel, &loaded.transform);
    Ok(EvalReport {
        skeleton: skeleton.display().to_string(),
        input: input.display().to_string(),
        seed,
        errors: evaluate(&unit, &loaded, n_eval, seed)?,
        stats: skeleton_stats(&skel),
    })
}

/// Adds seeded Gaussian noise with standard deviation `amplitude` times the
/// longest bbox extent to every vertex (mesh) or point (cloud, normals kept).
pub fn perturb(input: &Path, ty: Option<InputType>, amplitude: f64, seed: u64, out: &Path) -> Result<()> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise amplitude must be >= 0, got {amplitude}")));
    }
    let ty = match ty {
        Some(t) => t,
        None => InputType::detect(input)?,
    };
    let jitter = |pts: &[Point3]| -> Result<Vec<Point3>> {
        let bbox = Aabb::from_points(pts).ok_or_else(|| Error::DegenerateInput("no points to perturb".into()))?;
        let e = bbox.extent();
        let sigma = amplitude * e.x.max(e.y).max(e.z);
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(pts
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut rng = stream_rng(seed, Stage::Perturb, i as u64);
                p + Point3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng))
            })
            .collect())
    };
    match ty {
        InputType::Mesh => {
            let mesh = load_mesh(input)?;
            let noisy = TriangleMesh {
                vertices: jitter(&mesh.vertices)?,
                triangles: mesh.triangles,
            };
            write_mesh(out, &noisy)
        }
        InputType::Cloud => {
            let cloud = load_point_cloud(input)?;
            let noisy = OrientedPointCloud {
                points: jitter(&cloud.points)?,
                normals: cloud.normals,
            };
            write_point_cloud(out, &noisy)
        }
    }
}

/// A [`Duration`] from seconds, rejecting negative or non-finite values.
pub fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| Error::InvalidParameter(format!("invalid time limit {s}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn defaults_follow_the_standard_setting() {
        let c = RunConfig::default();
        assert_eq!((c.n_cover, c.n_gen, c.n_random, c.seed), (1500, 4000, 10_000, 0));
        assert_eq!(c.dilation, DilationMode::Offset(0.02));
        assert_eq!(c.candidates, CandidateMode::Voronoi);
        assert_eq!(
            c.solver,
            Solver::Exact {
                time_limit: Duration::from_secs(120)
            }
        );
        assert_eq!(c.connect_boost, 1.0);
        assert_eq!(c.connect_delta(), 0.02);
        let s = RunConfig {
            dilation: DilationMode::Scaling(1.5),
            ..c
        };
        assert_eq!(s.connect_delta(), SCALING_CONNECT_DELTA);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for c in [
            RunConfig { n_cover: 0, ..Default::default() },
            RunConfig { n_gen: 3, ..Default::default() },
            RunConfig { connect_boost: 0.0, ..Default::default() },
            RunConfig { dilation: DilationMode::Scaling(0.9), ..Default::default() },
            RunConfig {
                partition: Some(PartitionConfig { k: Some(0), labels: None }),
                ..Default::default()
            },
        ] {
            assert!(matches!(c.validate(), Err(Error::InvalidParameter(_))), "{c:?}");
        }
    }

    #[test]
    fn input_type_detection() {
        let dir = tempfile::tempdir().unwrap();
        let obj = dir.path().join("a.obj");
        assert_eq!(InputType::detect(&obj).unwrap(), InputType::Mesh);
        assert_eq!(InputType::detect(&dir.path().join("a.xyz")).unwrap(), InputType::Cloud);
        let ply = dir.path().join("a.ply");
        std::fs::write(&ply, "ply\nformat ascii 1.0\nelement vertex 0\nelement face 2\nend_header\n").unwrap();
        assert_eq!(InputType::detect(&ply).unwrap(), InputType::Mesh);
        std::fs::write(&ply, "ply\nformat ascii 1.0\nelement vertex 0\nproperty float nx\nend_header\n").unwrap();
        assert_eq!(InputType::detect(&ply).unwrap(), InputType::Cloud);
    }

    #[test]
    fn ignore_file_indices_and_boxes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ignore.txt");
        let samples = vec![Point3::new(0.1, 0.1, 0.1), Point3::new(0.9, 0.9, 0.9), Point3::new(0.5, 0.5, 0.5)];
        // Input frame is twice the unit frame.
        let tf = NormalizeTransform::for_box(&Aabb {
            min: Point3::ORIGIN,
            max: Point3::new(2.0, 2.0, 2.0),
        })
        .unwrap();
        std::fs::write(&p, "# comment\n2\n1.5 1.5 1.5 2 2 2\n").unwrap();
        assert_eq!(read_ignore(&p, &samples, &tf).unwrap(), vec![1, 2]);
        std::fs::write(&p, "7\n").unwrap();
        assert!(matches!(read_ignore(&p, &samples, &tf), Err(Error::IndexOutOfRange { index: 7, len: 3 })));
        std::fs::write(&p, "1 2\n").unwrap();
        assert!(matches!(read_ignore(&p, &samples, &tf), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn skeleton_frames_round_trip() {
        let tf = NormalizeTransform::for_box(&Aabb {
            min: Point3::new(-1.0, 2.0, 0.0),
            max: Point3::new(3.0, 4.0, 1.0),
        })
        .unwrap();
        let s = Skeleton {
            vertices: vec![Point3::new(0.25, 0.5, 0.125)],
            radii: vec![0.125],
            ..Skeleton::default()
        };
        let back = skeleton_to_unit(&skeleton_to_input(&s, &tf), &tf);
        assert_eq!(back, s);
        assert_eq!(skeleton_to_input(&s, &tf).radii, vec![0.5]);
    }

    #[test]
    fn cloud_subsets_are_seeded_and_ordered() {
        let mesh = shapes::icosphere(Point3::ORIGIN, 1.0, 3);
        let cloud = OrientedPointCloud {
            normals: mesh.vertices.iter().map(|p| p.normalized().unwrap()).collect(),
            points: mesh.vertices.clone(),
        };
        let a = cloud_subset(&cloud, 100, 4, Stage::CoverSamples);
        let b = cloud_subset(&cloud, 100, 4, Stage::CoverSamples);
        assert_eq!(a.points, b.points);
        assert_eq!(a.len(), 100);
        assert_eq!(cloud_subset(&cloud, 10_000, 4, Stage::CoverSamples).len(), cloud.len());
    }

    #[test]
    fn coverage_check_is_exact() {
        let s = [Point3::new(1.0, 0.0, 0.0), Point3::new(3.0, 0.0, 0.0)];
        let b = [CandidateBall {
            center: Point3::ORIGIN,
            radius: 0.5,
            dilated: Some(1.0),
            origin: CandidateOrigin::Random,
        }];
        assert!(!coverage_holds(&s, &[true, true], &b));
        assert!(coverage_holds(&s, &[true, false], &b));
    }
}

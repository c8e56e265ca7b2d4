//! Runners for the canned experiments.
//!
//! Each runner maps a resolved [`Experiment`] to an [`Outcome`]: a table of
//! per-step numbers (state components, residuals, defects) plus a summary of
//! scalar diagnostics. Randomized sweeps draw only from the config seed.

use infodyn::cmeasure::ClassicalWeights;
use infodyn::divergence::{bregman, cosine_defect, csiszar, d_gamma_raw, CsiszarGenerator, GammaGenerator, GammaParam};
use infodyn::entproj::{
    self, bayes_update, trajectory, weighted_project_with, ConstraintSet, Penalty, PriorMixture,
    ProjectOptions, Schedule, Solver,
};
use infodyn::infogeo::{eguchi_connection, eguchi_metric, fisher_rao_metric, Chart, StepSize};
use infodyn::io::MatrixJson;
use infodyn::qproj::{
    luders_experiment, q_objective, q_project, q_trajectory, q_weighted_project_with, QProjectOptions,
    QuantumConstraintSet, QuantumPenalty, QuantumPriorMixture, QuantumSchedule, QuantumSolver,
};
use infodyn::qstate::{petz_limit_entropy, q_d_gamma, CMatrix, DensityOperator, ObservableOperator};
use nalgebra::DMatrix;
use rand::Rng;

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::record::{Outcome, Table};
use crate::sample;

/// Runs a resolved experiment.
pub fn run(config: &ExperimentConfig, experiment: &Experiment) -> CliResult<Outcome> {
    let g = config.gamma;
    match experiment {
        Experiment::DivergenceSweep(p) => divergence_sweep(p, config.seed),
        Experiment::MetricExtract(p) => metric_extract(p),
        Experiment::Dice(p) => dice(p, g),
        Experiment::BayesRecovery(p) => bayes_recovery(p, config.seed),
        Experiment::GibbsQubit(p) => gibbs_qubit(p, g),
        Experiment::Luders(p) => luders(p, g),
        Experiment::TrajectoryClassical(p) => trajectory_classical(p, g, config.mode),
        Experiment::TrajectoryQuantum(p) => trajectory_quantum(p, g, config.mode),
        Experiment::CocycleLimit(p) => cocycle_limit(p, config.seed),
        Experiment::Project(p) => project(p, g),
        Experiment::QProject(p) => qproject(p, g),
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn some(v: impl IntoIterator<Item = f64>) -> impl Iterator<Item = Option<f64>> {
    v.into_iter().map(Some)
}

fn density(m: &MatrixJson) -> CliResult<DensityOperator> {
    Ok(DensityOperator::new(m.to_matrix()?)?)
}

fn observable(m: &MatrixJson) -> CliResult<ObservableOperator> {
    Ok(ObservableOperator::new(m.to_matrix()?)?)
}

/// Column names for the real and imaginary parts of every matrix entry.
fn matrix_columns(n: usize) -> Vec<String> {
    let mut c = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            c.push(format!("re_{i}_{j}"));
            c.push(format!("im_{i}_{j}"));
        }
    }
    c
}

fn matrix_cells(m: &CMatrix) -> Vec<Option<f64>> {
    let n = m.nrows();
    let mut c = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            c.push(Some(m[(i, j)].re));
            c.push(Some(m[(i, j)].im));
        }
    }
    c
}

fn divergence_sweep(p: &DivergenceSweep, seed: u64) -> CliResult<Outcome> {
    if p.mu.len() != p.nu.len() {
        return Err(infodyn::Error::LengthMismatch(p.mu.len(), p.nu.len()).into());
    }
    if p.max_dim == 0 {
        return Err(CliError::Config("max_dim must be positive".into()));
    }
    let (mu_w, nu_w) = (ClassicalWeights::new(p.mu.clone())?, ClassicalWeights::new(p.nu.clone())?);
    let mut table = Table::new(["d_gamma", "d_dual_swapped", "duality_defect", "csiszar_defect", "bregman_defect", "cosine_defect"]);
    let midpoint: Vec<f64> = p.mu.iter().zip(&p.nu).map(|(a, b)| 0.5 * (a + b)).collect();
    for (k, &g) in p.gammas.iter().enumerate() {
        let gp = GammaParam::new(g)?;
        let d = d_gamma_raw(&p.mu, &p.nu, g);
        let swapped = d_gamma_raw(&p.nu, &p.mu, 1.0 - g);
        let c = csiszar(&mu_w, &nu_w, &CsiszarGenerator::gamma(gp))?;
        // the γ-generator exists for interior γ only
        let (b, cos) = if g > 0.0 && g < 1.0 {
            let gen = GammaGenerator::new(gp)?;
            (Some((bregman(&p.mu, &p.nu, &gen)? - d).abs()), Some(cosine_defect(&p.mu, &p.nu, &midpoint, &gen)?.abs()))
        } else {
            (None, None)
        };
        table.push(k, g, [Some(d), Some(swapped), Some((d - swapped).abs()), Some((c - d).abs()), b, cos]);
    }

    let mut rng = sample::rng(seed);
    let (mut min_value, mut max_self, mut max_dual, mut max_family): (f64, f64, f64, f64) = (f64::INFINITY, 0.0, 0.0, 0.0);
    for _ in 0..p.random_pairs {
        let n = rng.random_range(1..=p.max_dim);
        let (mu, nu) = (sample::positive(&mut rng, n, 0.05), sample::positive(&mut rng, n, 0.05));
        let (mw, nw) = (ClassicalWeights::new(mu.clone())?, ClassicalWeights::new(nu.clone())?);
        for &g in &p.gammas {
            let d = d_gamma_raw(&mu, &nu, g);
            min_value = min_value.min(d);
            max_self = max_self.max(d_gamma_raw(&mu, &mu, g).abs());
            max_dual = max_dual.max((d - d_gamma_raw(&nu, &mu, 1.0 - g)).abs());
            let c = csiszar(&mw, &nw, &CsiszarGenerator::gamma(GammaParam::new(g)?))?;
            max_family = max_family.max((c - d).abs());
        }
    }
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.summarize("random_pairs", p.random_pairs as f64);
    if p.random_pairs > 0 {
        out.summarize("random_min_value", min_value);
        out.summarize("random_max_self_value", max_self);
        out.summarize("random_max_duality_defect", max_dual);
        out.summarize("random_max_csiszar_defect", max_family);
    }
    Ok(out)
}

fn metric_extract(p: &MetricExtract) -> CliResult<Outcome> {
    let step = StepSize::new(p.step)?;
    let fr = fisher_rao_metric(&p.mu)?;
    let mut table = Table::new([
        "fisher_rao_defect",
        "metric_symmetry_defect",
        "metric_min_eigenvalue",
        "primal_connection_max",
        "dual_connection_max",
        "torsion_defect",
    ]);
    for (k, &g) in p.gammas.iter().enumerate() {
        let d = move |a: &[f64], b: &[f64]| d_gamma_raw(a, b, g);
        let metric = eguchi_metric(&d, &p.mu, Chart::Raw, step)?;
        // flat charts exist for interior γ; the endpoints are reported in the raw chart
        let (primal, dual) = if g > 0.0 && g < 1.0 {
            let pc = eguchi_connection(&d, &p.mu, Chart::Gamma(g), step)?;
            let dc = eguchi_connection(&d, &p.mu, Chart::Gamma(1.0 - g), step)?;
            (Some(pc.primal.max_abs()), Some(dc.dual.max_abs()))
        } else {
            (None, None)
        };
        let torsion = eguchi_connection(&d, &p.mu, Chart::Raw, step)?.torsion_defect();
        table.push(
            k,
            g,
            [
                Some(metric.max_abs_diff(&fr)),
                Some(metric.symmetry_defect()),
                Some(metric.min_eigenvalue()),
                primal,
                dual,
                Some(torsion),
            ],
        );
    }
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.notes.push("metrics are extracted in the raw chart and compared with diag(1/μ)".into());
    Ok(out)
}

fn dice(p: &Dice, gamma: f64) -> CliResult<Outcome> {
    let n = p.faces.len();
    let prior = match &p.prior {
        Some(w) => ClassicalWeights::new(w.clone())?,
        None => ClassicalWeights::uniform(n)?,
    };
    let q = ConstraintSet::new().with_moment(p.faces.clone(), p.mean).with_normalization(1.0);
    let res = entproj::project(&prior, gamma, &q, &Penalty::None)?;
    let w = res.state.as_slice();
    let mean_residual = (dot(w, &p.faces) - p.mean).abs();
    let mut columns = indexed("q", n);
    columns.extend(["mean_residual", "kkt_residual", "lambda_mean", "lambda_mass"].map(String::from));
    let mut table = Table::new(columns);
    let lambda = |i: usize| res.multipliers.get(i).copied();
    table.push(
        0,
        0.0,
        some(w.iter().copied()).chain([Some(mean_residual), Some(res.kkt_residual), lambda(0), lambda(1)]),
    );
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.summarize("mean_residual", mean_residual);
    out.summarize("kkt_residual", res.kkt_residual);
    out.summarize("iterations", res.iterations as f64);
    Ok(out)
}

fn bayes_recovery(p: &BayesRecovery, seed: u64) -> CliResult<Outcome> {
    let joint = ClassicalWeights::new(p.joint.clone())?.normalized();
    let post = bayes_update(&joint, p.n_x, p.observed)?;
    let n_theta = post.len();
    let row = &joint.as_slice()[p.observed * n_theta..(p.observed + 1) * n_theta];
    let mass: f64 = row.iter().sum();
    let direct: Vec<f64> = row.iter().map(|v| v / mass).collect();
    let diff = max_diff(post.as_slice(), &direct);

    let mut columns = indexed("posterior", n_theta);
    columns.extend(indexed("direct", n_theta));
    columns.push("max_abs_diff".into());
    let mut table = Table::new(columns);
    table.push(0, 0.0, some(post.as_slice().iter().copied()).chain(some(direct)).chain([Some(diff)]));

    let mut rng = sample::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..p.random_joints {
        let n_x = rng.random_range(2..=p.max_dim.max(2));
        let n_t = rng.random_range(1..=p.max_dim.max(1));
        let j = sample::simplex(&mut rng, n_x * n_t);
        let b = rng.random_range(0..n_x);
        let post = bayes_update(&ClassicalWeights::new(j.clone())?, n_x, b)?;
        let row = &j[b * n_t..(b + 1) * n_t];
        let m: f64 = row.iter().sum();
        let direct: Vec<f64> = row.iter().map(|v| v / m).collect();
        worst = worst.max(max_diff(post.as_slice(), &direct));
    }
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.summarize("max_abs_diff", diff);
    out.summarize("random_joints", p.random_joints as f64);
    if p.random_joints > 0 {
        out.summarize("random_max_abs_diff", worst);
    }
    Ok(out)
}

fn gibbs_qubit(p: &GibbsQubit, gamma: f64) -> CliResult<Outcome> {
    let prior = density(&p.prior)?;
    let a = observable(&p.observable)?;
    let q = QuantumConstraintSet::new().with_moment(a.clone(), p.target).with_normalization(1.0);
    let res = q_project(&prior, gamma, &q, &QuantumPenalty::None)?;
    let n = prior.dim();
    let residual = (res.state.expectation(&a) - p.target).abs();
    let mut columns = matrix_columns(n);
    columns.extend(indexed("eigenvalue", n));
    columns.extend(["target_residual", "kkt_residual", "lambda", "kappa"].map(String::from));
    let mut table = Table::new(columns);
    let cells = matrix_cells(res.state.matrix())
        .into_iter()
        .chain(some(res.state.eigenvalues()))
        .chain([Some(residual), Some(res.kkt_residual), res.multipliers.first().copied(), res.multipliers.get(1).copied()]);
    table.push(0, 0.0, cells);
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.summarize("target_residual", residual);
    out.summarize("kkt_residual", res.kkt_residual);
    Ok(out)
}

fn luders(p: &Luders, gamma: f64) -> CliResult<Outcome> {
    let rho = density(&p.rho)?;
    let proj = p.projector.to_matrix()?;
    let report = luders_experiment(&rho, &proj, gamma)?;
    let n = rho.dim();
    let mut columns = vec!["candidate_available".to_string(), "trace_distance".into(), "d_half".into()];
    columns.extend(matrix_columns(n));
    let mut table = Table::new(columns);
    // row 0 is the Lüders state itself; the following rows are the entropic candidates, t = order γ
    table.push(0, gamma, [Some(1.0), Some(0.0), Some(0.0)].into_iter().chain(matrix_cells(report.luders_state.matrix())));
    for (k, c) in report.candidates.iter().enumerate() {
        let state = match &c.state {
            Some(s) => matrix_cells(s.matrix()),
            None => vec![None; 2 * n * n],
        };
        let available = Some(if c.state.is_some() { 1.0 } else { 0.0 });
        table.push(k + 1, c.order_gamma, [available, c.trace_distance, c.d_half].into_iter().chain(state));
    }
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.summarize("commuting", if report.commuting { 1.0 } else { 0.0 });
    out.summarize("max_trace_distance", report.max_trace_distance());
    if !report.commuting {
        out.notes.push("ρ and P do not commute: the comparison is descriptive only".into());
    }
    if report.candidates.iter().any(|c| c.state.is_none()) {
        out.notes.push("an argument order has an infinite infimum; its row is empty".into());
    }
    Ok(out)
}

fn trajectory_classical(p: &TrajectoryClassical, gamma: f64, mode: Mode) -> CliResult<Outcome> {
    let prior = ClassicalWeights::new(p.prior.clone())?;
    let mut schedule = Schedule::new(p.t0);
    for s in &p.schedule {
        let mut q = ConstraintSet::new().with_moment(p.statistic.clone(), s.target);
        if let Some(m) = p.normalization {
            q = q.with_normalization(m);
        }
        schedule = schedule.then(s.t, q, Penalty::None)?;
    }
    let points = trajectory(&prior, gamma, &schedule, mode.into())?;
    let n = prior.len();
    let mut columns = indexed("q", n);
    columns.extend(["target", "moment_residual", "kkt_residual", "lambda"].map(String::from));
    let mut table = Table::new(columns);
    for (k, pt) in points.iter().enumerate() {
        let w = pt.result.state.as_slice();
        let target = (k > 0).then(|| p.schedule[k - 1].target);
        let residual = target.map(|c| (dot(w, &p.statistic) - c).abs());
        let kkt = (k > 0).then_some(pt.result.kkt_residual);
        table.push(k, pt.t, some(w.iter().copied()).chain([target, residual, kkt, pt.result.multipliers.first().copied()]));
    }
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.summarize("steps", p.schedule.len() as f64);
    out.summarize("max_kkt_residual", points.iter().map(|pt| pt.result.kkt_residual).fold(0.0, f64::max));
    Ok(out)
}

fn trajectory_quantum(p: &TrajectoryQuantum, gamma: f64, mode: Mode) -> CliResult<Outcome> {
    let prior = density(&p.prior)?;
    let a = observable(&p.observable)?;
    let mut schedule = QuantumSchedule::new(p.t0);
    for s in &p.schedule {
        let mut q = QuantumConstraintSet::new().with_moment(a.clone(), s.target);
        if let Some(m) = p.normalization {
            q = q.with_normalization(m);
        }
        schedule = schedule.then(s.t, q, QuantumPenalty::None)?;
    }
    let points = q_trajectory(&prior, gamma, &schedule, mode.into())?;
    let mut columns = matrix_columns(prior.dim());
    columns.extend(["target", "expectation_residual", "kkt_residual", "lambda"].map(String::from));
    let mut table = Table::new(columns);
    for (k, pt) in points.iter().enumerate() {
        let target = (k > 0).then(|| p.schedule[k - 1].target);
        let residual = target.map(|c| (pt.result.state.expectation(&a) - c).abs());
        let kkt = (k > 0).then_some(pt.result.kkt_residual);
        let cells = matrix_cells(pt.result.state.matrix())
            .into_iter()
            .chain([target, residual, kkt, pt.result.multipliers.first().copied()]);
        table.push(k, pt.t, cells);
    }
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.summarize("steps", p.schedule.len() as f64);
    out.summarize("max_kkt_residual", points.iter().map(|pt| pt.result.kkt_residual).fold(0.0, f64::max));
    Ok(out)
}

fn cocycle_limit(p: &CocycleLimit, seed: u64) -> CliResult<Outcome> {
    let mut table = Table::new(["dim", "limit", "closed_form", "abs_diff"]);
    let mut pairs = Vec::new();
    match (&p.omega, &p.phi) {
        (Some(o), Some(f)) => pairs.push((density(o)?, density(f)?)),
        (None, None) => {}
        _ => return Err(CliError::Config("omega and phi must be given together".into())),
    }
    if p.random_pairs > 0 && p.dims.is_empty() {
        return Err(CliError::Config("dims must be non-empty for random pairs".into()));
    }
    let mut rng = sample::rng(seed);
    for k in 0..p.random_pairs {
        let n = p.dims[k % p.dims.len()];
        pairs.push((sample::density(&mut rng, n)?, sample::density(&mut rng, n)?));
    }
    let mut worst: f64 = 0.0;
    for (k, (omega, phi)) in pairs.iter().enumerate() {
        let limit = petz_limit_entropy(omega, phi, &p.t_steps)?;
        let closed = q_d_gamma(phi, omega, 1.0)?;
        worst = worst.max((limit - closed).abs());
        table.push(k, 0.0, [Some(omega.dim() as f64), Some(limit), Some(closed), Some((limit - closed).abs())]);
    }
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.summarize("max_abs_diff", worst);
    out.notes.push("the limit of (i/t) tr(φ([Dω:Dφ]_t − I)) is compared with S(φ‖ω) = D_1(φ, ω)".into());
    Ok(out)
}

fn solver(choice: SolverChoice) -> (Solver, QuantumSolver) {
    match choice {
        SolverChoice::Auto => (Solver::Auto, QuantumSolver::Auto),
        SolverChoice::Dual => (Solver::DualNewton, QuantumSolver::DualNewton),
        SolverChoice::Primal => (Solver::PrimalNewton, QuantumSolver::PrimalNewton),
    }
}

fn project(p: &Project, gamma: f64) -> CliResult<Outcome> {
    let atoms = p
        .prior
        .iter()
        .map(|a| Ok((a.weight, ClassicalWeights::new(a.weights.clone())?)))
        .collect::<CliResult<Vec<_>>>()?;
    let prior = PriorMixture::new(atoms)?;
    let n = prior.dim();
    let mut q = ConstraintSet::new();
    for m in &p.moments {
        q = q.with_moment(m.values.clone(), m.target);
    }
    if let Some(s) = &p.support {
        q = q.with_support(s.clone());
    }
    if let Some(m) = p.normalization {
        q = q.with_normalization(m);
    }
    let penalty = match &p.penalty {
        ClassicalPenalty::None => Penalty::None,
        ClassicalPenalty::Linear { slope } => Penalty::Linear { slope: slope.clone() },
        ClassicalPenalty::Quadratic { weight, center } => {
            if weight.len() != n * n {
                return Err(infodyn::Error::LengthMismatch(weight.len(), n * n).into());
            }
            Penalty::Quadratic { weight: DMatrix::from_row_slice(n, n, weight), center: center.clone() }
        }
    };
    let mut options = ProjectOptions { solver: solver(p.solver).0, ..Default::default() };
    if let Some(it) = p.max_iterations {
        options.max_iterations = it;
    }
    let res = weighted_project_with(&prior, gamma, &q, &penalty, &options)?;
    let w = res.state.as_slice();
    let objective = entproj::objective(&prior, gamma, &penalty, w);
    let violation = q.violation(w)?;
    let mut columns = indexed("q", n);
    columns.extend(["objective", "constraint_violation", "kkt_residual", "iterations"].map(String::from));
    columns.extend(indexed("lambda", res.multipliers.len()));
    let mut table = Table::new(columns);
    table.push(
        0,
        0.0,
        some(w.iter().copied())
            .chain([Some(objective), Some(violation), Some(res.kkt_residual), Some(res.iterations as f64)])
            .chain(some(res.multipliers.iter().copied())),
    );
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.summarize("objective", objective);
    out.summarize("kkt_residual", res.kkt_residual);
    out.notes.push(format!("solver: {:?}", res.solver));
    Ok(out)
}

fn qproject(p: &QProject, gamma: f64) -> CliResult<Outcome> {
    let atoms = p.prior.iter().map(|a| Ok((a.weight, density(&a.state)?))).collect::<CliResult<Vec<_>>>()?;
    let prior = QuantumPriorMixture::new(atoms)?;
    let mut q = QuantumConstraintSet::new();
    for m in &p.moments {
        q = q.with_moment(observable(&m.observable)?, m.target);
    }
    if let Some(s) = &p.support {
        q = q.with_support(s.to_matrix()?);
    }
    if let Some(m) = p.normalization {
        q = q.with_normalization(m);
    }
    let penalty = match &p.penalty {
        QuantumPenaltyConfig::None => QuantumPenalty::None,
        QuantumPenaltyConfig::Linear { slope } => QuantumPenalty::Linear { slope: observable(slope)? },
        QuantumPenaltyConfig::Quadratic { weight, center } => {
            QuantumPenalty::Quadratic { weight: *weight, center: center.to_matrix()? }
        }
    };
    let mut options = QProjectOptions { solver: solver(p.solver).1, ..Default::default() };
    if let Some(it) = p.max_iterations {
        options.max_iterations = it;
    }
    let res = q_weighted_project_with(&prior, gamma, &q, &penalty, &options)?;
    let objective = q_objective(&prior, gamma, &penalty, &res.state)?;
    let violation = q.violation(res.state.matrix())?;
    let mut columns = matrix_columns(prior.dim());
    columns.extend(["objective", "constraint_violation", "kkt_residual", "iterations"].map(String::from));
    columns.extend(indexed("lambda", res.multipliers.len()));
    let mut table = Table::new(columns);
    table.push(
        0,
        0.0,
        matrix_cells(res.state.matrix())
            .into_iter()
            .chain([Some(objective), Some(violation), Some(res.kkt_residual), Some(res.iterations as f64)])
            .chain(some(res.multipliers.iter().copied())),
    );
    let mut out = Outcome { table: Some(table), ..Default::default() };
    out.summarize("objective", objective);
    out.summarize("kkt_residual", res.kkt_residual);
    out.notes.push(format!("solver: {:?}", res.solver));
    Ok(out)
}

//! Grid expansion and evaluation.

use std::collections::HashMap;

use enaqt::observables::{uniform_grid, Probe};
use enaqt::{
    asymptotic_state, build_generator, coherence_l1_scoped, evolve_with, initial_state, nonmarkov_witness, sep,
    steady_state, CouplingMode, DensityMatrix, Error, Generator, ModelParams, NetworkSpec, SteadyStateMethod,
    SteadyStateOptions, WitnessPair, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ExperimentError, Result};
use crate::scenario::{Axis, AxisParam, Observable, PairKind, Scenario, SteadyMode, Study};

/// One CSV line. `t` is infinite for steady-state rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "Gamma_up")]
    pub gamma_up: f64,
    #[serde(rename = "Gamma_down")]
    pub gamma_down: f64,
    pub t: f64,
    pub sep: Option<f64>,
    pub sepi: Option<f64>,
    pub coherence_l1: Option<f64>,
    pub witness: Option<f64>,
}

impl Row {
    pub fn column(&self, name: &str) -> Option<f64> {
        match name {
            "D" => Some(self.d),
            "R" => Some(self.r),
            "Q" => Some(self.q),
            "Gamma_up" => Some(self.gamma_up),
            "Gamma_down" => Some(self.gamma_down),
            "t" => Some(self.t),
            "sep" => self.sep,
            "sepi" => self.sepi,
            "coherence_l1" => self.coherence_l1,
            "witness" => self.witness,
            _ => None,
        }
    }
}

/// Probe trace distance of a witness pair at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceRow {
    pub scenario: String,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "Gamma_up")]
    pub gamma_up: f64,
    #[serde(rename = "Gamma_down")]
    pub gamma_down: f64,
    pub t: f64,
    pub trace_distance: f64,
}

/// Worst physicality residuals over every recorded state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantSummary {
    pub states: usize,
    pub max_trace_drift: f64,
    pub max_hermiticity_residual: f64,
    pub min_eigenvalue: f64,
}

impl Default for InvariantSummary {
    fn default() -> Self {
        Self { states: 0, max_trace_drift: 0.0, max_hermiticity_residual: 0.0, min_eigenvalue: f64::INFINITY }
    }
}

impl InvariantSummary {
    pub fn observe(&mut self, rho: &DensityMatrix) {
        self.states += 1;
        self.max_trace_drift = self.max_trace_drift.max((rho.trace() - C64::new(1.0, 0.0)).norm());
        self.max_hermiticity_residual = self.max_hermiticity_residual.max(rho.hermiticity_residual());
        self.min_eigenvalue = self.min_eigenvalue.min(rho.min_eigenvalue());
    }

    pub fn merge(&mut self, other: &Self) {
        self.states += other.states;
        self.max_trace_drift = self.max_trace_drift.max(other.max_trace_drift);
        self.max_hermiticity_residual = self.max_hermiticity_residual.max(other.max_hermiticity_residual);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub name: String,
    pub rows: Vec<Row>,
    pub distances: Vec<DistanceRow>,
    pub invariants: InvariantSummary,
    pub metadata: serde_json::Value,
}

/// A grid point: indices into each non-time axis and the parameters they give.
#[derive(Debug, Clone)]
struct Point {
    coords: Vec<usize>,
    label: String,
    params: ModelParams,
}

fn apply(params: &mut ModelParams, axis: &Axis, v: f64) {
    match axis.param {
        AxisParam::D => params.dephasing = v,
        AxisParam::R => {
            params.hopping = v * params.gamma_down;
            if axis.tie_q {
                params.ancilla_coupling = params.hopping;
            }
        }
        AxisParam::Q => params.ancilla_coupling = v,
        AxisParam::GammaRatio => params.exchange_down = v * params.exchange_up,
        AxisParam::Time => {}
    }
}

/// Row-major enumeration, last index fastest.
fn product(lens: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in lens {
        out = out.into_iter().flat_map(|p| (0..n).map(move |k| [p.clone(), vec![k]].concat())).collect();
    }
    out
}

fn steady(gen: &Generator, rho0: &DensityMatrix, mode: SteadyMode, opts: &SteadyStateOptions) -> enaqt::Result<DensityMatrix> {
    match mode {
        SteadyMode::Asymptotic => asymptotic_state(gen, rho0),
        SteadyMode::NullSpace => steady_state(gen, SteadyStateMethod::NullSpace, opts),
        SteadyMode::LongTime => steady_state(gen, SteadyStateMethod::LongTime, opts),
        SteadyMode::Auto => match asymptotic_state(gen, rho0) {
            Err(Error::SolverTooLarge { .. }) => match steady_state(gen, SteadyStateMethod::NullSpace, opts) {
                Err(Error::SolverTooLarge { .. }) => steady_state(gen, SteadyStateMethod::LongTime, opts),
                other => other,
            },
            other => other,
        },
    }
}

/// Effective couplings reported in the CSV.
fn effective(params: &ModelParams, mode: CouplingMode) -> (f64, f64, f64) {
    let q = if mode == CouplingMode::Incoherent { 0.0 } else { params.ancilla_coupling };
    match mode {
        CouplingMode::Coherent => (q, 0.0, 0.0),
        _ => (q, params.exchange_up, params.exchange_down),
    }
}

fn witness_pair(s: &Scenario, spec: &NetworkSpec, kind: PairKind) -> enaqt::Result<WitnessPair> {
    let random = |qubit: usize, probe: Probe| {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let mut draw = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let psi = [draw(), draw()];
        WitnessPair::on_qubit(spec, qubit, psi, probe)
    };
    match kind {
        PairKind::Ancilla => WitnessPair::ancilla_seeded(spec),
        PairKind::System => WitnessPair::system_seeded(spec),
        PairKind::RandomAncilla => random(spec.n_sites(), Probe::Ancilla),
        PairKind::RandomSystem => random(spec.source_site() - 1, Probe::System),
    }
}

struct PointOutput {
    rows: Vec<Row>,
    /// SEP per row, kept even when not requested, for SEPI.
    seps: Vec<f64>,
    distances: Vec<DistanceRow>,
    invariants: InvariantSummary,
}

struct Runner<'a> {
    s: &'a Scenario,
    spec: NetworkSpec,
    times: Option<Vec<f64>>,
    steady_opts: SteadyStateOptions,
}

impl Runner<'_> {
    fn annotate(&self, point: &str) -> impl Fn(Error) -> ExperimentError + '_ {
        let point = point.to_string();
        move |source| ExperimentError::AtPoint { scenario: self.s.name.clone(), point: point.clone(), source }
    }

    fn steady_sep(&self, spec: &NetworkSpec, params: &ModelParams) -> enaqt::Result<f64> {
        let gen = build_generator(spec, params, self.s.coupling_mode)?;
        let rho0 = initial_state(spec)?;
        sep(&steady(&gen, &rho0, self.s.outputs.steady_state_method, &self.steady_opts)?)
    }

    fn optimal_d(&self, axis: &Axis, params: &ModelParams, label: &str) -> Result<f64> {
        let grid = axis.optimal_over.as_ref().expect("optimal axis carries a grid");
        let spec = match &axis.reference {
            Some(r) => r.build()?,
            None => self.spec.clone(),
        };
        let seps = grid
            .par_iter()
            .map(|&d| {
                let p = ModelParams { dephasing: d, ..params.clone() };
                self.steady_sep(&spec, &p).map_err(self.annotate(&format!("{label}optimal D search at D={d}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let best = (0..grid.len()).fold(0, |b, k| if seps[k] > seps[b] { k } else { b });
        Ok(grid[best])
    }

    fn run_point(&self, p: &Point) -> Result<PointOutput> {
        let s = self.s;
        let err = self.annotate(&p.label);
        let gen = build_generator(&self.spec, &p.params, s.coupling_mode).map_err(&err)?;
        let rho0 = initial_state(&self.spec).map_err(&err)?;
        let (q, gu, gd) = effective(&p.params, s.coupling_mode);
        let base = Row {
            scenario: s.name.clone(),
            d: p.params.dephasing,
            r: p.params.ratio(),
            q,
            gamma_up: gu,
            gamma_down: gd,
            t: f64::INFINITY,
            sep: None,
            sepi: None,
            coherence_l1: None,
            witness: None,
        };
        let scope = s.outputs.coherence_scope;
        let mut rows = Vec::new();
        let mut seps = Vec::new();
        let mut invariants = InvariantSummary::default();
        let mut record = |t: f64, rho: &DensityMatrix| -> enaqt::Result<()> {
            invariants.observe(rho);
            let value = sep(rho)?;
            seps.push(value);
            rows.push(Row {
                t,
                sep: s.outputs.wants(Observable::Sep).then_some(value),
                coherence_l1: match s.outputs.wants(Observable::CoherenceL1) {
                    true => Some(coherence_l1_scoped(rho, scope)?),
                    false => None,
                },
                ..base.clone()
            });
            Ok(())
        };
        match &self.times {
            Some(times) => {
                let t_final = *times.last().expect("validated nonempty");
                if t_final > 0.0 {
                    evolve_with(&rho0, &gen, t_final, times, &s.integrator, &mut record).map_err(&err)?;
                } else {
                    record(0.0, &rho0).map_err(&err)?;
                }
            }
            None => {
                let rho = steady(&gen, &rho0, s.outputs.steady_state_method, &self.steady_opts).map_err(&err)?;
                record(f64::INFINITY, &rho).map_err(&err)?;
            }
        }

        let mut distances = Vec::new();
        if let Some(w) = &s.outputs.witness {
            let pair = witness_pair(s, &self.spec, w.pair.expect("resolved")).map_err(&err)?;
            let (t_final, mut grid) = match &self.times {
                Some(times) => {
                    let t_final = *times.last().expect("validated nonempty");
                    let mut grid = uniform_grid(t_final, w.points);
                    grid.extend_from_slice(times);
                    (t_final, grid)
                }
                None => (w.t_final, uniform_grid(w.t_final, w.points)),
            };
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            if t_final > 0.0 {
                let res = nonmarkov_witness(&gen, &pair, t_final, &grid, &s.integrator).map_err(&err)?;
                let mut cumulative = Vec::with_capacity(grid.len());
                let mut acc = 0.0;
                for (k, d) in res.distances.iter().enumerate() {
                    if k > 0 {
                        acc += (d - res.distances[k - 1]).max(0.0);
                    }
                    cumulative.push(acc);
                }
                for row in &mut rows {
                    row.witness = Some(if row.t.is_finite() {
                        let k = grid.partition_point(|&g| g <= row.t) - 1;
                        cumulative[k]
                    } else {
                        res.value
                    });
                }
                distances = grid
                    .iter()
                    .zip(&res.distances)
                    .map(|(&t, &trace_distance)| DistanceRow {
                        scenario: s.name.clone(),
                        d: base.d,
                        r: base.r,
                        q,
                        gamma_up: gu,
                        gamma_down: gd,
                        t,
                        trace_distance,
                    })
                    .collect();
            } else {
                rows.iter_mut().for_each(|r| r.witness = Some(0.0));
            }
        }
        Ok(PointOutput { rows, seps, distances, invariants })
    }
}

fn point_label(axes: &[&Axis], values: &[f64]) -> String {
    axes.iter().zip(values).map(|(a, v)| format!("{}={v}, ", a.param.name())).collect()
}

/// Evaluates every grid point of one scenario; rows follow the axis order
/// with the last axis varying fastest.
pub fn run_scenario(scenario: &Scenario) -> Result<SweepResult> {
    let s = scenario.clone().resolve()?;
    let spec = s.network.build()?;
    let axes: Vec<&Axis> = s.sweep.iter().filter(|a| a.param != AxisParam::Time).collect();
    let times = s.axis(AxisParam::Time).map(|a| a.values.clone());
    let runner = Runner {
        s: &s,
        spec,
        times,
        steady_opts: SteadyStateOptions { integrator: s.integrator.clone(), ..Default::default() },
    };

    let lens: Vec<usize> = axes.iter().map(|a| if a.optimal_over.is_some() { 2 } else { a.values.len() }).collect();
    let combos = product(&lens);
    let d_axis = axes.iter().position(|a| a.param == AxisParam::D);
    let optimal_axis = d_axis.filter(|&k| axes[k].optimal_over.is_some());

    // D* for each combination of the other axes
    let mut optimal: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut optimal_meta = Vec::new();
    if let Some(k) = optimal_axis {
        let mut keys: Vec<Vec<usize>> = combos.iter().filter(|c| c[k] == 0).cloned().collect();
        keys.dedup();
        let found = keys
            .par_iter()
            .map(|c| {
                let mut params = s.params.clone();
                let mut values = Vec::new();
                for (j, axis) in axes.iter().enumerate() {
                    let v = if j == k { 0.0 } else { axis.values[c[j]] };
                    apply(&mut params, axis, v);
                    values.push(v);
                }
                let label = point_label(&axes, &values);
                runner.optimal_d(axes[k], &params, &label)
            })
            .collect::<Result<Vec<f64>>>()?;
        for (c, d) in keys.into_iter().zip(found) {
            let coords: serde_json::Map<String, serde_json::Value> = axes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(j, a)| (a.param.name().to_string(), serde_json::json!(a.values[c[j]])))
                .collect();
            optimal_meta.push(serde_json::json!({ "at": coords, "D": d }));
            let mut key = c;
            key[k] = 0;
            optimal.insert(key, d);
        }
    }

    let points: Vec<Point> = combos
        .iter()
        .map(|c| {
            let mut params = s.params.clone();
            let mut values = Vec::with_capacity(axes.len());
            for (j, axis) in axes.iter().enumerate() {
                let v = if Some(j) == optimal_axis {
                    let mut key = c.clone();
                    key[j] = 0;
                    if c[j] == 0 { 0.0 } else { optimal[&key] }
                } else {
                    axis.values[c[j]]
                };
                apply(&mut params, axis, v);
                values.push(v);
            }
            Point { coords: c.clone(), label: point_label(&axes, &values), params }
        })
        .collect();

    let outputs = points.par_iter().map(|p| runner.run_point(p)).collect::<Result<Vec<_>>>()?;

    let index: HashMap<&[usize], usize> = points.iter().enumerate().map(|(i, p)| (p.coords.as_slice(), i)).collect();
    let mut rows = Vec::new();
    let mut distances = Vec::new();
    let mut invariants = InvariantSummary::default();
    for (p, out) in points.iter().zip(&outputs) {
        invariants.merge(&out.invariants);
        let reference = match (d_axis, s.outputs.wants(Observable::Sepi)) {
            (Some(k), true) => {
                let mut c = p.coords.clone();
                c[k] = 0;
                Some(&outputs[index[c.as_slice()]])
            }
            _ => None,
        };
        for (i, row) in out.rows.iter().enumerate() {
            let mut row = row.clone();
            row.sepi = reference.map(|r| enaqt::sepi(out.seps[i], r.seps[i]));
            rows.push(row);
        }
        distances.extend(out.distances.iter().cloned());
    }

    let metadata = serde_json::json!({
        "scenario": s,
        "optimal_D": optimal_meta,
    });
    Ok(SweepResult { name: s.name.clone(), rows, distances, invariants, metadata })
}

/// Runs each scenario of a study in turn and concatenates the rows.
pub fn run_study(study: &Study) -> Result<SweepResult> {
    let study = study.clone().resolve()?;
    let mut rows = Vec::new();
    let mut distances = Vec::new();
    let mut scenarios = Vec::new();
    let mut invariants = InvariantSummary::default();
    for s in &study.scenarios {
        let r = run_scenario(s)?;
        invariants.merge(&r.invariants);
        rows.extend(r.rows);
        distances.extend(r.distances);
        scenarios.push(r.metadata);
    }
    let metadata = serde_json::json!({
        "name": study.name,
        "version": env!("CARGO_PKG_VERSION"),
        "plot": study.plot,
        "scenarios": scenarios,
    });
    Ok(SweepResult { name: study.name, rows, distances, invariants, metadata })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::NetworkConfig;
    use enaqt::Archetype;

    #[test]
    fn product_order_is_last_fastest() {
        assert_eq!(product(&[2, 3]), vec![
            vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![1, 2]
        ]);
        assert_eq!(product(&[]), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn axis_application() {
        let mut p = ModelParams { gamma_down: 2.0, exchange_up: 0.5, ..Default::default() };
        let mut r = Axis::values(AxisParam::R, vec![3.0]);
        r.tie_q = true;
        apply(&mut p, &r, 3.0);
        assert_eq!((p.hopping, p.ancilla_coupling), (6.0, 6.0));
        apply(&mut p, &Axis::values(AxisParam::GammaRatio, vec![2.0]), 2.0);
        assert_eq!(p.exchange_down, 1.0);
    }

    #[test]
    fn single_point_gives_one_row_per_time() {
        let mut s = Scenario::new("one", NetworkConfig::archetype(Archetype::Loop, 3));
        s.sweep = vec![Axis::values(AxisParam::Time, vec![0.0, 0.5, 1.0])];
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.rows[0].sep, Some(0.0));
        assert!(r.rows.iter().all(|row| row.sepi.is_none()));
    }

    #[test]
    fn sepi_is_zero_at_zero_dephasing() {
        let mut s = Scenario::new("d", NetworkConfig::archetype(Archetype::MaximallyConnected, 3));
        s.params.hopping = 5.0;
        s.sweep = vec![Axis::values(AxisParam::R, vec![1.0, 5.0]), Axis::values(AxisParam::D, vec![0.5, 2.0])];
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert_eq!(r.rows.iter().map(|x| x.d).collect::<Vec<_>>(), vec![0.0, 0.5, 2.0, 0.0, 0.5, 2.0]);
        for row in &r.rows {
            assert!(row.t.is_infinite());
            if row.d == 0.0 {
                assert_eq!(row.sepi, Some(0.0));
            }
        }
    }

    #[test]
    fn optimal_axis_resolves_to_two_points() {
        let mut s = Scenario::new("o", NetworkConfig::archetype(Archetype::MaximallyConnected, 3));
        s.params.hopping = 20.0;
        s.sweep = vec![Axis::optimal_d(vec![0.1, 1.0, 10.0, 100.0], None)];
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].d, 0.0);
        assert!(r.rows[1].d > 0.0);
        assert!(r.rows[1].sepi.unwrap() > 0.0);
        assert_eq!(r.metadata["optimal_D"][0]["D"], serde_json::json!(r.rows[1].d));
    }
}

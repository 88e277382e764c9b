//! Built-in studies reproducing the transport figures.
//!
//! Rates are in units of `γ↓ = 1`; every unstated parameter keeps its
//! `ModelParams` default and is echoed into the run metadata.

use enaqt::{AncillaMode, Archetype, CouplingMode, ModelParams};

use crate::error::{ExperimentError, Result};
use crate::scenario::{Axis, AxisParam, NetworkConfig, Observable, PairKind, PlotSpec, Scenario, Study, WitnessConfig};

const PRESETS: [&str; 9] = ["fig3a", "fig3b", "fig3c", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

/// 21 points, logarithmic over `[1e-3, 1e2]`.
pub fn d_grid() -> Vec<f64> {
    (0..=20).map(|k| 10f64.powf(-3.0 + 0.25 * k as f64)).collect()
}

/// R values scanned for the dephasing threshold.
pub fn r_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0]
}

fn linspace(t_final: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| t_final * k as f64 / (points - 1) as f64).collect()
}

fn plot(x: &str, y: &str) -> Option<PlotSpec> {
    Some(PlotSpec { x: x.into(), y: y.into(), log_x: None })
}

fn net(kind: Archetype, n: usize) -> NetworkConfig {
    NetworkConfig::archetype(kind, n)
}

fn tag(kind: Archetype, n: usize) -> String {
    let k = match kind {
        Archetype::Linear => "linear",
        Archetype::Loop => "loop",
        Archetype::NonCritical => "noncritical",
        Archetype::MaximallyConnected => "full",
    };
    format!("{k}{n}")
}

fn with_j(j: f64) -> ModelParams {
    ModelParams { hopping: j, ..Default::default() }
}

fn study(name: &str, scenarios: Vec<Scenario>, p: Option<PlotSpec>) -> Study {
    Study { name: name.into(), scenarios, plot: p }
}

fn fig3a() -> Study {
    let kinds = [Archetype::Linear, Archetype::Loop, Archetype::NonCritical, Archetype::MaximallyConnected];
    let scenarios = kinds
        .into_iter()
        .map(|k| {
            let mut s = Scenario::new(format!("fig3a_{}", tag(k, 5)), net(k, 5));
            s.sweep = vec![Axis::values(AxisParam::R, vec![1.0, 5.0, 20.0]), Axis::values(AxisParam::D, d_grid())];
            s
        })
        .collect();
    study("fig3a", scenarios, plot("D", "sepi"))
}

fn fig3b() -> Study {
    let mut s = Scenario::new("fig3b_full5", net(Archetype::MaximallyConnected, 5));
    s.sweep = vec![Axis::values(AxisParam::R, vec![1.0, 5.0, 20.0]), Axis::values(AxisParam::D, d_grid())];
    study("fig3b", vec![s], plot("D", "sep"))
}

fn fig3c() -> Study {
    let scenarios = (3..=5)
        .map(|n| {
            let mut s = Scenario::new(format!("fig3c_full{n}"), net(Archetype::MaximallyConnected, n));
            s.sweep = vec![Axis::values(AxisParam::R, r_grid()), Axis::values(AxisParam::D, d_grid())];
            s
        })
        .collect();
    study("fig3c", scenarios, plot("D", "sepi"))
}

fn fig4() -> Study {
    let trace = |name: &str, network: NetworkConfig, j: f64, reference: Option<NetworkConfig>, times: Vec<f64>| {
        let mut s = Scenario::new(name, network);
        s.params = with_j(j);
        s.outputs.observables = vec![Observable::Sep, Observable::Sepi, Observable::CoherenceL1];
        s.sweep = vec![Axis::optimal_d(d_grid(), reference), Axis::values(AxisParam::Time, times)];
        s
    };
    let scenarios = vec![
        trace("fig4_full3", net(Archetype::MaximallyConnected, 3), 20.0, None, linspace(2.0, 801)),
        trace("fig4_full5", net(Archetype::MaximallyConnected, 5), 20.0, None, linspace(2.0, 801)),
        trace(
            "fig4_noncritical5_R500",
            net(Archetype::NonCritical, 5),
            500.0,
            Some(net(Archetype::MaximallyConnected, 5)),
            linspace(0.2, 2001),
        ),
    ];
    study("fig4", scenarios, plot("t", "coherence_l1"))
}

fn fig5() -> Study {
    let warm = ModelParams { hopping: 20.0, occupation: vec![1.0, 0.0, 0.0, 0.0, 0.0], ..Default::default() };
    let mut transient = Scenario::new("fig5_full5_N1", net(Archetype::MaximallyConnected, 5));
    transient.params = warm.clone();
    transient.sweep = vec![
        Axis::values(AxisParam::D, vec![0.01, 0.1, 1.0, 10.0, 100.0]),
        Axis::values(AxisParam::Time, linspace(10.0, 201)),
    ];
    let mut steady = Scenario::new("fig5_full5_N1_steady", net(Archetype::MaximallyConnected, 5));
    steady.params = warm;
    steady.sweep = vec![Axis::values(AxisParam::D, vec![0.01, 0.1, 1.0, 10.0, 100.0])];
    study("fig5", vec![transient, steady], plot("t", "sepi"))
}

fn fig6() -> Study {
    let mut scenarios = Vec::new();
    for mode in [AncillaMode::Communal, AncillaMode::Individual] {
        for open in [false, true] {
            let m = if mode == AncillaMode::Communal { "communal" } else { "individual" };
            let o = if open { "open" } else { "isolated" };
            let mut s = Scenario::new(
                format!("fig6_full3_{m}_{o}"),
                net(Archetype::MaximallyConnected, 3).with_ancilla(mode, open),
            );
            s.coupling_mode = CouplingMode::Incoherent;
            s.params.exchange_up = 1.0;
            s.sweep = vec![
                Axis::values(AxisParam::GammaRatio, vec![0.5, 1.0, 2.0]),
                Axis::values(AxisParam::R, r_grid()),
                Axis::values(AxisParam::D, d_grid()),
            ];
            scenarios.push(s);
        }
    }
    study("fig6", scenarios, plot("D", "sepi"))
}

fn fig7() -> Study {
    let scenarios = [false, true]
        .into_iter()
        .map(|open| {
            let o = if open { "open" } else { "isolated" };
            let mut s = Scenario::new(
                format!("fig7_full3_communal_{o}"),
                net(Archetype::MaximallyConnected, 3).with_ancilla(AncillaMode::Communal, open),
            );
            s.params = with_j(20.0);
            s.outputs.witness = Some(WitnessConfig { pair: Some(PairKind::Ancilla), ..Default::default() });
            s.sweep = vec![
                Axis::values(AxisParam::Q, vec![0.1, 1.0, 5.0, 20.0, 40.0]),
                Axis::values(AxisParam::Time, linspace(5.0, 101)),
            ];
            s
        })
        .collect();
    study("fig7", scenarios, plot("t", "witness"))
}

fn fig8() -> Study {
    let scenarios = [PairKind::Ancilla, PairKind::System]
        .into_iter()
        .map(|pair| {
            let p = if pair == PairKind::Ancilla { "ancilla" } else { "system" };
            let mut s = Scenario::new(
                format!("fig8_full3_{p}_pair"),
                net(Archetype::MaximallyConnected, 3).with_ancilla(AncillaMode::Communal, false),
            );
            s.params = ModelParams { hopping: 20.0, ancilla_coupling: 20.0, ..Default::default() };
            s.outputs.observables = vec![Observable::Sep, Observable::Witness];
            s.outputs.witness = Some(WitnessConfig { pair: Some(pair), t_final: 2.0, points: 801 });
            s.sweep = vec![Axis::values(AxisParam::Time, linspace(2.0, 401))];
            s
        })
        .collect();
    study("fig8", scenarios, plot("t", "witness"))
}

fn fig9() -> Study {
    let scenarios = [false, true]
        .into_iter()
        .map(|open| {
            let o = if open { "open" } else { "isolated" };
            let mut s = Scenario::new(
                format!("fig9_full3_mixed_{o}"),
                net(Archetype::MaximallyConnected, 3).with_ancilla(AncillaMode::Communal, open),
            );
            s.coupling_mode = CouplingMode::Mixed;
            s.params = ModelParams { hopping: 20.0, exchange_up: 1.0, ..Default::default() };
            s.outputs.observables = vec![Observable::Sep, Observable::CoherenceL1, Observable::Witness];
            s.outputs.witness = Some(WitnessConfig { pair: Some(PairKind::Ancilla), ..Default::default() });
            s.sweep = vec![
                Axis::values(AxisParam::GammaRatio, vec![0.5, 1.0, 2.0]),
                Axis::values(AxisParam::Q, vec![0.1, 1.0, 10.0]),
            ];
            s
        })
        .collect();
    study("fig9", scenarios, plot("Q", "witness"))
}

pub fn list_presets() -> Vec<&'static str> {
    PRESETS.to_vec()
}

pub fn preset(name: &str) -> Result<Study> {
    Ok(match name {
        "fig3a" => fig3a(),
        "fig3b" => fig3b(),
        "fig3c" => fig3c(),
        "fig4" => fig4(),
        "fig5" => fig5(),
        "fig6" => fig6(),
        "fig7" => fig7(),
        "fig8" => fig8(),
        "fig9" => fig9(),
        _ => return Err(ExperimentError::UnknownPreset(name.to_string())),
    })
}

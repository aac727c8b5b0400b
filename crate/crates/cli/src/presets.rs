//! Named parameter sets for the standard scans.

use std::f64::consts::PI;

use crate::config::*;

pub const PRESETS: [&str; 8] = [
    "fig1b", "fig2", "fig3", "fig4", "fig5a", "fig5b", "fig5c", "fig5d",
];

fn params(
    delta: f64,
    g_outer: f64,
    g_middle: f64,
    j: f64,
    theta: ParamValue,
    gamma: ParamValue,
) -> ParamsBlock {
    ParamsBlock {
        omega: 1.0,
        delta,
        g1: g_outer,
        g2: g_middle,
        g3: g_outer,
        j1: j,
        j2: j,
        j3: j,
        gamma,
        theta,
    }
}

fn bare(name: &str, params: ParamsBlock) -> RunConfig {
    RunConfig {
        name: name.into(),
        params,
        tolerances: Tolerances::default(),
        spectrum: None,
        slice: None,
        surface: None,
        perturb: None,
        fidelity: None,
        quench: None,
    }
}

/// `g = 0.3`, `delta = 50`, `J1 = J3 = 0.01`.
fn fig2_params(theta: f64, gamma: f64) -> ParamsBlock {
    params(50.0, 0.3, 0.3, 0.01, theta.into(), gamma.into())
}

fn quench(
    name: &str,
    theta: f64,
    gamma_initial: f64,
    gamma_final: f64,
    t_max: Option<f64>,
) -> RunConfig {
    RunConfig {
        quench: Some(QuenchBlock {
            gamma_initial,
            gamma_final,
            t_max,
            samples: jct_core::dynamics::DEFAULT_TIME_SAMPLES,
        }),
        ..bare(name, fig2_params(theta, gamma_initial))
    }
}

fn scenario(name: &str, site: usize, theta: f64, gamma: &str, eps: Option<(f64, f64)>) -> Scenario {
    Scenario {
        name: name.into(),
        site,
        theta: Some(theta.into()),
        gamma: Some(ParamValue::Keyword(gamma.into())),
        eps_min: eps.map(|e| e.0),
        eps_max: eps.map(|e| e.1),
    }
}

pub fn preset(name: &str) -> Option<RunConfig> {
    let cfg = match name {
        "fig1b" => RunConfig {
            surface: Some(SurfaceBlock {
                g_ratio: Axis::linear("g_ratio", 0.04, 2.0, 50),
                j_ratio: Axis::linear("j_ratio", 0.04, 2.0, 50),
            }),
            ..bare(name, params(20.0, 0.3, 0.3, 0.01, 0.0.into(), 0.0.into()))
        },
        "fig2" => RunConfig {
            spectrum: Some(SpectrumBlock {
                axes: [
                    Axis::linear("gamma", 0.0, 0.03, 61),
                    Axis::linear("j_ratio", 0.2, 2.0, 46),
                ],
            }),
            slice: Some(SliceBlock {
                axis: Axis::linear("gamma", 0.0, 0.03, 301),
            }),
            ..bare(name, fig2_params(PI / 6.0, 3f64.sqrt() * 0.01))
        },
        "fig3" => RunConfig {
            slice: Some(SliceBlock {
                axis: Axis::linear("gamma", 0.0, 0.03, 301),
            }),
            fidelity: Some(FidelityBlock {
                eps: 5e-5,
                axis: Axis::linear("gamma", 0.010, 0.025, 301),
            }),
            ..bare(
                name,
                params(
                    20.0,
                    0.1,
                    0.3,
                    0.01,
                    ParamValue::Keyword("3el".into()),
                    ParamValue::Keyword("3el".into()),
                ),
            )
        },
        "fig4" => RunConfig {
            perturb: Some(PerturbBlock {
                eps_min: 1e-9,
                eps_max: 1e-5,
                count: 17,
                scenario: vec![
                    scenario("3ep_site1", 1, PI / 6.0, "3el", None),
                    scenario("3ep_site2", 2, PI / 6.0, "3el", None),
                    scenario("2ep_site1", 1, PI / 4.0, "2el", Some((1e-8, 1e-4))),
                ],
            }),
            ..bare(name, fig2_params(PI / 6.0, 3f64.sqrt() * 0.01))
        },
        "fig5a" => quench(name, PI / 6.0, 0.006, 0.018, Some(50.0 / 0.018)),
        "fig5b" => quench(name, PI / 4.0, 0.001, 0.01, Some(50.0 / 0.01)),
        "fig5c" => quench(name, PI / 6.0, 0.018, 0.006, None),
        "fig5d" => quench(name, PI / 4.0, 0.01, 0.001, None),
        _ => return None,
    };
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg, "{name}");
        }
        assert!(preset("fig9").is_none());
    }

    #[test]
    fn surface_grid_hits_equal_couplings() {
        let cfg = preset("fig1b").unwrap();
        let g = cfg.surface.unwrap().g_ratio.values();
        assert!(g.iter().any(|v| (v - 1.0).abs() < 1e-15));
    }
}

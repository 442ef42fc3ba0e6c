//! Built-in scenarios, each expanding to a full [`ScenarioConfig`].

use tskf::owc::{owc_model, reference_model, OwcLinearFit};

use crate::config::{
    BoundaryConfig, ModelConfig, OutputConfig, RunConfig, SamplingConfig, ScenarioConfig,
    TimescaleConfig,
};

pub const BUILTIN_NAMES: [&str; 6] = ["owc-td", "ref-t1", "ref-t2", "ref-t3", "ref-t4", "ref-td"];

/// Interval sampling step for both `T_d` scenarios.
pub const TD_STEP: f64 = 0.5;

fn scenario(name: &str, model: ModelConfig, spec: &str, sampling: SamplingConfig) -> ScenarioConfig {
    ScenarioConfig {
        name: Some(name.to_string()),
        model,
        timescale: TimescaleConfig {
            spec: Some(spec.to_string()),
            validity_csv: None,
            min_continuous_run: None,
        },
        sampling,
        run: RunConfig::default(),
        output: OutputConfig::default(),
    }
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    let reference = || ModelConfig::from_model(&reference_model());
    let td_sampling = |boundary| SamplingConfig {
        h: TD_STEP,
        truth_boundary: boundary,
        ..SamplingConfig::default()
    };
    let cfg = match name {
        "owc-td" => {
            let (lo, hi) = OwcLinearFit::default().valid_angle_range;
            scenario(
                name,
                ModelConfig::from_model(&owc_model()),
                "td",
                td_sampling(BoundaryConfig::Reflect { lo, hi }),
            )
        }
        "ref-t1" => scenario(name, reference(), "uniform(c=2, end=40)", SamplingConfig::default()),
        "ref-t2" => scenario(name, reference(), "harmonic(n=200)", SamplingConfig::default()),
        "ref-t3" => scenario(name, reference(), "hybrid_t3(end=10)", SamplingConfig::default()),
        "ref-t4" => scenario(name, reference(), "pab(a=1, b=2, k=10)", SamplingConfig::default()),
        "ref-td" => scenario(name, reference(), "td", td_sampling(BoundaryConfig::Free)),
        _ => return None,
    };
    Some(cfg)
}

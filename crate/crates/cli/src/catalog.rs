//! Scenarios bundled with the binary.

use crate::config::{ConfigError, ScenarioConfig};

pub struct Scenario {
    pub id: &'static str,
    pub description: &'static str,
    pub json: &'static str,
}

pub const CATALOG: [Scenario; 6] = [
    Scenario {
        id: "product",
        description: "product weight a=1, b=1; MAVol saturates the Demailly bound",
        json: include_str!("../scenarios/product.json"),
    },
    Scenario {
        id: "sep-eps0.1",
        description: "separable perturbation x(z)x(w), eps=0.1",
        json: include_str!("../scenarios/sep-eps0.1.json"),
    },
    Scenario {
        id: "sep-eps0.2",
        description: "separable perturbation x(z)x(w), eps=0.2",
        json: include_str!("../scenarios/sep-eps0.2.json"),
    },
    Scenario {
        id: "cross-eps0.1",
        description: "cross perturbation Re(z conj w)/((1+|z|^2)(1+|w|^2)), eps=0.1",
        json: include_str!("../scenarios/cross-eps0.1.json"),
    },
    Scenario {
        id: "sympow-1-1",
        description: "symmetric powers of O(1)+O(1), projectively flat",
        json: include_str!("../scenarios/sympow-1-1.json"),
    },
    Scenario {
        id: "sympow-1-2",
        description: "symmetric powers of O(1)+O(2)",
        json: include_str!("../scenarios/sympow-1-2.json"),
    },
];

pub fn find(id: &str) -> Option<&'static Scenario> {
    CATALOG.iter().find(|s| s.id == id)
}

impl Scenario {
    pub fn config(&self) -> Result<ScenarioConfig, ConfigError> {
        ScenarioConfig::from_json(self.json)
    }
}

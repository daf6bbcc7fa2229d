//! The bundled "cancelling out" scenario: an instance where solving all
//! cycles jointly beats any single cycle.

use serde::Deserialize;

use crate::model::{ModelError, NodeId, RebalancingInstance};

const CANCELLING_OUT: &str = include_str!("../scenarios/cancelling_out.json");

/// Documented values the scenario must reproduce.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioExpectations {
    pub global_objective: u64,
    pub best_single_cycle_objective: u64,
    pub gap: u64,
    /// The node whose outgoing rebalancing the story follows.
    pub focus_node: NodeId,
    /// Flow on the focus node's outgoing edge in the global optimum.
    pub focus_global_flow: u64,
    /// The same flow if only the focus node's short cycle ran.
    pub focus_triangle_flow: u64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub description: String,
    pub instance: RebalancingInstance,
    pub expected: ScenarioExpectations,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    description: String,
    instance: serde_json::Value,
    expected: ScenarioExpectations,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ModelError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
    let instance = RebalancingInstance::from_json(&file.instance.to_string())?;
    Ok(Scenario { description: file.description, instance, expected: file.expected })
}

pub fn cancelling_out() -> Scenario {
    parse_scenario(CANCELLING_OUT).expect("bundled scenario is valid")
}

/// Raw JSON of the bundled scenario.
pub fn cancelling_out_json() -> &'static str {
    CANCELLING_OUT
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{best_circulation, best_single_cycle};
    use crate::solver::solve_rebalancing;

    #[test]
    fn documented_values_hold() {
        let s = cancelling_out();
        let e = &s.expected;
        let global = solve_rebalancing(&s.instance, None).unwrap();
        assert_eq!(global.objective, e.global_objective);
        assert_eq!(best_circulation(&s.instance).value, e.global_objective as i64);
        let (single, _, _) = best_single_cycle(&s.instance).unwrap();
        assert_eq!(single, e.best_single_cycle_objective);
        assert_eq!(e.global_objective - single, e.gap);

        let alice = NodeId::from("Alice");
        assert_eq!(global.circulation.flow(&e.focus_node, &alice), e.focus_global_flow);
        // The Alice-Bob-Charlie triangle is bottlenecked by Alice->Bob.
        let ab = s.instance.edges().iter().find(|c| c.from == alice && c.to.as_str() == "Bob").unwrap();
        assert_eq!(ab.capacity, e.focus_triangle_flow);
    }
}

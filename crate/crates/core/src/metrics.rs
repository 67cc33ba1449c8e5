//! pass@k, perplexity, accuracy, sensitivity, and batch evaluation.

use serde::Serialize;
use thiserror::Error;

use crate::bt::{validate_structure, BehaviorTree};
use crate::format::{parse_bt_xml, serialize_bt_xml};
use crate::library::NodeLibrary;
use crate::sim::Scenario;
use crate::synth::{synthesize, validate_state, SearchConfig, SynthError, Task};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid arguments: {0}")]
pub struct InvalidArgs(pub String);

/// Probability that at least one of `k` samples drawn without replacement
/// from `n` (of which `c` are correct) is correct.
///
/// Uses `1 - prod_{i=n-c+1}^{n} (1 - k/i)`, which avoids large binomials.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, InvalidArgs> {
    if k < 1 || k > n || c > n {
        return Err(InvalidArgs(format!("need 1 <= k <= n and c <= n, got n={n}, c={c}, k={k}")));
    }
    if n - c < k {
        return Ok(1.0);
    }
    let miss: f64 = (n - c + 1..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - miss)
}

/// `exp(-(1/N) * sum(ln p_i))`.
pub fn perplexity(probabilities: &[f64]) -> Result<f64, InvalidArgs> {
    if probabilities.is_empty() {
        return Err(InvalidArgs("perplexity of an empty sequence".into()));
    }
    if let Some(p) = probabilities.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(InvalidArgs(format!("token probability {p} outside (0, 1]")));
    }
    let mean_log: f64 = probabilities.iter().map(|p| p.ln()).sum::<f64>() / probabilities.len() as f64;
    Ok((-mean_log).exp())
}

pub fn accuracy(outcomes: &[bool]) -> Result<f64, InvalidArgs> {
    if outcomes.is_empty() {
        return Err(InvalidArgs("accuracy of no outcomes".into()));
    }
    Ok(outcomes.iter().filter(|o| **o).count() as f64 / outcomes.len() as f64)
}

/// Population standard deviation.
pub fn sensitivity(accuracies: &[f64]) -> Result<f64, InvalidArgs> {
    if accuracies.is_empty() {
        return Err(InvalidArgs("sensitivity of no accuracies".into()));
    }
    let n = accuracies.len() as f64;
    let mean = accuracies.iter().sum::<f64>() / n;
    if accuracies.iter().all(|a| *a == accuracies[0]) {
        return Ok(0.0);
    }
    Ok((accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Produces one tree per call; `Err` counts as an incorrect sample.
pub trait TreeGenerator {
    fn generate(
        &self,
        task: &Task,
        scenario: &Scenario,
        library: &NodeLibrary,
        config: &SearchConfig,
    ) -> Result<BehaviorTree, String>;
}

/// The built-in search, using the policy named in the config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Synthesizer;

impl TreeGenerator for Synthesizer {
    fn generate(
        &self,
        task: &Task,
        scenario: &Scenario,
        library: &NodeLibrary,
        config: &SearchConfig,
    ) -> Result<BehaviorTree, String> {
        match synthesize(task, scenario, library, config) {
            Ok((tree, _)) => Ok(tree),
            Err(SynthError::BudgetExhausted { best, .. }) => Ok(*best),
            Err(e) => Err(e.to_string()),
        }
    }
}

impl<F> TreeGenerator for F
where
    F: Fn(&Task, &Scenario, &NodeLibrary, &SearchConfig) -> Result<BehaviorTree, String>,
{
    fn generate(
        &self,
        task: &Task,
        scenario: &Scenario,
        library: &NodeLibrary,
        config: &SearchConfig,
    ) -> Result<BehaviorTree, String> {
        self(task, scenario, library, config)
    }
}

/// A sample is correct when its tree survives an XML round trip, is
/// structurally sound, and earns full reward in full simulation.
pub fn sample_correct(tree: &BehaviorTree, scenario: &Scenario, library: &NodeLibrary, config: &SearchConfig) -> bool {
    let Ok(reparsed) = parse_bt_xml(&serialize_bt_xml(tree)) else { return false };
    if !validate_structure(&reparsed, library).ok {
        return false;
    }
    let mut full = config.clone();
    full.levels.stub_simulation = true;
    full.levels.full_simulation = true;
    let fb = validate_state(&reparsed, scenario, library, &full);
    fb.accepted() && fb.reward == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassAtK {
    pub k: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemResult {
    pub scenario: String,
    pub n: u64,
    pub c: u64,
    pub pass_at_k: Vec<PassAtK>,
    /// Messages of samples whose generation failed.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub problems: Vec<ProblemResult>,
    pub mean_pass_at_k: Vec<PassAtK>,
    /// Fraction of all samples that were correct.
    pub accuracy: f64,
    /// Spread of per-problem accuracies.
    pub sensitivity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<f64>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Plain-text table, one row per problem.
    pub fn table(&self) -> String {
        let ks: Vec<u64> = self.mean_pass_at_k.iter().map(|p| p.k).collect();
        let mut out = format!("{:<20} {:>4} {:>4}", "scenario", "n", "c");
        for k in &ks {
            out += &format!(" {:>9}", format!("pass@{k}"));
        }
        out.push('\n');
        for p in &self.problems {
            out += &format!("{:<20} {:>4} {:>4}", p.scenario, p.n, p.c);
            for v in &p.pass_at_k {
                out += &format!(" {:>9.4}", v.value);
            }
            out.push('\n');
        }
        out += &format!("{:<20} {:>4} {:>4}", "mean", "", "");
        for v in &self.mean_pass_at_k {
            out += &format!(" {:>9.4}", v.value);
        }
        out += &format!("\naccuracy {:.4}  sensitivity {:.4}\n", self.accuracy, self.sensitivity);
        out
    }
}

/// Generates `n` samples per scenario (seeds `config.seed .. + n`), counts
/// the correct ones, and reports pass@k for every requested `k`.
///
/// Generation errors count as incorrect samples; the suite never aborts.
/// Problems are reported in scenario-name order.
pub fn evaluate_generator(
    generator: &dyn TreeGenerator,
    problems: &[(Scenario, NodeLibrary)],
    n: u64,
    ks: &[u64],
    config: &SearchConfig,
) -> Result<MetricReport, InvalidArgs> {
    if problems.is_empty() || ks.is_empty() {
        return Err(InvalidArgs("need at least one scenario and one k".into()));
    }
    if let Some(k) = ks.iter().find(|k| **k < 1 || **k > n) {
        return Err(InvalidArgs(format!("k={k} not in 1..={n}")));
    }
    let mut order: Vec<&(Scenario, NodeLibrary)> = problems.iter().collect();
    order.sort_by(|a, b| a.0.name.cmp(&b.0.name));

    let mut results = Vec::new();
    let mut all = Vec::new();
    let mut per_problem = Vec::new();
    for (scenario, library) in order {
        let task = Task::from_scenario(scenario);
        let mut c = 0;
        let mut errors = Vec::new();
        let mut outcomes = Vec::new();
        for i in 0..n {
            let sample_config = SearchConfig { seed: config.seed.wrapping_add(i), ..config.clone() };
            let ok = match generator.generate(&task, scenario, library, &sample_config) {
                Ok(tree) => sample_correct(&tree, scenario, library, &sample_config),
                Err(e) => {
                    errors.push(e);
                    false
                }
            };
            c += u64::from(ok);
            outcomes.push(ok);
        }
        all.extend(&outcomes);
        per_problem.push(accuracy(&outcomes)?);
        let pass_at_k = ks.iter().map(|&k| Ok(PassAtK { k, value: pass_at_k(n, c, k)? })).collect::<Result<_, _>>()?;
        results.push(ProblemResult { scenario: scenario.name.clone(), n, c, pass_at_k, errors });
    }
    let mean_pass_at_k = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| PassAtK {
            k,
            value: results.iter().map(|r| r.pass_at_k[i].value).sum::<f64>() / results.len() as f64,
        })
        .collect();
    Ok(MetricReport {
        problems: results,
        mean_pass_at_k,
        accuracy: accuracy(&all)?,
        sensitivity: sensitivity(&per_problem)?,
        perplexity: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fixture;

    #[test]
    fn pass_at_k_examples() {
        assert_eq!(pass_at_k(10, 0, 5).unwrap(), 0.0);
        assert_eq!(pass_at_k(10, 10, 1).unwrap(), 1.0);
        // 21 of the 252 five-subsets avoid all three correct samples
        assert!((pass_at_k(10, 3, 5).unwrap() - 11.0 / 12.0).abs() < 1e-12);
        assert!(pass_at_k(3, 1, 4).is_err());
        assert!(pass_at_k(3, 4, 1).is_err());
        assert!(pass_at_k(3, 1, 0).is_err());
    }

    #[test]
    fn perplexity_examples() {
        assert!((perplexity(&[1.0; 7]).unwrap() - 1.0).abs() < 1e-12);
        assert!((perplexity(&[0.125; 5]).unwrap() - 8.0).abs() < 1e-9);
        assert!((perplexity(&[0.5, 0.25]).unwrap() - 8f64.sqrt()).abs() < 1e-9);
        assert!(perplexity(&[]).is_err());
        assert!(perplexity(&[0.0]).is_err());
        assert!(perplexity(&[1.5]).is_err());
        assert!(perplexity(&[f64::NAN]).is_err());
    }

    #[test]
    fn accuracy_and_sensitivity() {
        assert_eq!(accuracy(&[true, true]).unwrap(), 1.0);
        assert_eq!(accuracy(&[true, false, false, false]).unwrap(), 0.25);
        assert_eq!(sensitivity(&[0.7, 0.7, 0.7]).unwrap(), 0.0);
        assert_eq!(sensitivity(&[0.5, 1.0]).unwrap(), 0.25);
        assert_eq!(sensitivity(&[0.3]).unwrap(), 0.0);
        assert!(accuracy(&[]).is_err() && sensitivity(&[]).is_err());
    }

    #[test]
    fn oracle_generator_scores_one() {
        let problems = vec![fixture("uav_patrol"), fixture("recharge_dock")];
        let report = evaluate_generator(&Synthesizer, &problems, 3, &[1, 3], &SearchConfig::default()).unwrap();
        assert_eq!(report.problems[0].scenario, "recharge_dock");
        assert!(report.problems.iter().all(|p| p.c == 3));
        assert!(report.mean_pass_at_k.iter().all(|p| p.value == 1.0));
        assert_eq!((report.accuracy, report.sensitivity), (1.0, 0.0));
        assert!(report.table().contains("pass@3"));
    }

    #[test]
    fn failing_generator_scores_zero() {
        let broken = |_: &Task, _: &Scenario, _: &NodeLibrary, _: &SearchConfig| -> Result<BehaviorTree, String> {
            Err("no tree".into())
        };
        let problems = vec![fixture("uav_patrol")];
        let report = evaluate_generator(&broken, &problems, 4, &[2], &SearchConfig::default()).unwrap();
        assert_eq!(report.problems[0].c, 0);
        assert_eq!(report.problems[0].errors.len(), 4);
        assert_eq!(report.mean_pass_at_k[0].value, 0.0);
        assert!(evaluate_generator(&broken, &problems, 4, &[5], &SearchConfig::default()).is_err());
    }
}

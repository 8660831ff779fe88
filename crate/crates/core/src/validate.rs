//! Fixed verification battery run by `tradegame validate`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::br::{cycle_fixture, CYCLE_COSTS};
use crate::game::{CostParts, ExactKappa};
use crate::{dp, enumerate, sample};

/// Deliberate corruption used to show that a check can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Adds `num/den` to κ in the permanent term of the total cost.
    PermKappa { num: i64, den: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    pub samples: usize,
    pub dp_instances: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            dp_instances: 1_000,
            seed: 0x5eed,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

const KAPPAS: [(i64, i64); 9] = [(0, 1), (1, 2), (1, 1), (3, 2), (2, 1), (5, 2), (3, 1), (5, 1), (10, 1)];

pub fn validate_suite(opts: &ValidateOptions) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    ValidationReport {
        checks: alloc::vec![
            check_cycle(),
            check_decomposition(&mut rng, opts.samples, opts.fault),
            check_constant_sum(&mut rng, opts.samples),
            check_dp_oracle(&mut rng, opts.dp_instances),
        ],
    }
}

fn check_cycle() -> CheckResult {
    let replay = cycle_fixture();
    CheckResult {
        name: "cycle_fixture",
        passed: replay.costs == CYCLE_COSTS && replay.returns_to_start,
        detail: format!("costs {:?}, returns to start: {}", replay.costs, replay.returns_to_start),
    }
}

/// `den·c`, or `den·fden·c` with the corrupted κ when a fault is injected.
fn faulty_scaled_total(parts: &CostParts, kappa: ExactKappa, fault: Option<Fault>) -> i128 {
    match fault {
        None => parts.scaled_total(kappa),
        Some(Fault::PermKappa { num, den }) => {
            let q = kappa.den as i128;
            let perm_num = kappa.num as i128 * den as i128 + num as i128 * q;
            den as i128 * q * parts.temp as i128 + perm_num * parts.perm as i128
        }
    }
}

fn check_decomposition(rng: &mut ChaCha8Rng, samples: usize, fault: Option<Fault>) -> CheckResult {
    let mut worst_rel = 0.0f64;
    let mut exact_failures = 0usize;
    for s in 0..samples {
        let (num, den) = KAPPAS[s % KAPPAS.len()];
        let kappa = ExactKappa::new(num, den);
        let k = kappa.to_f64();
        let spec = sample::random_spec(rng, 4, 6, 5, k);
        let profile = sample::random_profile(&spec, rng);
        let i = rng.random_range(0..spec.n());
        let parts = profile.cost_parts(i).expect("player index in range");
        let fault_den = match fault {
            Some(Fault::PermKappa { den, .. }) => den as i128,
            None => 1,
        };
        // 2·scale·c versus 2·scale·((1 − κ/2)·c_temp + κ·c̄_perm).
        let lhs = 2 * faulty_scaled_total(&parts, kappa, fault);
        let (p, q) = (num as i128, den as i128);
        let rhs = fault_den * ((2 * q - p) * parts.temp as i128 + p * parts.perm_mean_twice as i128);
        if lhs != rhs {
            exact_failures += 1;
        }
        let total = lhs as f64 / (2 * q * fault_den) as f64;
        let decomposed = (1.0 - k / 2.0) * parts.temp as f64 + k * parts.perm_mean();
        let rel = (total - decomposed).abs() / total.abs().max(1.0);
        worst_rel = worst_rel.max(rel);
    }
    CheckResult {
        name: "decomposition_identity",
        passed: exact_failures == 0 && worst_rel <= 1e-9,
        detail: format!(
            "{samples} profiles, {exact_failures} exact mismatches, worst relative residual {worst_rel:e}"
        ),
    }
}

fn check_constant_sum(rng: &mut ChaCha8Rng, samples: usize) -> CheckResult {
    let mut failures = 0usize;
    let mut mixed = 0usize;
    for _ in 0..samples {
        let spec = sample::random_spec(rng, 4, 6, 5, 1.0);
        let profile = sample::random_profile(&spec, rng);
        let total: i64 = spec.players().iter().map(|s| s.volume()).sum();
        let twice: i64 = (0..spec.n())
            .map(|i| profile.cost_parts(i).expect("index in range").perm_mean_twice)
            .sum();
        if twice != total * total {
            failures += 1;
        }
        let signs = spec.players().iter().map(|s| s.volume().signum());
        if signs.clone().any(|x| x > 0) && signs.clone().any(|x| x < 0) {
            mixed += 1;
        }
    }
    CheckResult {
        name: "constant_sum",
        passed: failures == 0 && (samples == 0 || mixed > 0),
        detail: format!("{samples} profiles ({mixed} with mixed-sign volumes), {failures} mismatches"),
    }
}

fn check_dp_oracle(rng: &mut ChaCha8Rng, instances: usize) -> CheckResult {
    let mut mismatches = 0usize;
    for _ in 0..instances {
        let t = rng.random_range(1..=5usize);
        let lo = rng.random_range(-5..=5i64);
        let hi = rng.random_range(lo..=5);
        let v = rng.random_range(lo * t as i64..=hi * t as i64);
        let space = crate::game::ActionSpace::new(v, t, lo, hi).expect("feasible volume");
        let width = (hi - lo + 1) as usize;
        let span = (hi - lo) * t as i64 + 1;
        let table: Vec<f64> = (0..t * span as usize * width)
            .map(|_| rng.random_range(-100..=100) as f64)
            .collect();
        let cost = |step: usize, held: i64, k: i64| {
            let h = (held - lo * step as i64) as usize;
            table[(step * span as usize + h) * width + (k - lo) as usize]
        };
        let dp_value = dp::minimize(&space, &cost).map(|s| s.1);
        let (_, brute) = enumerate::minimize(&space, &cost);
        if dp_value != Ok(brute) {
            mismatches += 1;
        }
    }
    CheckResult {
        name: "dp_vs_enumeration",
        passed: mismatches == 0,
        detail: format!("{instances} instances, {mismatches} mismatches"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ValidateOptions {
        ValidateOptions {
            samples: 500,
            dp_instances: 100,
            ..ValidateOptions::default()
        }
    }

    #[test]
    fn clean_build_passes() {
        let report = validate_suite(&quick());
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert_eq!(report.checks.len(), 4);
    }

    #[test]
    fn corrupted_perm_kappa_fails_decomposition() {
        let report = validate_suite(&ValidateOptions {
            fault: Some(Fault::PermKappa { num: 1, den: 10 }),
            ..quick()
        });
        let by_name = |n: &str| report.checks.iter().find(|c| c.name == n).unwrap();
        assert!(!by_name("decomposition_identity").passed);
        assert!(by_name("cycle_fixture").passed);
        assert!(!report.passed());
    }
}

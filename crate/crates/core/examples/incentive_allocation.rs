//! Budgeted incentive allocation: per-user uplift from the exact engine,
//! then the knapsack solver against the greedy heuristic.

use num_rational::BigRational;

use discoscm::optimizer::{allocate_exact, allocate_greedy, control_policy, estimate_tau, evaluate_policy, AllocationProblem};
use discoscm::rational::{fmt_decimal, fmt_fraction, frac, int};
use discoscm::scenario::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("incentive")?.model()?.clone();
    let arms = vec![int(0), int(1)];
    let tau = estimate_tau(&model, "T", &arms, "Y")?;

    // Coupons cost more for users with a higher feature value.
    let costs = model
        .units()
        .flat_map(|u| {
            let x = discoscm::rational::to_big(&model.feature(u, "xbar").unwrap());
            [((u, int(0)), frac(0, 1)), ((u, int(1)), frac(1, 1) + x * frac(2, 1))]
        })
        .collect();
    let budget: BigRational = frac(12, 1);
    let problem = AllocationProblem::new(arms, &tau, &costs, budget)?;

    let base = evaluate_policy(&model, &problem, &control_policy(&problem), "T", "Y")?;
    for (name, policy) in [("exact", allocate_exact(&problem)?), ("greedy", allocate_greedy(&problem))] {
        let value = evaluate_policy(&model, &problem, &policy, "T", "Y")?;
        let treated: Vec<String> = policy.assignment.iter().filter(|(_, a)| **a == int(1)).map(|(u, _)| u.to_string()).collect();
        println!(
            "{name:<6} uplift {} ({}), cost {}, conversions {} -> {}",
            fmt_fraction(&policy.expected_uplift),
            fmt_decimal(&policy.expected_uplift, 4),
            fmt_fraction(&policy.cost),
            fmt_decimal(&base.total, 4),
            fmt_decimal(&value.total, 4)
        );
        println!("       treated: {}", treated.join(" "));
    }
    Ok(())
}

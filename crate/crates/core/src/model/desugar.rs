//! Rewrites group-dependent noise laws into a unit-independent uniform
//! noise plus a per-group threshold chain inside the consuming equation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{GroupSel, ModelSpec, NoiseLaw, NoiseSpec, StructuralEquation};
use crate::expr::{BinOp, Expr};
use crate::pmf::FinitePmf;
use crate::rational::Value;

/// Largest uniform support the rewrite will create.
const MAX_SUPPORT: i64 = 1 << 20;

/// `if N <= c1 then v1 else if N <= c2 then v2 ... else vk` for one group's law.
fn threshold_chain(noise: &str, pmf: &FinitePmf, support: &BigInt) -> Expr {
    let live: Vec<&(Value, BigRational)> = pmf.entries().iter().filter(|(_, p)| !p.is_zero()).collect();
    let mut cumulative = BigRational::zero();
    let mut cuts = Vec::new();
    for (v, p) in &live {
        cumulative += p;
        let cut = (&cumulative * BigRational::from_integer(support.clone())).to_integer();
        cuts.push((*v, cut));
    }
    let (last, _) = cuts.pop().expect("pmf has positive mass");
    let mut expr = Expr::Const(last);
    for (v, cut) in cuts.into_iter().rev() {
        let cond = Expr::bin(BinOp::Le, Expr::name(noise), Expr::Const(Value::from_integer(cut.to_i64().unwrap_or(i64::MAX))));
        expr = Expr::if_else(cond, Expr::Const(v), expr);
    }
    expr
}

fn common_denominator(laws: &[(String, FinitePmf)]) -> BigInt {
    laws.iter().flat_map(|(_, p)| p.entries().iter().map(|(_, q)| q.denom().clone())).fold(BigInt::one(), |acc, d| acc.lcm(&d))
}

/// Returns the rewritten declaration, or a message if a law cannot be rewritten.
///
/// Callers are expected to have validated the laws themselves.
pub(crate) fn desugar(spec: &ModelSpec) -> Result<ModelSpec, String> {
    let mut out = spec.clone();
    let groups: Vec<String> = spec.population.groups.iter().map(|g| g.name.clone()).collect();
    for (k, noise) in spec.noises.iter().enumerate() {
        let NoiseLaw::ByGroup(laws) = &noise.law else { continue };
        let support = common_denominator(laws);
        let l = support
            .to_i64()
            .filter(|&l| l <= MAX_SUPPORT)
            .ok_or_else(|| format!("noise `{}`: common denominator {support} is too large to rewrite", noise.name))?;
        out.noises[k] = NoiseSpec { name: noise.name.clone(), law: NoiseLaw::Shared(FinitePmf::uniform_range(1, l)) };
        for eq in out.equations.iter_mut().filter(|e| e.noises.contains(&noise.name)) {
            *eq = rewrite_equation(eq, &noise.name, laws, &groups, &support)?;
        }
    }
    Ok(out)
}

fn rewrite_equation(
    eq: &StructuralEquation,
    noise: &str,
    laws: &[(String, FinitePmf)],
    groups: &[String],
    support: &BigInt,
) -> Result<StructuralEquation, String> {
    let mut bodies = Vec::new();
    for g in groups {
        let Some(body) = eq.body_for(g) else { continue };
        let (_, law) = laws.iter().find(|(name, _)| name == g).ok_or_else(|| format!("noise `{noise}` has no law for group `{g}`"))?;
        let chain = threshold_chain(noise, law, support);
        bodies.push((GroupSel::Group(g.clone()), body.substitute(noise, &chain)));
    }
    Ok(StructuralEquation { target: eq.target.clone(), parents: eq.parents.clone(), noises: eq.noises.clone(), bodies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn bernoulli_becomes_threshold() {
        let pmf = FinitePmf::new(vec![(int(0), frac(4, 5)), (int(1), frac(1, 5))]).unwrap();
        let e = threshold_chain("E", &pmf, &BigInt::from(10));
        assert_eq!(e.to_string(), "if E <= 8 then 0 else 1");
    }

    #[test]
    fn lcm_over_groups() {
        let a = FinitePmf::new(vec![(int(0), frac(4, 5)), (int(1), frac(1, 5))]).unwrap();
        let b = FinitePmf::new(vec![(int(0), frac(1, 2)), (int(1), frac(1, 2))]).unwrap();
        let laws = vec![("S".to_string(), a), ("T".to_string(), b)];
        assert_eq!(common_denominator(&laws), BigInt::from(10));
    }
}

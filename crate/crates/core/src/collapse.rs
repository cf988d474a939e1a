//! Pseudo-strata formed by pairing adjacent strata, and the collapsed-strata
//! variance estimator.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::{csum, mean_var, Real};
use crate::strata::{true_design_variance, StratifiedPopulation, StratifiedSample};

/// Grouping of strata into pseudo-strata. Indices refer to positions in the
/// population's stratum list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollapsePlan {
    /// Strata in ascending key order.
    pub order: Vec<usize>,
    /// Consecutive runs of `order`; pairs, with one trailing triple when
    /// `H` is odd.
    pub groups: Vec<Vec<usize>>,
}

impl CollapsePlan {
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Export as `group,stratum_id` rows.
    pub fn write_csv<T: Real, W: Write>(
        &self,
        pop: &StratifiedPopulation<T>,
        writer: W,
    ) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["group", "stratum_id"])?;
        for (g, members) in self.groups.iter().enumerate() {
            for &h in members {
                wtr.write_record([g.to_string().as_str(), pop.strata()[h].label.as_str()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Sort strata by key (ties broken by id) and pair neighbours.
pub fn make_collapse_plan<T: Real>(pop: &StratifiedPopulation<T>) -> Result<CollapsePlan> {
    let strata = pop.strata();
    let ranks: Vec<(T, usize)> = strata.iter().map(|s| (s.key, s.id)).collect();
    plan_from_ranked(&ranks)
}

/// [`make_collapse_plan`] from keys alone; ties are broken by position.
pub fn plan_from_keys<T: Real>(keys: &[T]) -> Result<CollapsePlan> {
    let ranks: Vec<(T, usize)> = keys.iter().copied().zip(0..).collect();
    plan_from_ranked(&ranks)
}

fn plan_from_ranked<T: Real>(ranks: &[(T, usize)]) -> Result<CollapsePlan> {
    if ranks.len() < 2 {
        return Err(Error::CannotCollapse(format!(
            "need at least two strata, got {}",
            ranks.len()
        )));
    }
    if ranks.iter().any(|(k, _)| !k.is_finite()) {
        return Err(Error::CannotCollapse("stratum keys must be finite".into()));
    }
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_by(|&a, &b| {
        ranks[a]
            .0
            .partial_cmp(&ranks[b].0)
            .expect("finite keys")
            .then(ranks[a].1.cmp(&ranks[b].1))
    });
    let mut groups: Vec<Vec<usize>> = order.chunks(2).map(<[usize]>::to_vec).collect();
    if order.len() % 2 == 1 {
        let last = groups.pop().expect("odd H leaves a singleton");
        groups
            .last_mut()
            .expect("H >= 3 when odd")
            .extend(last);
    }
    Ok(CollapsePlan { order, groups })
}

/// Pooled sample statistics of one pseudo-stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoStratum<T> {
    pub index: usize,
    /// Member strata (positions in the population).
    pub members: Vec<usize>,
    /// Merged sample size `n_hl`.
    pub n: usize,
    /// Merged population size `N_hl`.
    pub big_n: usize,
    /// Pooled sample mean `ȳ_hl`.
    pub mean: T,
    /// Pooled sample variance `s²_hl` with the `(n_hl - 1)` denominator.
    pub s2: T,
}

impl<T: Real> PseudoStratum<T> {
    /// Number of original strata `L_g`.
    pub fn num_members(&self) -> usize {
        self.members.len()
    }

    /// `f_hl = n_hl / N_hl`.
    pub fn fraction(&self) -> T {
        T::from_usize_lossy(self.n) / T::from_usize_lossy(self.big_n)
    }

    /// `(N_hl² / n_hl)(1 - f_hl)`, the factor multiplying a variance
    /// estimate of the group.
    pub fn expansion(&self) -> T {
        let big = T::from_usize_lossy(self.big_n);
        big * big / T::from_usize_lossy(self.n) * (T::one() - self.fraction())
    }
}

/// Pool each group's sampled values.
pub fn collapse_sample<T: Real>(
    plan: &CollapsePlan,
    sample: &StratifiedSample<T>,
) -> Result<Vec<PseudoStratum<T>>> {
    plan.groups
        .iter()
        .enumerate()
        .map(|(g, members)| {
            let mut values = Vec::new();
            let mut big_n = 0;
            for &h in members {
                let s = sample.strata.get(h).ok_or_else(|| {
                    Error::InvalidDesign(format!("stratum {h} missing from sample"))
                })?;
                if s.size() < 1 {
                    return Err(Error::NotEstimable(format!("stratum {h} was not sampled")));
                }
                values.extend_from_slice(&s.values);
                big_n += s.population_size;
            }
            let (mean, s2) = mean_var(&values);
            let s2 = s2.ok_or_else(|| {
                Error::NotEstimable(format!("pseudo-stratum {g} has fewer than two units"))
            })?;
            Ok(PseudoStratum {
                index: g,
                members: members.clone(),
                n: values.len(),
                big_n,
                mean,
                s2,
            })
        })
        .collect()
}

/// `(1/N²) Σ_g (N_hl²/n_hl)(1 - f_hl) ρ_g` for per-group variance estimates
/// `ρ_g`.
pub fn assemble_variance<T: Real>(pseudo: &[PseudoStratum<T>], rho: &[T], total: usize) -> T {
    debug_assert_eq!(pseudo.len(), rho.len());
    let n = T::from_usize_lossy(total);
    csum(pseudo.iter().zip(rho).map(|(p, &r)| p.expansion() * r)) / (n * n)
}

/// Collapsed-strata variance estimator.
pub fn collapsed_variance<T: Real>(pseudo: &[PseudoStratum<T>], total: usize) -> T {
    let s2: Vec<T> = pseudo.iter().map(|p| p.s2).collect();
    assemble_variance(pseudo, &s2, total)
}

fn check_allocation<T: Real>(
    pop: &StratifiedPopulation<T>,
    plan: &CollapsePlan,
    n_h: &[usize],
) -> Result<()> {
    if n_h.len() != pop.num_strata() {
        return Err(Error::InvalidDesign("allocation length mismatch".into()));
    }
    if plan.groups.iter().flatten().any(|&h| h >= pop.num_strata()) {
        return Err(Error::InvalidDesign("plan refers to unknown strata".into()));
    }
    Ok(())
}

/// The textbook approximation of the design bias,
/// `(1/N²) Σ_g (N_hl²/n_hl)(1 - f_hl) (ȳ_h - ȳ_l)²`, summed over every pair
/// of members for a triple.
///
/// This expression drops the finite-population terms and overstates the
/// between-stratum contribution; [`collapsed_bias_exact`] gives the exact
/// design expectation.
pub fn collapsed_bias<T: Real>(
    pop: &StratifiedPopulation<T>,
    plan: &CollapsePlan,
    n_h: &[usize],
) -> Result<T> {
    check_allocation(pop, plan, n_h)?;
    let strata = pop.strata();
    let terms = plan.groups.iter().map(|members| {
        let n: usize = members.iter().map(|&h| n_h[h]).sum();
        let big: usize = members.iter().map(|&h| strata[h].size()).sum();
        let (n, big) = (T::from_usize_lossy(n), T::from_usize_lossy(big));
        let factor = big * big / n * (T::one() - n / big);
        let spread = csum(members.iter().enumerate().flat_map(|(i, &h)| {
            members[i + 1..].iter().map(move |&l| {
                let d = strata[h].mean() - strata[l].mean();
                d * d
            })
        }));
        factor * spread
    });
    let n = T::from_usize_lossy(pop.total());
    Ok(csum(terms) / (n * n))
}

/// Exact design expectation of the collapsed estimator under stratified
/// SRSWOR with allocation `n_h`.
///
/// For a group with members `h`, pooled size `n` and `μ̄ = Σ n_h μ_h / n`:
/// `E s² = [Σ n_h σ²_h - Σ n_h (1 - f_h) S²_h / n + Σ n_h (μ_h - μ̄)²] / (n - 1)`
/// where `σ²_h = (N_h - 1) S²_h / N_h`.
pub fn expected_collapsed_variance<T: Real>(
    pop: &StratifiedPopulation<T>,
    plan: &CollapsePlan,
    n_h: &[usize],
) -> Result<T> {
    check_allocation(pop, plan, n_h)?;
    let strata = pop.strata();
    let terms = plan
        .groups
        .iter()
        .map(|members| {
            let n_int: usize = members.iter().map(|&h| n_h[h]).sum();
            if n_int < 2 {
                return Err(Error::NotEstimable("pseudo-stratum with fewer than two units".into()));
            }
            let big_int: usize = members.iter().map(|&h| strata[h].size()).sum();
            let (n, big) = (T::from_usize_lossy(n_int), T::from_usize_lossy(big_int));
            let grand = csum(
                members
                    .iter()
                    .map(|&h| T::from_usize_lossy(n_h[h]) * strata[h].mean()),
            ) / n;
            let mut parts = Vec::new();
            for &h in members {
                let s = &strata[h];
                let nh = T::from_usize_lossy(n_h[h]);
                let bigh = T::from_usize_lossy(s.size());
                let s2 = s.variance().unwrap_or_else(T::zero);
                let pop_var = s2 * (bigh - T::one()) / bigh;
                let f = nh / bigh;
                let d = s.mean() - grand;
                parts.push(nh * pop_var);
                parts.push(-nh * (T::one() - f) * s2 / n);
                parts.push(nh * d * d);
            }
            let e_s2 = csum(parts) / (n - T::one());
            Ok(big * big / n * (T::one() - n / big) * e_s2)
        })
        .collect::<Result<Vec<T>>>()?;
    let n = T::from_usize_lossy(pop.total());
    Ok(csum(terms) / (n * n))
}

/// Exact design bias `E[var_Coll] - V(ȳ_st)`.
pub fn collapsed_bias_exact<T: Real>(
    pop: &StratifiedPopulation<T>,
    plan: &CollapsePlan,
    n_h: &[usize],
) -> Result<T> {
    let expected = expected_collapsed_variance(pop, plan, n_h)?;
    Ok(expected - true_design_variance(pop, n_h)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strata::Design;

    fn pop_with_keys(keys: &[f64], values: Vec<Vec<f64>>) -> StratifiedPopulation<f64> {
        StratifiedPopulation::from_groups(keys.iter().copied().zip(values)).unwrap()
    }

    #[test]
    fn pairs_for_even_h() {
        let p = pop_with_keys(&[0.4, 0.1, 0.3, 0.2], vec![vec![0.0]; 4]);
        let plan = make_collapse_plan(&p).unwrap();
        assert_eq!(plan.order, vec![1, 3, 2, 0]);
        assert_eq!(plan.groups, vec![vec![1, 3], vec![2, 0]]);
    }

    #[test]
    fn trailing_triple_for_odd_h() {
        let p = pop_with_keys(&[1.0, 2.0, 3.0, 4.0, 5.0], vec![vec![0.0]; 5]);
        let plan = make_collapse_plan(&p).unwrap();
        assert_eq!(plan.groups, vec![vec![0, 1], vec![2, 3, 4]]);
    }

    #[test]
    fn ties_fall_back_to_id_order() {
        let p = pop_with_keys(&[0.5; 6], vec![vec![0.0]; 6]);
        let plan = make_collapse_plan(&p).unwrap();
        assert_eq!(plan.order, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn single_stratum_cannot_collapse() {
        let p = pop_with_keys(&[0.5], vec![vec![1.0, 2.0]]);
        assert!(matches!(make_collapse_plan(&p), Err(Error::CannotCollapse(_))));
    }

    fn collapse(values: Vec<Vec<f64>>, idx: Vec<Vec<usize>>) -> Vec<PseudoStratum<f64>> {
        let keys: Vec<f64> = (0..values.len()).map(|h| h as f64).collect();
        let p = pop_with_keys(&keys, values);
        let plan = make_collapse_plan(&p).unwrap();
        let s = StratifiedSample::from_indices(&p, Design::Srswor, idx).unwrap();
        collapse_sample(&plan, &s).unwrap()
    }

    #[test]
    fn two_point_group() {
        let g = collapse(vec![vec![2.0, 9.0], vec![4.0, 9.0]], vec![vec![0], vec![0]]);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].mean, 3.0);
        assert_eq!(g[0].s2, 2.0);
        assert_eq!((g[0].n, g[0].big_n), (2, 4));
    }

    #[test]
    fn four_point_groups() {
        let g = collapse(
            vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0], vec![3.0, 3.0]],
            vec![vec![0, 1], vec![0, 1], vec![0, 1], vec![0, 1]],
        );
        assert_eq!(g[0].s2, 0.0);
        // {1, 1, 3, 3}: mean 2, SS = 4, / 3
        assert!((g[1].s2 - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_unit_group_is_not_estimable() {
        let p = pop_with_keys(&[0.0, 1.0], vec![vec![1.0], vec![2.0, 3.0]]);
        let mut plan = make_collapse_plan(&p).unwrap();
        plan.groups = vec![vec![0], vec![1]];
        let s = StratifiedSample::from_indices(&p, Design::Srswor, vec![vec![0], vec![0]]).unwrap();
        assert!(matches!(collapse_sample(&plan, &s), Err(Error::NotEstimable(_))));
    }

    #[test]
    fn zero_spread_and_census_give_zero() {
        let g = collapse(vec![vec![5.0; 3], vec![5.0; 3]], vec![vec![0], vec![2]]);
        assert_eq!(collapsed_variance(&g, 6), 0.0);
        let g = collapse(vec![vec![1.0], vec![7.0]], vec![vec![0], vec![0]]);
        assert_eq!(g[0].fraction(), 1.0);
        assert_eq!(collapsed_variance(&g, 2), 0.0);
    }

    #[test]
    fn bias_vanishes_for_equal_means() {
        let p = pop_with_keys(
            &[0.0, 1.0, 2.0, 3.0],
            vec![vec![1.0, 3.0], vec![0.0, 4.0], vec![5.0, 7.0], vec![6.0, 6.0]],
        );
        let plan = make_collapse_plan(&p).unwrap();
        assert_eq!(collapsed_bias(&p, &plan, &[1, 1, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn plan_csv_lists_every_stratum() {
        let p = pop_with_keys(&[3.0, 1.0, 2.0], vec![vec![0.0]; 3]);
        let plan = make_collapse_plan(&p).unwrap();
        let mut buf = Vec::new();
        plan.write_csv(&p, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "group,stratum_id\n0,1\n0,2\n0,0\n"
        );
    }
}

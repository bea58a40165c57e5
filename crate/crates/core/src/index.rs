//! Closed-form dimension and counting formulas.

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{counts, AsymptoticDataSet, IndexCounts};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("k_c = {kc} must lie in 0..={max}")]
    KcOutOfRange { kc: i64, max: i64 },
}

/// Formal dimension of the moduli space at genus `genus`.
pub fn formal_dimension(data: &AsymptoticDataSet, genus: u32) -> i64 {
    let c = counts(data);
    let (np, nm, nh, ch) = tallies(&c);
    np + 2 * (nm + nh + ch + genus as i64 - 1)
}

/// Degree of the normal bundle of an immersed representative.
pub fn degree_normal(data: &AsymptoticDataSet, genus: u32) -> i64 {
    let c = counts(data);
    let (np, nm, nh, ch) = tallies(&c);
    np + nm + nh + ch + 2 * genus as i64 - 2
}

/// Euler characteristic of the model curve: genus and one puncture per end.
pub fn euler_characteristic(data: &AsymptoticDataSet, genus: u32) -> i64 {
    2 - 2 * genus as i64 - data.ends.len() as i64
}

fn tallies(c: &IndexCounts) -> (i64, i64, i64, i64) {
    (c.n_plus as i64, c.n_minus as i64, c.n_hat as i64, c.c_hat as i64)
}

/// Critical-point budgets for a representative meeting the extreme loci
/// in `k_c` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CriticalBudget {
    /// Total degree budget of `d(theta)`: ends plus interior critical points.
    pub theta_budget: i64,
    /// Upper bound for the number of non-extremal critical points.
    pub crit_point_bound: i64,
    /// Upper bound for the singular-point count over the extreme loci.
    pub wp_star_bound: i64,
    /// Upper bound for the total singular-point count.
    pub wp_bound: i64,
}

pub fn critical_budget(
    data: &AsymptoticDataSet,
    genus: u32,
    k_c: i64,
) -> Result<CriticalBudget, IndexError> {
    let c = counts(data);
    let (np, nm, nh, ch) = tallies(&c);
    if k_c < 0 || k_c > ch {
        return Err(IndexError::KcOutOfRange { kc: k_c, max: ch });
    }
    let two_g = 2 * genus as i64;
    Ok(CriticalBudget {
        theta_budget: np + nm + nh + k_c + two_g - 2,
        crit_point_bound: nm + nh + k_c + two_g - 2,
        wp_star_bound: ch - k_c,
        wp_bound: nm + nh + ch + two_g - 2,
    })
}

/// Everything the `dim` command reports.
#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    pub i_hat: i64,
    pub deg_n: i64,
    pub euler: i64,
    pub genus: u32,
    pub counts: IndexCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budgets: Option<CriticalBudget>,
}

pub fn index_report(data: &AsymptoticDataSet, genus: u32, k_c: Option<i64>) -> Result<IndexReport, IndexError> {
    let budgets = match k_c {
        Some(k) => Some(critical_budget(data, genus, k)?),
        None => None,
    };
    Ok(IndexReport {
        i_hat: formal_dimension(data, genus),
        deg_n: degree_normal(data, genus),
        euler: euler_characteristic(data, genus),
        genus,
        counts: counts(data),
        budgets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{EndTuple, Sign};

    fn cylinder() -> AsymptoticDataSet {
        AsymptoticDataSet::new(
            vec![EndTuple::new(0, Sign::Plus, 0, 1), EndTuple::new(0, Sign::Minus, 0, 1)],
            0,
            0,
        )
    }
    fn pants() -> AsymptoticDataSet {
        AsymptoticDataSet::new(
            vec![
                EndTuple::new(0, Sign::Minus, 0, 1),
                EndTuple::new(0, Sign::Minus, 1, 1),
                EndTuple::new(0, Sign::Plus, 1, 2),
            ],
            0,
            0,
        )
    }
    fn disk() -> AsymptoticDataSet {
        AsymptoticDataSet::new(vec![EndTuple::new(0, Sign::Minus, 0, 1)], 1, 0)
    }

    #[test]
    fn worked_dimensions() {
        assert_eq!(formal_dimension(&cylinder(), 0), 1);
        assert_eq!(formal_dimension(&pants(), 0), 3);
        assert_eq!(formal_dimension(&disk(), 0), 2);
    }

    #[test]
    fn degrees() {
        assert_eq!(degree_normal(&cylinder(), 0), 0);
        assert_eq!(degree_normal(&pants(), 0), 1);
        assert_eq!(degree_normal(&disk(), 0), 0);
    }

    #[test]
    fn budgets() {
        // Direct substitution into the budget formulas.
        let b = critical_budget(&pants(), 0, 0).unwrap();
        assert_eq!(b.theta_budget, 1);
        assert_eq!(b.crit_point_bound, 0);
        assert_eq!(b.wp_star_bound, 0);
        assert_eq!(b.wp_bound, 0);

        let b = critical_budget(&disk(), 0, 1).unwrap();
        assert_eq!(b.theta_budget, 0);
        assert_eq!(b.crit_point_bound, 0);
        assert_eq!(b.wp_star_bound, 0);

        let b = critical_budget(&cylinder(), 0, 0).unwrap();
        assert_eq!(b.theta_budget, 0);

        assert!(critical_budget(&cylinder(), 0, 1).is_err());
    }

    #[test]
    fn index_identity() {
        // -chi + I = 2 Deg(N) + N_minus + N_hat, exactly.
        for d in [cylinder(), pants(), disk()] {
            for g in 0..=5 {
                let c = counts(&d);
                let lhs = -euler_characteristic(&d, g) + formal_dimension(&d, g);
                let rhs = 2 * degree_normal(&d, g) + c.n_minus as i64 + c.n_hat as i64;
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn genus_monotonicity() {
        for g in 0..5 {
            assert_eq!(formal_dimension(&pants(), g + 1) - formal_dimension(&pants(), g), 2);
        }
    }
}

//! Shared helpers for the integration suites: seeded generators for
//! angle-defining pairs and asymptotic data sets, plus float oracles.
#![allow(dead_code)] // each test target compiles its own copy

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use reebcyl::algebra::{defines_angle, IntegerPair};
use reebcyl::dataset::{AsymptoticDataSet, EndTuple, Sign};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random angle-defining pair with coordinates in `[-limit, limit]`.
pub fn random_angle_pair(rng: &mut ChaCha8Rng, limit: i64) -> IntegerPair {
    loop {
        let p = rng.gen_range(-limit..=limit);
        let pp = rng.gen_range(-limit..=limit);
        let pair = IntegerPair::new(p, pp);
        if defines_angle(&pair) {
            return pair;
        }
    }
}

/// Float oracle for `cos` of the orbit angle defined by `pair`.
pub fn cos_oracle(pair: &IntegerPair) -> f64 {
    let (p, pp) = (pair.p as f64, pair.pp as f64);
    if pair.pp == 0 {
        return 0.0;
    }
    let r = (p * p + 2.0 * pp * pp).sqrt();
    6f64.sqrt() * (r - p) / (6.0 * pp)
}

pub fn theta_oracle(pair: &IntegerPair) -> f64 {
    cos_oracle(pair).acos()
}

/// Draw a random data set.  Roughly half come out valid; the rest carry
/// one injected defect (a broken sum rule, a non-primitive cylinder pair,
/// a concave end at an extremal angle, or an inadmissible slope).
pub fn random_data_set(rng: &mut ChaCha8Rng) -> AsymptoticDataSet {
    let mut data = random_balanced_data_set(rng);
    match rng.gen_range(0..8) {
        0 => {
            // Break the Stokes sum.
            let k = rng.gen_range(0..data.ends.len());
            data.ends[k].pp += 1;
        }
        1 => {
            // Duplicate an end; almost always breaks the sums.
            let k = rng.gen_range(0..data.ends.len());
            let e = data.ends[k];
            data.ends.push(e);
        }
        2 => {
            // Inadmissible slope.
            let k = rng.gen_range(0..data.ends.len());
            data.ends[k] = EndTuple::new(0, data.ends[k].sign, -3, 1);
        }
        3 => {
            // Move a concave end onto the top angle.
            if let Some(top) = data
                .ends
                .iter()
                .filter(|e| e.delta.get() == 0)
                .max_by(|a, b| theta_oracle(&a.pair()).total_cmp(&theta_oracle(&b.pair())))
                .copied()
            {
                data.ends.push(EndTuple::new(0, Sign::Plus, top.p, top.pp));
                data.ends.push(EndTuple::new(0, Sign::Minus, top.p, top.pp));
            }
        }
        _ => {}
    }
    data
}

/// A data set satisfying the Stokes sums by construction: interior
/// content is chosen freely and the bottom convex content absorbs the
/// residual, provided it lands strictly below everything else.
pub fn random_balanced_data_set(rng: &mut ChaCha8Rng) -> AsymptoticDataSet {
    loop {
        if let Some(d) = try_balanced(rng) {
            return d;
        }
    }
}

fn try_balanced(rng: &mut ChaCha8Rng) -> Option<AsymptoticDataSet> {
    let mut ends: Vec<EndTuple> = Vec::new();
    let mut c_plus = 0u32;
    let mut c_minus = 0u32;

    // Candidate interior angles, smallest cosine class last.
    let n_interior = rng.gen_range(1..=3usize);
    let mut pool: Vec<IntegerPair> = Vec::new();
    while pool.len() < n_interior + 1 {
        let p = random_angle_pair(rng, 4);
        if pool.iter().all(|x| !same_angle(x, &p)) {
            pool.push(p);
        }
    }
    pool.sort_by(|a, b| theta_oracle(a).total_cmp(&theta_oracle(b)));
    let top = pool.pop().expect("non-empty");

    // Interior (0,+) ends; occasionally paired (0,-) content at the same
    // angle, which exercises the pivot expansion.
    for p in &pool {
        let mult = rng.gen_range(1..=2);
        ends.push(EndTuple::new(0, Sign::Plus, p.p * mult, p.pp * mult));
        if rng.gen_bool(0.3) {
            ends.push(EndTuple::new(0, Sign::Minus, p.p, p.pp));
            ends.push(EndTuple::new(0, Sign::Plus, p.p, p.pp));
        }
    }
    // Top convex content: one or two ends on the top angle.
    let top_mult = rng.gen_range(1..=2);
    for _ in 0..top_mult {
        ends.push(EndTuple::new(0, Sign::Minus, top.p, top.pp));
    }

    // Optional pole content.
    if rng.gen_bool(0.3) {
        c_plus = rng.gen_range(1..=2);
    }
    if rng.gen_bool(0.3) {
        c_minus = rng.gen_range(1..=2);
    }
    if rng.gen_bool(0.25) {
        // A concave theta=pi end: p < 0 and p' < -sqrt(3/2)|p|.
        let p = -rng.gen_range(1..=2i64);
        let pp = -(p.abs() * 2 + rng.gen_range(0..=2));
        ends.push(EndTuple::new(-1, Sign::Plus, p, pp));
    }
    if rng.gen_bool(0.25) {
        // A convex theta=0 end: p < 0 and p'/p > -sqrt(3/2).
        let p = -rng.gen_range(1..=2i64);
        let pp = rng.gen_range(-1..=1);
        ends.push(EndTuple::new(1, Sign::Minus, p, pp));
    }

    // Balance: the bottom convex content absorbs the residual sum.
    let mut residual = IntegerPair::new(0, 0);
    for e in &ends {
        residual = residual.add(&e.pair().scale(match e.sign {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }));
    }
    residual = residual.add(&IntegerPair::new(0, c_plus as i64 - c_minus as i64));
    // Need sum(sign * pair) + (0, c+ - c-) = 0, so the bottom (0,-) end
    // carries exactly `residual`... which must define an angle strictly
    // below every other one.
    let bottom = residual;
    if !defines_angle(&bottom) || bottom.is_zero() {
        return None;
    }
    let bottom_theta = theta_oracle(&bottom);
    let all_above = ends
        .iter()
        .filter(|e| e.delta.get() == 0)
        .all(|e| theta_oracle(&e.pair()) > bottom_theta + 1e-9);
    if !all_above {
        return None;
    }
    ends.push(EndTuple::new(0, Sign::Minus, bottom.p, bottom.pp));
    Some(AsymptoticDataSet::new(ends, c_plus, c_minus))
}

fn same_angle(a: &IntegerPair, b: &IntegerPair) -> bool {
    reebcyl::algebra::compare_angles(a, b) == std::cmp::Ordering::Equal
}

/// Handy fixtures.
pub fn pants() -> AsymptoticDataSet {
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

pub fn disk() -> AsymptoticDataSet {
    AsymptoticDataSet::new(vec![EndTuple::new(0, Sign::Minus, 0, 1)], 1, 0)
}

pub fn double_top() -> AsymptoticDataSet {
    // Two convex ends sharing the top angle: the expansion inserts one
    // trivalent vertex and two monovalent caps there.
    AsymptoticDataSet::new(
        vec![
            EndTuple::new(0, Sign::Minus, 0, 1),
            EndTuple::new(0, Sign::Plus, 2, 3),
            EndTuple::new(0, Sign::Minus, 1, 1),
            EndTuple::new(0, Sign::Minus, 1, 1),
        ],
        0,
        0,
    )
}

pub fn pi_cluster() -> AsymptoticDataSet {
    // One concave theta=pi end plus one intersection with the theta=pi
    // cylinder: the expansion puts one trivalent vertex near pi.
    AsymptoticDataSet::new(
        vec![
            EndTuple::new(-1, Sign::Plus, -2, -3),
            EndTuple::new(0, Sign::Minus, -2, -4),
        ],
        0,
        1,
    )
}

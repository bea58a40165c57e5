//! Acceptance suite: one test per criterion, each printing a PASS line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.

#![allow(clippy::needless_range_loop)]

mod common;

use std::time::Instant;

use common::*;
use rand::Rng;

use reebcyl::algebra::{
    alpha_eval, alpha_sign_at_orbit, bracket, compare_angles, AngleClass, IntegerPair,
};
use reebcyl::dataset::counts;
use reebcyl::algebra::SQRT6;
use reebcyl::geometry::{
    exterior_derivative_fd, frame_at, mat_mul, mat_vec, pde_residual, symplectic_primitive,
    GeoPoint, Grid2,
};
use reebcyl::index::{degree_normal, euler_characteristic, formal_dimension};
use reebcyl::linegraph::{decide_nonempty, validate_line_graph, Verdict};
use reebcyl::moduligraph::{apply_move, expand_to_moduli_graph, linearize, validate_positive_graph};
use reebcyl::par::Exec;
use reebcyl::sampler::{
    fit_end_decay, sample_cylinder, verify_chart, zeta_rate, ChartSpec, EndKind, Profile,
    SigmaBound,
};

fn pass(n: u32, what: &str) {
    println!("acceptance {n:02} ({what}): PASS");
}

#[test]
fn criterion_01_exact_vs_float_oracle() {
    let start = Instant::now();
    let mut r = rng(101);
    let mut order_checked = 0;
    let mut sign_checked = 0;
    for _ in 0..1000 {
        let p = random_angle_pair(&mut r, 50);
        let q = random_angle_pair(&mut r, 50);
        let cp = cos_oracle(&p);
        let cq = cos_oracle(&q);
        if (cp - cq).abs() > 1e-9 {
            // Larger cosine means smaller angle.
            let float_order = if cp > cq {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            };
            assert_eq!(compare_angles(&p, &q), float_order, "order mismatch at {p} vs {q}");
            order_checked += 1;
        }
        let class = AngleClass::from_pair(p).unwrap();
        let alpha = alpha_eval(&q, theta_oracle(&p));
        if alpha.abs() > 1e-9 {
            let want = if alpha > 0.0 { 1 } else { -1 };
            assert_eq!(alpha_sign_at_orbit(&q, &class), want, "sign mismatch at {p}, {q}");
            sign_checked += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(order_checked > 800 && sign_checked > 800, "oracle barely exercised");
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 1 runtime {elapsed:?}");
    pass(1, "exact vs float oracle");
}

#[test]
fn criterion_02_pluecker_identity() {
    let mut r = rng(202);
    for _ in 0..1000 {
        let a: Vec<IntegerPair> = (0..4)
            .map(|_| IntegerPair::new(r.gen_range(-1_000_000..=1_000_000), r.gen_range(-1_000_000..=1_000_000)))
            .collect();
        let term = |i: usize, j: usize, k: usize, l: usize| bracket(&a[i], &a[j]) * bracket(&a[k], &a[l]);
        let total = term(1, 2, 3, 0) + term(2, 3, 1, 0) + term(3, 1, 2, 0);
        assert_eq!(total, 0, "Pluecker identity failed for {a:?}");
    }
    pass(2, "Pluecker identity exact");
}

#[test]
fn criterion_03_decision_soundness() {
    let mut r = rng(303);
    let mut n_nonempty = 0;
    let mut n_empty = 0;
    for _ in 0..500 {
        let data = random_data_set(&mut r);
        match decide_nonempty(&data) {
            Verdict::Nonempty { witness } => {
                n_nonempty += 1;
                assert!(
                    validate_line_graph(&witness, &data).pass(),
                    "witness fails validation for {data:?}"
                );
            }
            Verdict::NonemptyOneAngle { .. } => {}
            Verdict::Empty { reasons } => {
                n_empty += 1;
                assert!(!reasons.is_empty(), "empty verdict without a reason");
                for reason in &reasons {
                    let id = reason.rule.as_str();
                    assert!(
                        id == "structural"
                            || id.starts_with("1.14")
                            || id.starts_with("1.15")
                            || id.starts_with("1.16")
                            || id.starts_with("1.17")
                            || id.starts_with("1.18"),
                        "unexpected rule id {id}"
                    );
                }
            }
        }
    }
    assert!(n_nonempty > 50 && n_empty > 50, "corpus is not mixed enough");
    pass(3, "decision soundness over 500 data sets");
}

#[test]
fn criterion_04_round_trip() {
    let start = Instant::now();
    let mut r = rng(404);
    let mut done = 0;
    let mut attempts = 0;
    while done < 200 {
        attempts += 1;
        assert!(attempts < 5000, "generator exhausted after {attempts} attempts");
        let data = random_data_set(&mut r);
        let witness = match decide_nonempty(&data) {
            Verdict::Nonempty { witness } => witness,
            _ => continue,
        };
        let moduli = expand_to_moduli_graph(&witness, &data, 1e-4).expect("expansion succeeds");

        // Replay the move sequence one step at a time, validating every
        // intermediate graph.
        let mut g = moduli.graph.clone();
        let mut guard = 0;
        while let Some(v) = pick_active(&g) {
            let (next, _) = apply_move(&g, v).expect("a move applies");
            assert!(
                validate_positive_graph(&next, &data).pass(),
                "intermediate graph invalid for {data:?}"
            );
            g = next;
            guard += 1;
            assert!(guard < 10_000);
        }

        let (line, _) = linearize(&moduli.graph, &data).expect("linearization succeeds");
        assert!(line.label_isomorphic(&witness), "round trip differs for {data:?}");
        done += 1;
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 4 runtime {elapsed:?}");
    pass(4, "round trip over 200 nonempty instances");
}

/// The schedule the linearizer uses: descending movers bottom-up first,
/// then ascending ones top-down.
fn pick_active(g: &reebcyl::moduligraph::PositiveGraph) -> Option<usize> {
    let mut down = Vec::new();
    let mut up = Vec::new();
    for v in g.trivalent_vertices() {
        let above = g
            .neighbors(v)
            .into_iter()
            .filter(|&(_, w)| g.vertex(w).angle > g.vertex(v).angle)
            .count();
        if above == 1 {
            down.push(v);
        } else {
            up.push(v);
        }
    }
    down.sort_by(|&a, &b| g.vertex(a).angle.cmp(&g.vertex(b).angle));
    up.sort_by(|&a, &b| g.vertex(a).angle.cmp(&g.vertex(b).angle));
    down.first().copied().or_else(|| up.last().copied())
}

#[test]
fn criterion_05_index_identities() {
    // Worked dimensions.
    assert_eq!(formal_dimension(&pants(), 0), 3);
    assert_eq!(formal_dimension(&disk(), 0), 2);
    let cylinder = reebcyl::dataset::AsymptoticDataSet::new(
        vec![
            reebcyl::dataset::EndTuple::new(0, reebcyl::dataset::Sign::Plus, 0, 1),
            reebcyl::dataset::EndTuple::new(0, reebcyl::dataset::Sign::Minus, 0, 1),
        ],
        0,
        0,
    );
    assert_eq!(formal_dimension(&cylinder, 0), 1);

    // The degree/index identity, exactly, over random data and genus <= 3.
    let mut r = rng(505);
    for _ in 0..300 {
        let data = random_data_set(&mut r);
        let c = counts(&data);
        for genus in 0..=3 {
            let lhs = -euler_characteristic(&data, genus) + formal_dimension(&data, genus);
            let rhs = 2 * degree_normal(&data, genus) + c.n_minus as i64 + c.n_hat as i64;
            assert_eq!(lhs, rhs, "index identity failed for {data:?} at genus {genus}");
        }
    }
    pass(5, "index identities and worked dimensions");
}

#[test]
fn criterion_06_geometry_kernel() {
    let mut r = rng(606);
    for _ in 0..100 {
        let p = GeoPoint::new(
            r.gen_range(-1.0..1.0),
            r.gen_range(0.0..std::f64::consts::TAU),
            r.gen_range(0.05..std::f64::consts::PI - 0.05),
            r.gen_range(0.0..std::f64::consts::TAU),
        );
        let f = frame_at(&p).unwrap();

        // J^2 = -1.
        let jj = mat_mul(&f.j, &f.j);
        for i in 0..4 {
            for k in 0..4 {
                let want = if i == k { -1.0 } else { 0.0 };
                assert!((jj[i][k] - want).abs() < 1e-9, "J^2 deviates at {p:?}");
            }
        }
        // d(alpha)(reeb, .) = 0.
        let dv = mat_vec(&f.d_alpha, &f.reeb);
        for x in dv {
            assert!(x.abs() < 1e-8);
        }
        // Product metric.
        let sn2 = p.theta.sin().powi(2);
        for i in 0..4 {
            for k in 0..4 {
                let want = match (i, k) {
                    (0, 0) | (1, 1) | (2, 2) => 1.0,
                    (3, 3) => sn2,
                    _ => 0.0,
                };
                assert!((f.g_metric[i][k] - want).abs() < 1e-8, "metric deviates at {p:?}");
            }
        }
        // J d/ds is the unit multiple of the Reeb field.
        let c = p.theta.cos();
        let scale = (1.0 + 3.0 * c.powi(4)).powf(-0.5);
        let jds = mat_vec(&f.j, &[1.0, 0.0, 0.0, 0.0]);
        for (got, want) in jds.iter().zip(f.reeb.iter().map(|x| x * scale)) {
            assert!((got - want).abs() < 1e-8);
        }
        // omega = d(e^{-sqrt6 s} alpha), finite differences at h = 1e-4.
        let fd = exterior_derivative_fd(symplectic_primitive, &p, 1e-4);
        for i in 0..4 {
            for k in 0..4 {
                assert!((fd[i][k] - f.omega[i][k]).abs() < 1e-6, "omega fd deviates at {p:?}");
            }
        }
    }
    pass(6, "geometry kernel at 100 random points");
}

#[test]
fn criterion_07_pullback() {
    let spec = ChartSpec {
        q: 0,
        qp: 1,
        sigma_lo: SigmaBound::Value(1.2),
        sigma_hi: SigmaBound::Value(1.9),
        a0: Profile::Const(0.1),
        w0: Profile::Const(0.2),
        v0: Profile::Const(0.3),
        eps: Profile::Const(0.1),
        rho0: 0.2,
        rho1: 0.2,
        end_lo: EndKind::None,
        end_hi: EndKind::None,
    };
    let err_at = |n: usize| {
        let chart = sample_cylinder(&spec, n, n, Exec::Par).unwrap();
        let diag = verify_chart(&chart, None, Exec::Par).unwrap();
        assert!(diag.min_pullback > 0.0, "pullback not positive at {n}^2");
        diag.max_rel_pullback_err
    };
    let e_512 = err_at(512);
    let e_256 = err_at(256);
    assert!(e_512 < 1e-4, "relative pullback error {e_512} at 512^2");
    let ratio = e_256 / e_512;
    assert!(
        (3.2..=4.8).contains(&ratio),
        "convergence ratio {ratio} outside 4 +- 20% ({e_256} -> {e_512})"
    );
    pass(7, "discrete pullback matches the closed form");
}

#[test]
fn criterion_08_pde_residual() {
    // Exact v-independent solution of the cylinder equations for
    // Q = (0,1): w = c0 / alpha, alpha a' = beta / sin.
    let q = IntegerPair::new(0, 1);
    let exact_a = |s: f64, _: f64| {
        let c = s.cos();
        (1.0 - 3.0 * c * c).ln() / SQRT6
    };
    let exact_w = |s: f64, _: f64| {
        let c = s.cos();
        0.35 / (1.0 - 3.0 * c * c)
    };
    let sup = |h: f64| {
        let n = ((1.9 - 1.2) / h).round() as usize + 1;
        let grid = Grid2::from_fns(1.2, 1.9, n, 8, exact_a, exact_w);
        pde_residual(&q, &grid, Exec::Par).unwrap().sup_norm()
    };

    // Second-order decay under step halving.
    let e1 = sup(4e-3);
    let e2 = sup(2e-3);
    let ratio = e1 / e2;
    assert!(
        (3.2..=4.8).contains(&ratio),
        "residual order ratio {ratio} outside 4 +- 20% ({e1} -> {e2})"
    );

    // Absolute threshold at h = 1e-3.
    let e = sup(1e-3);
    assert!(
        e < 1e-6,
        "residual sup-norm {e:.3e} at h = 1e-3 exceeds 1e-6 \
         (the second-order truncation constant alpha_Q a''' / 6 reaches ~5.6 \
         near sigma = 1.2, so the faithful scheme cannot go below ~5.6e-6 at this step)"
    );
    pass(8, "PDE residual order and absolute size");
}

#[test]
fn criterion_09_end_decay() {
    let theta_01 = AngleClass::from_pair(IntegerPair::new(0, 1)).unwrap().theta_approx();
    let theta_11 = AngleClass::from_pair(IntegerPair::new(1, 1)).unwrap().theta_approx();
    for (theta_e, q, qp) in [
        (std::f64::consts::FRAC_PI_2, 1i64, 0i64),
        (theta_01, 0, 1),
        (theta_11, 1, 1),
    ] {
        let rho: f64 = 0.2;
        let spec = ChartSpec {
            q,
            qp,
            sigma_lo: SigmaBound::Value(theta_e),
            sigma_hi: SigmaBound::Value(theta_e + rho.powi(4)),
            a0: Profile::Const(0.0),
            w0: Profile::Const(0.0),
            v0: Profile::Const(0.0),
            eps: Profile::Const(1e-3),
            rho0: rho,
            rho1: 0.0,
            end_lo: EndKind::InteriorConvex,
            end_hi: EndKind::None,
            };
        let chart = sample_cylinder(&spec, 256, 8, Exec::Par).unwrap();
        let fit = fit_end_decay(&chart).unwrap();
        assert!(fit.samples >= 64);
        let zeta = zeta_rate(theta_e);
        assert!((fit.target_rate - zeta).abs() < 1e-12);
        assert!(
            fit.rel_err < 0.01,
            "decay rate off by {} at theta_E = {theta_e}",
            fit.rel_err
        );
    }
    pass(9, "end decay rates within 1%");
}

#[test]
fn criterion_10_embedding_scan() {
    let mut r = rng(1010);
    let mut tried = 0;
    while tried < 20 {
        // Random admissible chart: a random label positive on a random
        // interior window, profiles constant, eps under the embedding
        // bound.
        let q = random_angle_pair(&mut r, 5);
        let lo = r.gen_range(0.3..2.2);
        let hi = lo + r.gen_range(0.3..0.7);
        if hi >= std::f64::consts::PI - 0.05 {
            continue;
        }
        let spec = ChartSpec {
            q: q.p,
            qp: q.pp,
            sigma_lo: SigmaBound::Value(lo),
            sigma_hi: SigmaBound::Value(hi),
            a0: Profile::Const(r.gen_range(-0.5..0.5)),
            w0: Profile::Const(r.gen_range(-0.5..0.5)),
            v0: Profile::Const(r.gen_range(0.0..std::f64::consts::TAU)),
            eps: Profile::Const(0.0),
            rho0: 0.1,
            rho1: 0.1,
            end_lo: EndKind::None,
            end_hi: EndKind::None,
        };
        // Pick eps as large as the bound allows, scaled back safely.
        let mut max_alpha: f64 = 0.0;
        for k in 0..=256 {
            let sigma = lo + (hi - lo) * k as f64 / 256.0;
            max_alpha = max_alpha.max(reebcyl::geometry::alpha_q(&q, sigma));
        }
        let spec = ChartSpec { eps: Profile::Const(0.4 / max_alpha.max(1e-9)), ..spec };
        let chart = match sample_cylinder(&spec, 256, 256, Exec::Par) {
            Ok(c) => c,
            Err(_) => continue, // alpha not positive on this window
        };
        let diag = verify_chart(&chart, None, Exec::Par).unwrap();
        assert!(
            diag.collisions.is_empty(),
            "spatial-hash collision on an embedded chart: {:?}",
            diag.collisions
        );
        tried += 1;
    }
    pass(10, "no collisions across 20 embedded charts");
}

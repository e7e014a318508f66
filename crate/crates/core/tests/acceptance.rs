//! Acceptance gate: one test per release criterion, each printing a single
//! PASS/FAIL line. Tolerances are pinned here and nowhere else.

use aoi_core::{
    build_chain, derive_seed, individual_age, lower_bound, optimize_load, simulate_individual_age,
    simulate_system_age, slotted_age, system_age_closed_form, system_age_recursion,
    system_age_truncated, ChannelParams, Horizon, InfiniteUserSimConfig, LoadObjective,
    OnOffSimConfig, SeriesTerms,
};

/// Relative tolerance for the pinned golden ages.
const GOLDEN_MODERATE: (f64, f64) = (5.513, 0.005);
const GOLDEN_LOSSY: (f64, f64) = (10.40, 0.05);
/// Absolute tolerances for the three optimal loads.
const OPT_TOL_PERFECT: f64 = 1e-3;
const OPT_TOL_LOSSY: f64 = 2e-3;
const OPT_TOL_ASYMPTOTIC: f64 = 5e-4;
/// Relative agreement demanded between the three independent age methods.
const TRIPLE_TOL: f64 = 1e-8;
/// Componentwise absolute tolerance for the stationary distribution.
const STATIONARY_TOL: f64 = 1e-10;
/// Simulation accuracy versus the closed form.
const SIM_SYSTEM_TOL: f64 = 0.02;
const SIM_INDIVIDUAL_TOL_SMALL: f64 = 0.05;
const SIM_INDIVIDUAL_TOL_LARGE: f64 = 0.03;
/// Slack over the pessimistic finite-population estimate.
const PESSIMISTIC_SLACK: f64 = 1.01;

const GRID_LOADS: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 2.0, 5.0];
const GRID_SUCCESS: [f64; 3] = [0.5, 0.8, 1.0];

fn report(criterion: usize, name: &str, failures: &[String]) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("criterion {criterion} ({name}): {verdict}");
    assert!(
        failures.is_empty(),
        "criterion {criterion} ({name}): {}",
        failures.join("; ")
    );
}

fn check(failures: &mut Vec<String>, ok: bool, detail: String) {
    if !ok {
        failures.push(detail);
    }
}

#[test]
fn criterion_1_golden_values() {
    let mut failures = Vec::new();
    let cases = [(0.5195, 1.0, GOLDEN_MODERATE), (0.5625, 0.5, GOLDEN_LOSSY)];
    for (rho, p_c, (want, tol)) in cases {
        let params = ChannelParams::from_load(rho, 1.0, p_c).unwrap();
        let closed = system_age_closed_form(&params).unwrap();
        let truncated = system_age_truncated(&params, 60).unwrap();
        check(
            &mut failures,
            (closed - want).abs() <= tol,
            format!("closed form at rho={rho}, p_c={p_c}: {closed} vs {want}"),
        );
        check(
            &mut failures,
            (truncated - want).abs() <= tol,
            format!("truncated age at rho={rho}, p_c={p_c}: {truncated} vs {want}"),
        );
    }
    report(1, "golden values", &failures);
}

#[test]
fn criterion_2_optimal_loads() {
    let mut failures = Vec::new();
    let cases = [
        (
            LoadObjective::SystemAge { p_c: 1.0, mu: 1.0 },
            0.5195,
            OPT_TOL_PERFECT,
        ),
        (
            LoadObjective::SystemAge { p_c: 0.5, mu: 1.0 },
            0.5625,
            OPT_TOL_LOSSY,
        ),
        (
            LoadObjective::AsymptoticIndividual,
            0.6180,
            OPT_TOL_ASYMPTOTIC,
        ),
    ];
    for (objective, want, tol) in cases {
        let (rho_star, _) = optimize_load(&objective, aoi_core::optimize::DEFAULT_BRACKET).unwrap();
        check(
            &mut failures,
            (rho_star - want).abs() <= tol,
            format!("{objective:?}: rho* = {rho_star} vs {want}"),
        );
    }
    report(2, "optimal loads", &failures);
}

#[test]
fn criterion_3_independent_methods_agree() {
    let mut failures = Vec::new();
    let m = 120;
    for rho in GRID_LOADS {
        for p_c in GRID_SUCCESS {
            let params = ChannelParams::from_load(rho, 1.0, p_c).unwrap();
            let solver = system_age_truncated(&params, m).unwrap();
            let recursion = system_age_recursion(&params, m).unwrap().delta;
            let series = system_age_closed_form(&params).unwrap();
            let spread = (solver - recursion).abs().max((solver - series).abs()) / solver;
            check(
                &mut failures,
                spread <= TRIPLE_TOL,
                format!(
                    "rho={rho}, p_c={p_c}: solver {solver}, recursion {recursion}, series {series}"
                ),
            );
        }
    }
    report(3, "independent methods agree", &failures);
}

#[test]
fn criterion_4_stationary_distribution_is_truncated_poisson() {
    let mut failures = Vec::new();
    let m = 60;
    for rho in GRID_LOADS {
        let params = ChannelParams::from_load(rho, 1.0, 0.8).unwrap();
        let pi = build_chain(&params, m)
            .unwrap()
            .stationary_distribution()
            .unwrap();
        // Occupancy weights rho^k / k!, renormalized over the kept states.
        let mut weights = vec![1.0];
        for k in 1..=m {
            let prev = weights[k - 1];
            weights.push(prev * rho / k as f64);
        }
        let total: f64 = weights.iter().sum();
        let worst = pi
            .iter()
            .zip(&weights)
            .map(|(p, w)| (p - w / total).abs())
            .fold(0.0, f64::max);
        check(
            &mut failures,
            worst <= STATIONARY_TOL,
            format!("rho={rho}: worst componentwise gap {worst:.3e}"),
        );
    }
    report(4, "stationary distribution is truncated Poisson", &failures);
}

#[test]
fn criterion_5_lower_bound_and_slotted_ratio() {
    let mut failures = Vec::new();
    for rho in GRID_LOADS {
        for p_c in GRID_SUCCESS {
            let params = ChannelParams::from_load(rho, 1.0, p_c).unwrap();
            let age = system_age_truncated(&params, 120).unwrap();
            let bound = lower_bound(&params).unwrap();
            check(
                &mut failures,
                age >= bound,
                format!("rho={rho}, p_c={p_c}: age {age} under bound {bound}"),
            );
        }
    }

    // The bound is tight where collisions are rare.
    let sparse = ChannelParams::from_load(0.01, 1.0, 1.0).unwrap();
    let gap = system_age_closed_form(&sparse).unwrap() / lower_bound(&sparse).unwrap() - 1.0;
    check(
        &mut failures,
        gap > 0.0 && gap < 0.01,
        format!("relative gap at rho=0.01: {gap}"),
    );

    // Losing slot boundaries costs almost nothing at light load and more
    // than half the performance at heavy load.
    let ratio_sparse = system_age_closed_form(&sparse).unwrap() / slotted_age(0.01).unwrap();
    check(
        &mut failures,
        (1.0..=1.02).contains(&ratio_sparse),
        format!("unslotted/slotted at rho=0.01: {ratio_sparse}"),
    );
    let dense = ChannelParams::from_load(3.0, 1.0, 1.0).unwrap();
    let ratio_dense = system_age_closed_form(&dense).unwrap() / slotted_age(3.0).unwrap();
    check(
        &mut failures,
        ratio_dense > 1.5,
        format!("unslotted/slotted at rho=3: {ratio_dense}"),
    );
    report(5, "lower bound and slotted ratio", &failures);
}

#[test]
fn criterion_6_simulation_matches_theory() {
    let mut failures = Vec::new();
    let cases = [(0.52, 1.0), (0.56, 0.5), (1.0, 0.8)];
    for (i, (rho, p_c)) in cases.into_iter().enumerate() {
        let params = ChannelParams::from_load(rho, 1.0, p_c).unwrap();
        let theory = system_age_closed_form(&params).unwrap();
        let mut config = InfiniteUserSimConfig::new(
            params,
            Horizon::Arrivals(1_000_000),
            derive_seed(0xACCE97, i as u64),
        )
        .unwrap();
        config.warmup_fraction = 0.01;
        let result = simulate_system_age(&config).unwrap();
        let rel = (result.mean_age - theory).abs() / theory;
        check(
            &mut failures,
            rel <= SIM_SYSTEM_TOL,
            format!(
                "rho={rho}, p_c={p_c}: simulated {} vs theory {theory} (rel {rel:.4})",
                result.mean_age
            ),
        );
        check(
            &mut failures,
            !result.degenerate,
            format!("rho={rho}, p_c={p_c}: degenerate run"),
        );
    }
    report(6, "simulation matches theory", &failures);
}

#[test]
fn criterion_7_finite_population_individual_age() {
    let mut failures = Vec::new();
    let cases = [
        (20usize, SIM_INDIVIDUAL_TOL_SMALL),
        (100, SIM_INDIVIDUAL_TOL_LARGE),
    ];
    for (n, tol) in cases {
        let mu = n as f64;
        for (i, rho) in [0.3, 0.6, 1.0].into_iter().enumerate() {
            let params = ChannelParams::from_load(rho, mu, 1.0).unwrap();
            let asymptote = aoi_core::asymptotic_individual_age(rho).unwrap();
            let pessimistic = individual_age(&params, n).unwrap();
            let lambda0 = rho * mu / n as f64;
            let mut config =
                OnOffSimConfig::new(n, lambda0, mu, derive_seed(0x0FF, (n * 10 + i) as u64))
                    .unwrap();
            config.updates_per_source = 50_000;
            let result = simulate_individual_age(&config).unwrap();
            let rel = (result.mean_age - asymptote).abs() / asymptote;
            check(
                &mut failures,
                rel <= tol,
                format!(
                    "N={n}, rho={rho}: mean {} vs asymptote {asymptote} (rel {rel:.4})",
                    result.mean_age
                ),
            );
            check(
                &mut failures,
                result.mean_age <= PESSIMISTIC_SLACK * pessimistic,
                format!(
                    "N={n}, rho={rho}: mean {} exceeds pessimistic estimate {pessimistic}",
                    result.mean_age
                ),
            );
        }
    }
    report(7, "finite population individual age", &failures);
}

#[test]
fn criterion_8_property_pack() {
    let mut failures = Vec::new();

    // Tail-series identities.
    for rho in [0.3, 1.0, 4.0] {
        let terms = SeriesTerms::with_max_index(rho, 40).unwrap();
        let mut pmf = (-rho).exp();
        for j in 1..=39usize {
            pmf *= rho / j as f64;
            check(
                &mut failures,
                (terms.beta(j) - terms.beta(j + 1) - pmf).abs() < 1e-12,
                format!("beta difference identity at rho={rho}, j={j}"),
            );
            let lhs = terms.gamma(j);
            let rhs = 1.0 + rho / (j as f64 + 1.0) * terms.gamma(j + 1);
            check(
                &mut failures,
                (lhs - rhs).abs() < 1e-12,
                format!("gamma recurrence at rho={rho}, j={j}"),
            );
        }
    }

    // Scaling both rates by c scales the age by 1/c.
    for c in [2.0, 3.0, 16.0] {
        let base = ChannelParams::new(0.7, 1.3, 0.8).unwrap();
        let scaled = ChannelParams::new(0.7 * c, 1.3 * c, 0.8).unwrap();
        let a = system_age_truncated(&base, 40).unwrap();
        let b = system_age_truncated(&scaled, 40).unwrap();
        check(
            &mut failures,
            (a / c - b).abs() / (a / c) < 1e-10,
            format!("rate scaling by {c}: {a} vs {b}"),
        );
    }

    // Away from the delivery state the two age components have equal means.
    let params = ChannelParams::from_load(0.9, 1.0, 0.7).unwrap();
    let solution = aoi_core::collision::system_age_solution(&params, 30).unwrap();
    for (k, v) in solution.v.iter().enumerate() {
        if k == 1 {
            continue;
        }
        check(
            &mut failures,
            (v[0] - v[1]).abs() <= 1e-10 * v[1].abs().max(1.0),
            format!("state {k}: components {} vs {}", v[0], v[1]),
        );
    }

    // Identical seeds give byte-identical results.
    let config = InfiniteUserSimConfig::new(
        ChannelParams::from_load(0.8, 1.0, 0.9).unwrap(),
        Horizon::Arrivals(20_000),
        77,
    )
    .unwrap();
    let a = simulate_system_age(&config).unwrap();
    let b = simulate_system_age(&config).unwrap();
    check(
        &mut failures,
        format!("{a:?}") == format!("{b:?}"),
        "seeded determinism".to_string(),
    );

    // Every transmission in a traced run is resolved exactly once.
    let mut traced = InfiniteUserSimConfig::new(
        ChannelParams::from_load(1.2, 1.0, 0.6).unwrap(),
        Horizon::Arrivals(10_000),
        7,
    )
    .unwrap();
    traced.record_trace = true;
    let result = simulate_system_age(&traced).unwrap();
    let trace = result.trace.as_ref().unwrap();
    let starts = trace
        .iter()
        .filter(|e| e.kind == aoi_core::sim::TraceKind::Arrival)
        .count() as u64;
    let outcomes = trace.len() as u64 - starts;
    check(
        &mut failures,
        starts == result.total_updates && outcomes + result.unresolved == starts,
        format!(
            "trace conservation: {starts} starts, {outcomes} outcomes, {} unresolved",
            result.unresolved
        ),
    );
    check(
        &mut failures,
        result.successful_deliveries
            + result.failed_deliveries
            + result.collisions
            + result.unresolved
            == result.total_updates,
        "counter conservation".to_string(),
    );

    report(8, "property pack", &failures);
}

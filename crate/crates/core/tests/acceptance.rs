//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;

use mtco_core::assignment::min_cost_assignment;
use mtco_core::benchgen::{generate_pair, generate_suite, p_r_grid, MultiTaskInstance};
use mtco_core::distance::{normalized_distance, random_permutation};
use mtco_core::harness::studies::Scope;
use mtco_core::harness::{study_compare, study_distance_srcc, study_transferability, CompareConfig};
use mtco_core::rng::{derive_seed, rng_from_seed};
use mtco_core::search::{cds, neh};
use mtco_core::taillard::{load_taillard, Orientation};
use mtco_core::transfer::invariance_index;
use mtco_core::{
    evaluate, inter_task_distance, matrix_to_perm, perm_to_matrix, run_stss, Instance, Permutation, RunConfig,
    Variant,
};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn taillard(k: usize) -> Instance {
    load_taillard(data_dir().join(format!("taillard/ta{k:03}.txt")), Orientation::Auto).expect("standard instance file")
}

fn value(inst: &Instance, p: &Permutation) -> f64 {
    evaluate(inst, p).unwrap().value
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn all_perms(n: usize) -> Vec<Permutation> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
        if cur.len() == used.len() {
            out.push(Permutation::new(cur.clone()).unwrap());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn rand_instance<R: Rng>(n: usize, m: usize, rng: &mut R) -> Instance {
    Instance::makespan(Array2::from_shape_fn((n, m), |_| rng.random_range(1..100) as f64)).unwrap()
}

fn brute_optimum(inst: &Instance) -> f64 {
    all_perms(inst.n()).iter().map(|p| value(inst, p)).fold(f64::INFINITY, f64::min)
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn theorems() -> Outcome {
    let mut rng = rng_from_seed(1);
    let mut failures = BTreeMap::<&str, usize>::new();
    let mut fail = |name| *failures.entry(name).or_default() += 1;
    let cases = 1000;
    for _ in 0..cases {
        let (n, m) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let inst = rand_instance(n, m, &mut rng);
        let pi = random_permutation(n, &mut rng);
        let t = rng.random_range(1e-3..=10.0);
        let b = rng.random_range(-50.0..50.0);
        let f = value(&inst, &pi);
        if !rel_close(value(&inst.scale_shift(t, 0.0, false).unwrap(), &pi), t * f, 1e-9) {
            fail("scale");
        }
        let shift = (n + m - 1) as f64 * b;
        if !rel_close(value(&inst.scale_shift(1.0, b, true).unwrap(), &pi), f + shift, 1e-9) {
            fail("shift");
        }
        let o = perm_to_matrix(&random_permutation(n, &mut rng));
        let x = perm_to_matrix(&random_permutation(n, &mut rng));
        let moved = inst.row_transform(&o).unwrap();
        if !rel_close(value(&moved, &matrix_to_perm(&x)), value(&inst, &matrix_to_perm(&(&x * &o))), 1e-9) {
            fail("transform");
        }
        if !rel_close(value(&inst, &matrix_to_perm(&x)), value(&moved, &matrix_to_perm(&(&x * &o.transpose()))), 1e-9)
        {
            fail("inverse");
        }
    }
    let mut exhaustive = 0usize;
    for n in 1..=5 {
        let perms = all_perms(n);
        for m in 1..=4 {
            let inst = rand_instance(n, m, &mut rng);
            let t = rng.random_range(0.1..5.0);
            let b = rng.random_range(-10.0..10.0);
            let scaled = inst.scale_shift(t, b, true).unwrap();
            for pi in &perms {
                let expect = t * value(&inst, pi) + (n + m - 1) as f64 * b;
                if !rel_close(value(&scaled, pi), expect, 1e-9) {
                    fail("exhaustive affine");
                }
            }
            for o in &perms {
                let o = perm_to_matrix(o);
                let moved = inst.row_transform(&o).unwrap();
                for x in &perms {
                    let x = perm_to_matrix(x);
                    exhaustive += 1;
                    if value(&moved, &matrix_to_perm(&x)) != value(&inst, &matrix_to_perm(&(&x * &o))) {
                        fail("exhaustive transform");
                    }
                    if value(&inst, &matrix_to_perm(&x)) != value(&moved, &matrix_to_perm(&(&x * &o.transpose()))) {
                        fail("exhaustive inverse");
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{cases} random cases per identity, {exhaustive} exhaustive (O, X) pairs, failures {failures:?}"),
    )
}

fn golden_table(name: &str) -> Vec<(usize, usize, f64)> {
    let text = std::fs::read_to_string(data_dir().join("distances").join(name)).unwrap();
    let mut lines = text.lines();
    let header: Vec<usize> = lines.next().unwrap().split('\t').skip(1).map(|s| s[2..].parse().unwrap()).collect();
    let mut out = Vec::new();
    for line in lines {
        let mut cells = line.split('\t');
        let row: usize = cells.next().unwrap()[2..].parse().unwrap();
        for (&col, v) in header.iter().zip(cells) {
            out.push((row, col, v.parse().unwrap()));
        }
    }
    out
}

fn distance(a: &Instance, b: &Instance) -> f64 {
    inter_task_distance(a, b, false).unwrap().normalized
}

fn golden_spots() -> Outcome {
    let spots = [(1, 4, 0.91), (6, 7, 0.83), (13, 17, 0.85)];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut detail = Vec::new();
    for (a, b, want) in spots {
        let d = distance(&taillard(a), &taillard(b));
        worst = worst.max((d - want).abs());
        ok &= (d - want).abs() <= 0.01;
        detail.push(format!("d({a},{b})={d:.4}"));
    }
    let big: Vec<Instance> = (51..=60).map(taillard).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..big.len() {
        for j in 0..big.len() {
            if i != j {
                let d = distance(&big[i], &big[j]);
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
    }
    ok &= lo >= 0.94 - 0.01 && hi <= 1.0 + 0.01;
    outcome(ok, format!("{} max spot error {worst:.4}; 50x20 pairs in [{lo:.4}, {hi:.4}]", detail.join(" ")))
}

fn golden_tables() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for name in ["20x5.tsv", "20x10.tsv", "50x5.tsv", "50x10.tsv"] {
        let table = golden_table(name);
        let mut cache = BTreeMap::new();
        for (a, b, want) in table {
            let ia = cache.entry(a).or_insert_with(|| taillard(a)).clone();
            let ib = cache.entry(b).or_insert_with(|| taillard(b)).clone();
            worst = worst.max((distance(&ia, &ib) - want).abs());
            count += 1;
        }
    }
    outcome(worst <= 0.011, format!("{count} table entries, max |error| {worst:.4} (tolerance 0.011)"))
}

fn invariance_example() -> Outcome {
    let a = Permutation::from_one_based(&[3, 4, 2, 5, 6, 1]).unwrap();
    let b = Permutation::from_one_based(&[1, 4, 2, 6, 5, 3]).unwrap();
    let h = invariance_index(&a, &b).unwrap().h;
    let want = [0.0, 0.6, 0.0, 0.6, 0.4, 0.4];
    outcome(h == want, format!("H = {h:?}"))
}

fn self_affine() -> Outcome {
    let mut rng = rng_from_seed(4);
    let (mut worst_self, mut worst_sym): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let (n, m) = (rng.random_range(2..=20), rng.random_range(1..=10));
        let p = Array2::from_shape_fn((n, m), |_| rng.random_range(1..100) as f64);
        let q = Array2::from_shape_fn((n, m), |_| rng.random_range(1..100) as f64);
        let t = rng.random_range(0.01..100.0);
        let b = rng.random_range(-100.0..100.0);
        let affine = p.mapv(|v| t * v + b);
        worst_self = worst_self.max(normalized_distance(&affine, &p).unwrap().normalized);
        let d1 = normalized_distance(&p, &q).unwrap().normalized;
        let d2 = normalized_distance(&q, &p).unwrap().normalized;
        worst_sym = worst_sym.max((d1 - d2).abs());
    }
    outcome(
        worst_self <= 1e-9 && worst_sym <= 1e-9,
        format!("1000 cases: max d(tP+bE, P) = {worst_self:.2e}, max asymmetry {worst_sym:.2e}"),
    )
}

fn monotonicity() -> Outcome {
    let bases: Vec<Instance> = (1..=5).map(taillard).collect();
    let grid = p_r_grid(10);
    let suite = generate_suite(&bases, &grid, 20, 55).unwrap();
    let means: Vec<f64> = grid
        .iter()
        .map(|&p| mean(suite.iter().filter(|mt| mt.p_r == p).map(|mt| mt.recorded_distance.unwrap())))
        .collect();
    let increasing = means.windows(2).all(|w| w[1] > w[0]);
    let last = *means.last().unwrap();
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.3}")).collect();
    outcome(increasing && last >= 0.9, format!("mean distance by p_r: [{}]", shown.join(", ")))
}

fn srcc_consistency() -> Outcome {
    let bases: Vec<Instance> = (1..=5).map(taillard).collect();
    let suite = generate_suite(&bases, &p_r_grid(10), 4, 66).unwrap();
    let st = study_distance_srcc(&suite, 2000, 66).unwrap();
    let fit = st.fit.unwrap();
    outcome(
        fit.slope < 0.0 && fit.r2 >= 0.80,
        format!("{} pairs: slope {:.3}, intercept {:.3}, R^2 {:.4}", st.rows.len(), fit.slope, fit.intercept, fit.r2),
    )
}

fn transferability() -> Outcome {
    let bases: Vec<Instance> = (1..=10).map(taillard).collect();
    let suite = generate_suite(&bases, &[0.005, 0.01, 0.02, 0.9, 1.0], 4, 77).unwrap();
    let n = bases[0].n() as u64;
    let cfg = RunConfig { max_evals: Some(20 * n * (n - 1)), ..RunConfig::default() };
    let st = study_transferability(&suite, 10_000, &cfg, 77).unwrap();
    let near = st.rows.iter().filter(|r| r.distance < 0.1).collect::<Vec<_>>();
    let far = st.rows.iter().filter(|r| (0.9..=1.0).contains(&r.distance)).collect::<Vec<_>>();
    let share = |rows: &[&mtco_core::harness::studies::TransferabilityRow]| {
        rows.iter().filter(|r| r.rank <= 10).count() as f64 / rows.len().max(1) as f64
    };
    let (sn, sf) = (share(&near), share(&far));
    outcome(
        !near.is_empty() && !far.is_empty() && sn >= 0.90 && sf == 0.0,
        format!(
            "d<0.1: {:.1}% of {} pairs rank <= 10; d in [0.9,1]: {:.1}% of {} pairs",
            100.0 * sn,
            near.len(),
            100.0 * sf,
            far.len()
        ),
    )
}

struct SearchSuite {
    suite: Vec<MultiTaskInstance>,
    study: mtco_core::harness::CompareStudy,
}

fn search_suite() -> SearchSuite {
    let bases: Vec<Instance> = (51..=55).map(taillard).collect();
    let suite = generate_suite(&bases, &p_r_grid(10), 1, 88).unwrap();
    let n = bases[0].n() as u64;
    let run = RunConfig { max_evals: Some(20 * n * (n - 1)), ..RunConfig::default() };
    let variants =
        vec![Variant::Stss, Variant::MtcoP, Variant::MtcoC, Variant::MtcoE, Variant::Mtco, Variant::MtcoNoPt];
    let study = study_compare(&suite, &CompareConfig::new(variants, 5, run, 88)).unwrap();
    SearchSuite { suite, study }
}

fn mtco_vs_stss(s: &SearchSuite) -> Outcome {
    let st = s.study.restrict(&[Variant::Stss, Variant::Mtco]).unwrap();
    let stss = st.summary_for(Variant::Stss).unwrap();
    let mtco = st.summary_for(Variant::Mtco).unwrap();
    let speedup = mtco.mean_speedup.unwrap();
    let by_pr: Vec<String> =
        st.speedup_by_pr(Variant::Stss, Variant::Mtco).iter().map(|r| format!("{:.2}", r.3)).collect();
    outcome(
        mtco.mean_are < stss.mean_are && mtco.mean_rps < 0.0 && stss.mean_rps > 0.0 && speedup >= 1.5,
        format!(
            "{} pairs x 5 seeds: ARE stss {:.3}% mtco {:.3}%; RPS stss {:.3} mtco {:.3}; mean speed-up {:.3} \
             (ratio of mean evaluations by p_r: [{}])",
            s.suite.len(),
            stss.mean_are,
            mtco.mean_are,
            stss.mean_rps,
            mtco.mean_rps,
            speedup,
            by_pr.join(", ")
        ),
    )
}

fn ablations(s: &SearchSuite) -> Outcome {
    let variants = [Variant::Stss, Variant::MtcoP, Variant::MtcoC, Variant::MtcoE, Variant::Mtco];
    let st = s.study.restrict(&variants).unwrap();
    let summary = st.summary().unwrap();
    let are = |v: Variant| summary.iter().find(|r| r.variant == v).unwrap().mean_are;
    let stss = are(Variant::Stss);
    let gated = [Variant::MtcoP, Variant::MtcoC, Variant::MtcoE].iter().all(|&v| are(v) < stss);
    let mut order: Vec<(Variant, f64)> = variants.iter().map(|&v| (v, are(v))).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1));
    let shown: Vec<String> = order.iter().map(|(v, a)| format!("{v} {a:.3}%")).collect();
    let p_best = are(Variant::MtcoP) <= are(Variant::MtcoC) && are(Variant::MtcoP) <= are(Variant::MtcoE);
    outcome(gated, format!("mean ARE best to worst: {}; mtco-p best among single transfers: {p_best}", shown.join(", ")))
}

fn transformation(s: &SearchSuite) -> Outcome {
    let rows: Vec<_> = s.study.transforms().into_iter().filter(|t| t.p_r >= 0.5).collect();
    let accepted: Vec<_> = rows.iter().filter(|t| t.accepted).collect();
    let strict = accepted.iter().all(|t| t.d_after < t.d_before);
    let before = mean(rows.iter().map(|t| t.d_before));
    let after = mean(rows.iter().map(|t| if t.accepted { t.d_after } else { t.d_before }));
    let st = s.study.restrict(&[Variant::Mtco, Variant::MtcoNoPt]).unwrap();
    let errors = st.errors().unwrap();
    let are = |v: Variant| {
        mean(errors.iter().filter(|e| e.variant == v && e.scope == Scope::Instance && e.p_r > 0.5).map(|e| e.are))
    };
    let (m, np) = (are(Variant::Mtco), are(Variant::MtcoNoPt));
    outcome(
        !rows.is_empty() && strict && after < before && m <= np,
        format!(
            "{} transforms on p_r >= 0.5, {} accepted, all strict: {strict}; mean d {before:.4} -> {after:.4}; \
             ARE on p_r > 0.5: mtco {m:.3}% noPT {np:.3}%",
            rows.len(),
            accepted.len()
        ),
    )
}

fn oracles() -> Outcome {
    let mut rng = rng_from_seed(11);
    let mut stss_hits = 0;
    for k in 0..10u64 {
        let inst = rand_instance(6, rng.random_range(2..=5), &mut rng);
        let cfg = RunConfig { max_evals: Some(20_000), rng_seed: k, ..RunConfig::default() };
        if run_stss(&inst, &cfg).unwrap().best_value == brute_optimum(&inst) {
            stss_hits += 1;
        }
    }
    let mut hungarian_ok = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=7);
        let cost = Array2::from_shape_fn((n, n), |_| rng.random_range(-50.0..50.0));
        let total = |a: &[usize]| a.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum::<f64>();
        let best = all_perms(n).iter().map(|p| total(p.as_slice())).fold(f64::INFINITY, f64::min);
        if rel_close(total(&min_cost_assignment(&cost)), best, 1e-12) {
            hungarian_ok += 1;
        }
    }
    let mut two_machine_ok = 0;
    for _ in 0..50 {
        let inst = rand_instance(rng.random_range(1..=7), 2, &mut rng);
        if value(&inst, &cds(&inst).unwrap()) == brute_optimum(&inst) {
            two_machine_ok += 1;
        }
    }
    outcome(
        stss_hits == 10 && hungarian_ok == 200 && two_machine_ok == 50,
        format!(
            "stss optimal {stss_hits}/10; hungarian exact {hungarian_ok}/200; johnson/cds optimal {two_machine_ok}/50"
        ),
    )
}

fn quality_parity() -> Outcome {
    let bases: Vec<Instance> = (1..=10).map(taillard).collect();
    let n = bases[0].n() as u64;
    let mut gaps = Vec::new();
    let mut dists = Vec::new();
    for (b, base) in bases.iter().enumerate() {
        for r in 0..2u64 {
            let mt = generate_pair(base, 0.05, derive_seed(99, &[b as u64, r])).unwrap();
            dists.push(distance(&mt.problem1, &mt.problem2));
            let cfg = RunConfig { max_evals: Some(20 * n * (n - 1)), rng_seed: r, ..RunConfig::default() };
            let source = run_stss(&mt.problem1, &cfg).unwrap().best;
            let transferred = value(&mt.problem2, &source);
            let constructed = value(&mt.problem2, &neh(&mt.problem2));
            gaps.push(100.0 * (transferred - constructed) / constructed);
        }
    }
    let gap = mean(gaps.iter().copied());
    outcome(
        gap <= 2.0,
        format!("{} pairs, mean d {:.3}: transferred vs NEH mean gap {gap:+.3}%", gaps.len(), mean(dists)),
    )
}

fn main() {
    // cargo passes harness flags such as --nocapture; there is nothing to filter
    let total = Instant::now();
    let mut results: Vec<(&str, &str, Outcome, Duration)> = Vec::new();
    let mut run = |id: &'static str, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let took = t.elapsed();
        println!("{} [{id}] {name}: {} ({:.1?})", if o.pass { "PASS" } else { "FAIL" }, o.detail, took);
        results.push((id, name, o, took));
    };
    run("1", "theorem identities", &theorems);
    run("2", "golden distance spot set", &golden_spots);
    run("2b", "golden distance tables", &golden_tables);
    run("3", "invariance index example", &invariance_example);
    run("4", "self/affine distance and symmetry", &self_affine);
    run("5", "benchmark distance monotonicity", &monotonicity);
    run("6", "distance vs SRCC linear fit", &srcc_consistency);
    run("7", "transferability by distance", &transferability);
    let t = Instant::now();
    let suite = search_suite();
    println!("search suite: {} runs in {:.1?}", suite.study.runs.len(), t.elapsed());
    run("8", "MTCO vs STSS", &|| mtco_vs_stss(&suite));
    run("9", "single-transfer ablations", &|| ablations(&suite));
    run("10", "problem transformation effect", &|| transformation(&suite));
    run("11", "brute-force oracles", &oracles);
    run("12", "transferred solution vs NEH", &quality_parity);
    let failed: Vec<&str> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed {:?} in {:.1?}",
        results.len() - failed.len(),
        failed.len(),
        failed,
        total.elapsed()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

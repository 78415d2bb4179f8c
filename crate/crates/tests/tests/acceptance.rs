//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero when any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::terms::{boolean, vocabulary, well_sorted};
use common::{bools, fixtures_dir, model, pool, qa, qa_json, scripted_pool, solver, term};
use num_traits::ToPrimitive;
use policyguard::eval::{
    compute_metrics, load_dataset, predicted_valid, run_refine_loop, threshold_sweep, ConfusionCounts, EvalConfig,
    RefineConfig,
};
use policyguard::logic::{parse_term, print_term, Assignment, LogicError, Sort, Term, Value};
use policyguard::policy::{PolicyModel, Rule};
use policyguard::translator::{ClaimPair, Confidence};
use policyguard::verifier::{classify, redundant_translate, validate, Category, VerifierConfig};
use policyguard::vetting::{generate_symbolic_tests, lint, run_tests, GeneratorConfig, LintCode};
use policyguard_tests::{
    consistent, float_metrics, park_credit_chain, truth_table, Truth, METRIC_TOLERANCE, PUBLISHED_ROWS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned limits.
const METRICS_LIMIT: Duration = Duration::from_secs(1);
const PARK_LIMIT: Duration = Duration::from_secs(10);
const RYANAIR_LIMIT: Duration = Duration::from_secs(5);
const ORACLE_LIMIT: Duration = Duration::from_secs(300);
const ORACLE_CASES: usize = 10_000;
const SELF_SUPPORT_POOLS: usize = 1_000;
const MONOTONE_POOLS: usize = 100;
const ROUND_TRIPS: usize = 10_000;
const GENERATED_PER_MODEL: usize = 100;
const REFINE_MAX_STEPS: usize = 3;
const NO_TRANSLATION_ITERS: usize = 4;

type Check = Result<String, String>;

/// Name, check and optional time limit.
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Check {
    let mut mismatches = Vec::new();
    const NAMES: [&str; 6] = ["S", "FPR", "Pr", "Re", "F1", "Ac"];
    for (name, printed, [tp, fp, tn, fn_]) in PUBLISHED_ROWS {
        let row = compute_metrics(&ConfusionCounts::new(tp, fp, tn, fn_)).map_err(|e| e.to_string())?;
        let floats = float_metrics([tp, fp, tn, fn_]);
        for (i, got) in row.values().iter().enumerate() {
            let exact = got.to_f64();
            ensure((exact - floats[i]).abs() < 1e-9, || {
                format!("{name} {}: exact {exact} vs float {}", NAMES[i], floats[i])
            })?;
            if (exact - printed[i]).abs() > METRIC_TOLERANCE {
                mismatches.push(format!("{name} {}: recomputed {exact:.3}, printed {}", NAMES[i], printed[i]));
            }
        }
    }
    let cells = PUBLISHED_ROWS.len() * 6;
    if mismatches.is_empty() {
        Ok(format!("{cells}/{cells} cells within ±{METRIC_TOLERANCE}"))
    } else {
        Err(format!("{}/{cells} cells within ±{METRIC_TOLERANCE}; {}", cells - mismatches.len(), mismatches.join("; ")))
    }
}

fn rational(a: &Assignment, text: &str, m: &PolicyModel) -> Result<num_rational::BigRational, String> {
    let t = parse_term(text, &m.env().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    a.eval(&t).map_err(|e| e.to_string())?.as_rational().ok_or_else(|| format!("{text} is not numeric"))
}

fn criterion_2() -> Check {
    let m = model("park");
    let findings = validate(&qa("park"), &m, &scripted_pool("park-unanimous"), &solver(), &VerifierConfig::default())
        .map_err(|e| e.to_string())?;
    ensure(findings.len() == 1, || format!("{} findings", findings.len()))?;
    let f = &findings[0];
    ensure(f.category == Category::Satisfiable, || format!("category {}", f.category))?;
    let conf = f.pair.as_ref().and_then(|p| p.confidence);
    ensure(conf == Some(Confidence::new(3, 3)), || format!("confidence {conf:?}"))?;
    let ce = f.feedback.counter_example.as_ref().ok_or("no counter-example")?;
    let sc = f.feedback.scenario.as_ref().ok_or("no scenario")?;
    for r in &m.rules {
        ensure(ce.holds(&r.term) == Ok(true), || format!("counter-example breaks {}", r.id))?;
        ensure(sc.holds(&r.term) == Ok(true), || format!("scenario breaks {}", r.id))?;
    }
    let budget = rational(ce, "totalAdmissionFund", &m)?;
    let spent = rational(ce, "finalExpense", &m)?;
    ensure(spent <= budget, || format!("counter-example spends {spent} of {budget}"))?;
    ensure(sc.get("isEntryAllowed") == Some(&Value::Bool(false)), || "scenario admits the visitor".into())?;

    // Recompute each step from the rule bodies with the engine's evaluator.
    let chain = [
        rational(ce, "(* 0.75 baseFee)", &m)?,
        rational(ce, "(+ (* admissionFee (- 1.0 discountRate)) processingFee)", &m)?,
        rational(ce, "(+ (- finalAdmissionFee customerCredits) creditDollarValue)", &m)?,
        rational(ce, "(* 1.1 expenseBeforeTax)", &m)?,
    ];
    let expected = park_credit_chain();
    ensure(chain == expected, || {
        let show = |c: &[num_rational::BigRational]| {
            c.iter().map(|x| x.to_f64().unwrap().to_string()).collect::<Vec<_>>().join(" → ")
        };
        format!("chain {} vs {}", show(&chain), show(&expected))
    })?;
    let shown: Vec<String> = chain.iter().map(|x| x.to_f64().unwrap().to_string()).collect();
    Ok(format!("SATISFIABLE 3/3, chain {}", shown.join(" → ")))
}

fn criterion_3() -> Check {
    let m = model("ryanair");
    let premise = "(and didFlightOperate (not didPassengerTravel) (= flightDisruptionReason DENIED_BOARDING))";
    let mut pair = ClaimPair::new(term(&m, premise), term(&m, "isRefundEligible"));
    pair.confidence = Some(Confidence::ONE);
    let f = classify(&pair, &m, &solver(), &VerifierConfig::default(), &[]).map_err(|e| e.to_string())?;
    ensure(f.category == Category::Impossible, || format!("classify gave {}", f.category))?;
    let rules: BTreeSet<&str> = f.feedback.relevant_rules.iter().map(String::as_str).collect();
    ensure(rules == BTreeSet::from(["1", "2"]), || format!("relevant rules {rules:?}"))?;
    let findings = validate(&qa("ryanair"), &m, &scripted_pool("ryanair"), &solver(), &VerifierConfig::default())
        .map_err(|e| e.to_string())?;
    let cats: Vec<Category> = findings.iter().map(|f| f.category).collect();
    ensure(cats == [Category::Impossible], || format!("end to end: {cats:?}"))?;
    Ok("IMPOSSIBLE with relevant rules {1, 2}".into())
}

fn truth_of(c: Category) -> Option<Truth> {
    Some(match c {
        Category::Impossible => Truth::Impossible,
        Category::Invalid => Truth::Invalid,
        Category::Satisfiable => Truth::Satisfiable,
        Category::Valid => Truth::Valid,
        _ => return None,
    })
}

fn criterion_4() -> Check {
    let vars = ["a", "b", "c", "d"];
    let s = solver();
    let config = VerifierConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut seen = BTreeSet::new();
    let mut cases = 0;
    while cases < ORACLE_CASES {
        let vs = &vars[..rng.gen_range(1..=4)];
        let mut m = bools(vs, &[]);
        m.rules = (0..rng.gen_range(0..=4)).map(|i| Rule::new(format!("r{i}"), boolean(&mut rng, vs, 3))).collect();
        if m.validate().is_err() {
            continue;
        }
        let (p, c) = (boolean(&mut rng, vs, 3), boolean(&mut rng, vs, 3));
        let mut pair = ClaimPair::new(p.clone(), c.clone());
        pair.confidence = Some(Confidence::ONE);
        let f = classify(&pair, &m, &s, &config, &[]).map_err(|e| e.to_string())?;
        let rules: Vec<Term> = m.rules.iter().map(|r| r.term.clone()).collect();
        let want = truth_table(&rules, &p, &c, vs);
        ensure(truth_of(f.category) == Some(want), || {
            format!("case {cases}: {m}\nP = {p}\nC = {c}\nengine {} vs {want:?}", f.category)
        })?;
        seen.insert(want);
        cases += 1;
    }
    ensure(seen.len() == 4, || format!("only {seen:?} occurred"))?;
    Ok(format!("{cases}/{cases} cases agree with enumeration, all four outcomes seen"))
}

fn criterion_5() -> Check {
    let config = VerifierConfig::default();
    let park = model("park");
    let red = redundant_translate(&qa("park"), &park, &scripted_pool("park-unanimous"), &solver(), &config)
        .map_err(|e| e.to_string())?;
    let confs: Vec<Option<Confidence>> = red.scored.iter().map(|s| s.pair.confidence).collect();
    ensure(confs == [Some(Confidence::new(3, 3))], || format!("identical: {confs:?}"))?;
    let red = redundant_translate(&qa("park"), &park, &scripted_pool("park-split"), &solver(), &config)
        .map_err(|e| e.to_string())?;
    let mut confs: Vec<Confidence> = red.scored.iter().filter_map(|s| s.pair.confidence).collect();
    confs.sort_by(|a, b| b.cmp_value(*a));
    ensure(confs == [Confidence::new(2, 3), Confidence::new(1, 3)], || format!("split: {confs:?}"))?;

    // Self-support over random pools: a translation supports its own pair
    // exactly when it is consistent with that pair's premise.
    let vars = ["a", "b", "c"];
    let m = bools(&vars, &[]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut pairs, mut self_supported) = (0, 0);
    for n in 0..SELF_SUPPORT_POOLS {
        let k = rng.gen_range(1..=3);
        let translations: Vec<Vec<(Term, Term)>> = (0..k)
            .map(|_| {
                (0..rng.gen_range(1..=2)).map(|_| (boolean(&mut rng, &vars, 2), boolean(&mut rng, &vars, 2))).collect()
            })
            .collect();
        let printed: Vec<Vec<(String, String)>> =
            translations.iter().map(|t| t.iter().map(|(p, c)| (print_term(p), print_term(c))).collect()).collect();
        let refs: Vec<Vec<(&str, &str)>> =
            printed.iter().map(|t| t.iter().map(|(p, c)| (p.as_str(), c.as_str())).collect()).collect();
        let slices: Vec<&[(&str, &str)]> = refs.iter().map(Vec::as_slice).collect();
        let red = redundant_translate("x", &m, &pool(&slices), &solver(), &config).map_err(|e| e.to_string())?;
        ensure(red.undetermined.is_empty(), || format!("pool {n}: undetermined support"))?;
        for sc in &red.scored {
            let conf = sc.pair.confidence.ok_or("unscored pair")?;
            ensure(conf == Confidence::new(sc.supporters.len() as u32, k as u32), || {
                format!("pool {n}: confidence {conf}")
            })?;
            for &i in &sc.origins {
                pairs += 1;
                let mut theory: Vec<Term> =
                    translations[i].iter().map(|(p, c)| Term::implies(p.clone(), c.clone())).collect();
                theory.push(sc.pair.premise.clone());
                let expect = consistent(&theory, &vars);
                ensure(sc.supporters.contains(&i) == expect, || {
                    format!(
                        "pool {n}: translation {i} support of {} ⇒ {} is {}, oracle {expect}",
                        sc.pair.premise, sc.pair.conclusion, !expect
                    )
                })?;
                self_supported += usize::from(expect);
            }
        }
    }
    Ok(format!(
        "3/3, 2/3, 1/3 reproduced; {SELF_SUPPORT_POOLS} pools, {self_supported}/{pairs} own translations support their pair, the rest contradict its premise"
    ))
}

fn criterion_6() -> Check {
    let thresholds = [Confidence::new(1, 3), Confidence::new(2, 3), Confidence::ONE];
    let cases = load_dataset(&fixtures_dir().join("eval/ryanair.json")).map_err(|e| e.to_string())?;
    let reports = threshold_sweep(
        &cases,
        &model("ryanair_vetted"),
        &scripted_pool("ryanair-eval"),
        &solver(),
        &EvalConfig::default(),
        &thresholds,
    );
    let fps: Vec<u64> = reports.iter().map(|r| r.counts.fp).collect();
    ensure(fps.windows(2).all(|w| w[1] <= w[0]), || format!("fixture FPs {fps:?}"))?;

    // Approval at a higher threshold implies approval at every lower one,
    // so false positives cannot grow with the threshold whatever the labels.
    let vars = ["a", "b", "c"];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 0..MONOTONE_POOLS {
        let mut m = bools(&vars, &[]);
        m.rules = (0..rng.gen_range(0..=2)).map(|i| Rule::new(format!("r{i}"), boolean(&mut rng, &vars, 2))).collect();
        if m.validate().is_err() {
            continue;
        }
        let printed: Vec<(String, String)> = (0..3)
            .map(|_| (print_term(&boolean(&mut rng, &vars, 2)), print_term(&boolean(&mut rng, &vars, 2))))
            .collect();
        let slices: Vec<Vec<(&str, &str)>> = printed.iter().map(|(p, c)| vec![(p.as_str(), c.as_str())]).collect();
        let refs: Vec<&[(&str, &str)]> = slices.iter().map(Vec::as_slice).collect();
        let p = pool(&refs);
        let mut previous = true;
        for t in thresholds {
            let cfg = VerifierConfig { threshold: t, ..VerifierConfig::default() };
            let approved = predicted_valid(&validate("x", &m, &p, &solver(), &cfg).map_err(|e| e.to_string())?);
            ensure(previous || !approved, || format!("pool {n}: approved at {t} but not below"))?;
            previous = approved;
        }
    }
    Ok(format!("fixture FPs {fps:?} at 1/3, 2/3, 3/3; {MONOTONE_POOLS} random pools monotone"))
}

fn positioned(e: &LogicError) -> Option<&'static str> {
    match e {
        LogicError::Syntax(_) => Some("syntax"),
        LogicError::Sort(s) if s.offset.is_some() => Some("sort"),
        _ => None,
    }
}

fn criterion_7() -> Check {
    let env = vocabulary();
    let sorts = [Sort::Bool, Sort::Int, Sort::Real, Sort::Datatype("Color".into())];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 0..ROUND_TRIPS {
        let t = well_sorted(&mut rng, &sorts[n % sorts.len()], 1 + n % 6);
        let text = print_term(&t);
        let back = parse_term(&text, &env).map_err(|e| format!("{text}: {e}"))?;
        ensure(back == t, || format!("round trip changed {text} into {back}"))?;
    }
    let corpus = std::fs::read_to_string(fixtures_dir().join("malformed/terms.txt")).map_err(|e| e.to_string())?;
    let mut count = 0;
    for line in corpus.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (kind, text) = line.split_once('\t').ok_or_else(|| format!("bad corpus line `{line}`"))?;
        let result =
            catch_unwind(|| parse_term(text, &vocabulary())).map_err(|_| format!("parser panicked on `{text}`"))?;
        let err = match result {
            Ok(t) => return Err(format!("`{text}` parsed as {t}")),
            Err(e) => e,
        };
        ensure(positioned(&err) == Some(kind), || format!("`{text}`: expected positioned {kind} error, got {err:?}"))?;
        count += 1;
    }
    Ok(format!("{ROUND_TRIPS} round trips exact; {count} malformed inputs give positioned errors"))
}

fn criterion_8() -> Check {
    let s = solver();
    let contra = lint(&bools(&["p"], &["p", "(not p)"]), &s).map_err(|e| e.to_string())?;
    let core = contra.errors.iter().find(|i| i.code == LintCode::ContradictoryRules).map(|i| i.core.clone());
    ensure(core.as_ref().is_some_and(|c| c.len() == 2), || format!("contradiction core {core:?}"))?;
    let unused = lint(&bools(&["p", "q"], &["p"]), &s).map_err(|e| e.to_string())?;
    ensure(unused.warnings.iter().any(|i| i.code == LintCode::UnusedVariable && i.subject == "q"), || {
        format!("unused: {:?}", unused.codes())
    })?;
    let taut = lint(&bools(&["p", "q"], &["(or p (not p))", "(=> p q)"]), &s).map_err(|e| e.to_string())?;
    ensure(taut.warnings.iter().any(|i| i.code == LintCode::TautologicalRule && i.subject == "r0"), || {
        format!("tautology: {:?}", taut.codes())
    })?;
    for name in ["park", "ryanair", "ryanair_vetted", "fig2"] {
        let report = lint(&model(name), &s).map_err(|e| e.to_string())?;
        ensure(!report.has_errors(), || format!("{name}: {:?}", report.errors))?;
    }
    Ok("2-rule core, unused and tautology warnings; no errors on 4 fixture models".into())
}

fn criterion_9() -> Check {
    let v = VerifierConfig::default();
    let mut summary = Vec::new();
    for (seed, name) in ["fig2", "park", "ryanair", "ryanair_vetted"].into_iter().enumerate() {
        let m = model(name);
        let config = GeneratorConfig { count: GENERATED_PER_MODEL, seed: seed as u64, ..GeneratorConfig::default() };
        let a = generate_symbolic_tests(&m, &config, &solver(), &v).map_err(|e| format!("{name}: {e}"))?;
        ensure(a.cases.len() == GENERATED_PER_MODEL, || format!("{name}: {} cases", a.cases.len()))?;
        ensure(a.dropped == 0, || format!("{name}: {} disagreements", a.dropped))?;
        let outcomes = run_tests(&a.cases, &m, None, &solver(), &v).map_err(|e| format!("{name}: {e}"))?;
        let failed = outcomes.iter().filter(|o| !o.pass).count();
        ensure(failed == 0, || format!("{name}: {failed} generated cases fail on rerun"))?;
        let b = generate_symbolic_tests(&m, &config, &solver(), &v).map_err(|e| format!("{name}: {e}"))?;
        ensure(a.cases == b.cases, || format!("{name}: not deterministic"))?;
        summary.push(format!("{name} {}", a.cases.len()));
    }
    Ok(format!("{}; 0 disagreements, reproducible", summary.join(", ")))
}

fn criterion_10() -> Check {
    let park = qa_json("park");
    let (q, a) = (park["question"].as_str().unwrap(), park["answer"].as_str().unwrap());
    let config = RefineConfig { domain: "theme park admission".into(), ..RefineConfig::default() };
    let steps = run_refine_loop(q, a, &model("park"), &scripted_pool("park-refine"), &solver(), &config)
        .map_err(|e| e.to_string())?;
    let path: Vec<Category> = steps.iter().map(|s| s.category).collect();
    ensure(steps.len() <= REFINE_MAX_STEPS && steps.last().is_some_and(|s| predicted_valid(&s.findings)), || {
        format!("trajectory {path:?}")
    })?;
    let weather = qa_json("weather");
    let config = RefineConfig { max_iters: NO_TRANSLATION_ITERS, ..RefineConfig::default() };
    let stuck = run_refine_loop(
        weather["question"].as_str().unwrap(),
        weather["answer"].as_str().unwrap(),
        &model("park"),
        &scripted_pool("park-refine"),
        &solver(),
        &config,
    )
    .map_err(|e| e.to_string())?;
    ensure(stuck.len() == NO_TRANSLATION_ITERS, || format!("no-translation run took {} steps", stuck.len()))?;
    ensure(stuck.iter().all(|s| !predicted_valid(&s.findings)), || "no-translation run approved an answer".into())?;
    let shown: Vec<String> = path.iter().map(|c| c.to_string()).collect();
    Ok(format!(
        "{} in {} steps; untranslatable answer stops at {NO_TRANSLATION_ITERS} without approval",
        shown.join(" → "),
        steps.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("published metrics recompute", criterion_1, Some(METRICS_LIMIT)),
        ("park worked example", criterion_2, Some(PARK_LIMIT)),
        ("denied-boarding answer is impossible", criterion_3, Some(RYANAIR_LIMIT)),
        ("classification matches truth tables", criterion_4, Some(ORACLE_LIMIT)),
        ("confidence algebra and self-support", criterion_5, None),
        ("threshold monotonicity", criterion_6, None),
        ("parser round trip and malformed corpus", criterion_7, None),
        ("linter", criterion_8, None),
        ("symbolic test generation", criterion_9, None),
        ("refine loop", criterion_10, None),
    ];
    let mut passed = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.1?}, limit {l:?}")),
            (r, _) => r,
        };
        let (mark, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        passed += usize::from(result.is_ok());
        println!("criterion {:>2} {mark} {name}: {detail} [{elapsed:.2?}]", i + 1);
    }
    println!("{passed}/10 criteria pass");
    if passed == 10 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

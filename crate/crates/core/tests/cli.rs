use std::path::Path;
use std::process::{Command, Output};

use eapm::cli::RunManifest;
use eapm::games::f2_functional;
use eapm::{Behavior, Scenario};
use serde_json::Value;

fn eapm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eapm")).current_dir(dir).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn manifest(path: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn vertices_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = eapm(dir.path(), &["vertices", "--scenario", "2,3,1,4", "--csv", "v.csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["vertex_count"], 40);
    let csv = std::fs::read_to_string(dir.path().join("v.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);
    let m = manifest(&dir.path().join("vertices.manifest.json"));
    assert_eq!(m.command, "vertices");
    assert_eq!(m.exit_code, 0);
    assert!(m.outputs.iter().any(|o| o.ends_with("v.csv")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = eapm(dir.path(), &["vertices", "--scenario", "6,7,1,8", "--cap", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    let m = manifest(&dir.path().join("vertices.manifest.json"));
    assert_eq!(m.exit_code, 2);
    assert!(m.error.is_some());

    assert_eq!(eapm(dir.path(), &["vertices", "--scenario", "2,3,x,4"]).status.code(), Some(3));
    assert_eq!(eapm(dir.path(), &["membership", "--behavior", "missing.txt"]).status.code(), Some(3));
    assert_eq!(eapm(dir.path(), &["--bogus"]).status.code(), Some(3));
    assert_eq!(eapm(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn facet_and_maximize_from_inequality_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("f2.txt"), f2_functional().to_inequality_text(Some(4.0))).unwrap();
    let out = eapm(dir.path(), &["facet", "--functional", "f2.txt", "--manifest", "m.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["is_facet"], true);
    assert_eq!(r["max_value"], 4.0);
    assert_eq!(manifest(&dir.path().join("m.json")).inputs, vec!["f2.txt".to_string()]);

    let out = eapm(dir.path(), &["maximize", "--functional", "f2.txt"]);
    assert_eq!(report(&out)["classical_max"], 4.0);
}

#[test]
fn membership_of_uniform_and_perfect_channel() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario::new(2, 3, 1, 4).unwrap();
    std::fs::write(dir.path().join("u.txt"), Behavior::uniform(s).to_text()).unwrap();
    let out = eapm(dir.path(), &["membership", "--behavior", "u.txt"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["feasible"], true);

    // three inputs sent perfectly through one bit is impossible
    let s = Scenario::new(2, 3, 1, 3).unwrap();
    let perfect = Behavior::from_fn(s, |b, x, _| (b == x) as u8 as f64).unwrap();
    std::fs::write(dir.path().join("p.txt"), perfect.to_text()).unwrap();
    let r = report(&eapm(dir.path(), &["membership", "--behavior", "p.txt"]));
    assert_eq!(r["feasible"], false);
    assert!(r["separation_gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn lifts_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let gen = eapm(
        dir.path(),
        &["random-strategy", "--kind", "ea-classical", "--scenario", "4,3,2,3", "--assist-dim", "2", "--seed", "9", "--output", "c.json"],
    );
    assert_eq!(gen.status.code(), Some(0));
    let dense = eapm(dir.path(), &["lift-dense-coding", "--strategy", "c.json", "--output", "q.json"]);
    assert_eq!(dense.status.code(), Some(0), "{}", String::from_utf8_lossy(&dense.stderr));
    assert!(report(&dense)["max_abs_deviation"].as_f64().unwrap() < 1e-9);
    let tele = eapm(dir.path(), &["lift-teleport", "--strategy", "q.json", "--output", "c2.json"]);
    assert_eq!(tele.status.code(), Some(0));
    assert!(report(&tele)["max_abs_deviation"].as_f64().unwrap() < 1e-9);

    let wrong = eapm(dir.path(), &["lift-teleport", "--strategy", "c.json"]);
    assert_eq!(wrong.status.code(), Some(3));
}

#[test]
fn reproduce_fd_with_stored_behavior() {
    let dir = tempfile::tempdir().unwrap();
    let out = eapm(dir.path(), &["reproduce-f2", "--restarts", "10", "--seed", "2", "--out", "f2.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["seesaw_value"].as_f64().unwrap() > 4.15);
    assert_eq!(r["behavior_is_classical"], false);
    assert!(r["control_value_no_assistance"].as_f64().unwrap() <= 4.0 + 1e-9);
    let p: Behavior = serde_json::from_value(r["behavior"].clone()).unwrap();
    std::fs::write(dir.path().join("p.txt"), p.to_text()).unwrap();

    let out = eapm(dir.path(), &["reproduce-fd", "--d", "4", "--behavior", "p.txt"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["classical_strategy_value"], 8.0);
    assert!(r["pstar_value"].as_f64().unwrap() > 8.0);
    assert_eq!(r["pstar_is_classical"], false);
    assert_eq!(manifest(&dir.path().join("reproduce-fd.manifest.json")).inputs, vec!["p.txt".to_string()]);
}

#[test]
fn steer_check_on_werner_states() {
    use eapm::cli::SteerInput;
    use eapm::linalg::paulis;
    use eapm::steering::{pauli_measurement, werner_state};
    let dir = tempfile::tempdir().unwrap();
    let [x, _, z] = paulis();
    let povms = vec![pauli_measurement(&z).unwrap(), pauli_measurement(&x).unwrap()];
    for (v, found) in [(0.5, true), (0.9, false)] {
        let input = SteerInput {
            state: werner_state(v).unwrap(),
            alice_povms: povms.clone(),
            bob_povms: None,
            scenario: None,
            functional: None,
        };
        std::fs::write(dir.path().join("s.json"), serde_json::to_string(&input).unwrap()).unwrap();
        let out = eapm(dir.path(), &["steer-check", "--input", "s.json", "--lhs-iters", "20000"]);
        assert_eq!(out.status.code(), Some(0));
        let r = report(&out);
        assert_eq!(r["lhs_found"], found, "v = {v}");
        assert!((r["inequality_value"].as_f64().unwrap() - 2.0 * v).abs() < 1e-9);
    }
}

#[test]
fn classicalize_mother_from_file() {
    use eapm::cli::MotherInput;
    use eapm::conversions::MotherPovm;
    use eapm::linalg::{paulis, Povm};
    use eapm::ComplexMatrix;
    let dir = tempfile::tempdir().unwrap();
    let [x, _, z] = paulis();
    let eta = 0.5f64.sqrt();
    let effects = (0..4)
        .map(|k| {
            let mut e = ComplexMatrix::identity(2).scale_real(0.25);
            e.add_scaled(&z, if k < 2 { 0.25 * eta } else { -0.25 * eta });
            e.add_scaled(&x, if k % 2 == 0 { 0.25 * eta } else { -0.25 * eta });
            e
        })
        .collect();
    let mother = MotherPovm::new(vec![2, 2], Povm::new(effects).unwrap()).unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
    let states = (0..3).map(|_| eapm::random::random_pure_state(2, &mut rng)).collect();
    let input = MotherInput { scenario: Scenario::new(2, 3, 2, 2).unwrap(), states, mother };
    std::fs::write(dir.path().join("m.json"), serde_json::to_string(&input).unwrap()).unwrap();
    let out = eapm(dir.path(), &["classicalize-mother", "--input", "m.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(report(&out)["max_abs_deviation"].as_f64().unwrap() < 1e-8);
}

#[test]
fn seesaw_reruns_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("f2.txt"), f2_functional().to_inequality_text(None)).unwrap();
    let args = ["seesaw", "--functional", "f2.txt", "--restarts", "6", "--seed", "11"];
    let a = report(&eapm(dir.path(), &args));
    let b = report(&eapm(dir.path(), &args));
    assert_eq!(a["per_restart_values"], b["per_restart_values"]);
    assert_eq!(a["best_strategy"], b["best_strategy"]);
    assert!(a["gap"].as_f64().unwrap() > 0.0);
    let m = manifest(&dir.path().join("seesaw.manifest.json"));
    assert_eq!(m.seed, Some(11));
    assert!(m.tolerances.contains_key("eps"));
}

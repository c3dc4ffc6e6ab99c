use privrl::env::{env_from_json, env_to_json, read_env, write_env, EnvSpec, Environment};
use privrl::format::{read_dataset, write_counts, write_dataset, LedgerRecord};
use privrl::output::{csv_string, format_g, read_csv, read_csv_file, series, svg_plot, write_csv_file, write_svg_file};
use privrl::sweep::ResultRow;
use privrl_core::counts::raw_counts;
use privrl_core::mdp::sample_dataset;
use privrl_core::privacy::Accountant;
use privrl_core::{seeded_rng, Policy};

fn row(alg: &str, rho: Option<f64>, k: usize, seed: u64, subopt: f64) -> ResultRow {
    ResultRow { alg: alg.into(), env: "binary-action".into(), horizon: 20, episodes: k, rho, seed, subopt, runtime_ms: 0.0 }
}

#[test]
fn format_g_matches_printf() {
    let cases = [
        (0.0, "0"),
        (1.0, "1"),
        (0.1, "0.1"),
        (1.0 / 3.0, "0.333333"),
        (123456.0, "123456"),
        (1234567.0, "1.23457e+06"),
        (0.0001, "0.0001"),
        (0.00001234, "1.234e-05"),
        (-2.5, "-2.5"),
        (999999.5, "1e+06"),
        (f64::INFINITY, "inf"),
        (f64::NAN, "nan"),
    ];
    for (x, want) in cases {
        assert_eq!(format_g(x), want, "{x}");
    }
}

#[test]
fn single_row_gives_two_lines() {
    let text = csv_string(&[row("dp-vapvi", Some(1.0), 50, 0, 0.25)]).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["alg,env,H,K,rho,seed,subopt,runtime_ms", "dp-vapvi,binary-action,20,50,1,0,0.25,0"]);
}

#[test]
fn non_private_rho_is_inf() {
    let text = csv_string(&[row("vapvi", None, 5, 3, 1.0 / 7.0)]).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "vapvi,binary-action,20,5,inf,3,0.142857,0");
}

#[test]
fn csv_round_trips() {
    let rows = vec![
        row("vapvi", None, 5, 0, 8.5),
        row("dp-vapvi", Some(0.1), 1000, 4, 0.0625),
        row("dp-apvi", Some(10.0), 100, 1, f64::NAN),
    ];
    let back = read_csv(csv_string(&rows).unwrap().as_bytes()).unwrap();
    assert_eq!(back.len(), 3);
    assert_eq!(back[..2], rows[..2]);
    assert!(back[2].subopt.is_nan());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    write_csv_file(&rows[..2], &path).unwrap();
    assert_eq!(read_csv_file(&path).unwrap(), rows[..2]);
}

#[test]
fn wrong_header_is_rejected() {
    assert!(read_csv("alg,env,H,K,rho,seed,subopt\n".as_bytes()).is_err());
}

#[test]
fn svg_has_one_polyline_per_series() {
    let mut rows = Vec::new();
    for k in [5, 50, 500] {
        for seed in 0..2 {
            rows.push(row("vapvi", None, k, seed, 1.0 / k as f64));
            rows.push(row("pevi", None, k, seed, 2.0));
            for rho in [1.0, 10.0] {
                rows.push(row("dp-vapvi", Some(rho), k, seed, 3.0 / rho));
            }
        }
    }
    let svg = svg_plot(&rows, "trend").unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
    assert_eq!(series(&rows).len(), 4);
    assert!(svg.contains("episodes K"));
    assert!(svg.contains("suboptimality"));
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plot.svg");
    write_svg_file(&rows, "trend", &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), svg);
}

#[test]
fn series_average_over_seeds() {
    let rows = vec![row("vapvi", None, 5, 0, 1.0), row("vapvi", None, 5, 1, 3.0), row("vapvi", None, 10, 0, 0.5)];
    let s = series(&rows);
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].points, vec![(5, 2.0), (10, 0.5)]);
}

#[test]
fn unwritable_paths_fail() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    assert!(write_csv_file(&[row("vapvi", None, 5, 0, 1.0)], &path).is_err());
}

#[test]
fn environment_json_round_trips() {
    for spec in [
        EnvSpec::BinaryAction { horizon: 3, seed: 7 },
        EnvSpec::RandomTabular { states: 3, actions: 2, horizon: 4, seed: 1 },
    ] {
        let env = spec.build().unwrap();
        assert_eq!(env_from_json(&env_to_json(&env).unwrap()).unwrap(), env);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("env.json");
        write_env(&env, &path).unwrap();
        assert_eq!(read_env(&path).unwrap(), env);
        let via_spec = EnvSpec::File { path: path.clone() };
        assert_eq!(via_spec.build().unwrap(), env);
        assert_eq!(via_spec.name(), "env");
    }
}

#[test]
fn malformed_environment_is_rejected() {
    let env = EnvSpec::RandomTabular { states: 2, actions: 1, horizon: 1, seed: 0 }.build().unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&env_to_json(&env).unwrap()).unwrap();
    value["transitions"][0] = serde_json::json!(0.9);
    assert!(env_from_json(&value.to_string()).is_err());
    assert!(env_from_json("{\"kind\": \"tabular\"}").is_err());
}

#[test]
fn dataset_csv_round_trips() {
    let env = EnvSpec::RandomTabular { states: 3, actions: 2, horizon: 4, seed: 2 }.build().unwrap();
    let Environment::Tabular(mdp) = env else { panic!("tabular spec") };
    let data = sample_dataset(&mdp, &Policy::uniform(mdp.dims()), 25, &mut seeded_rng(3)).unwrap();
    let mut buf = Vec::new();
    write_dataset(&data, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "traj,h,s,a,r,s_next");
    assert_eq!(text.lines().count(), 1 + 25 * 4);
    assert_eq!(read_dataset(buf.as_slice(), 4).unwrap(), data);
    assert!(read_dataset(buf.as_slice(), 3).is_err());
}

#[test]
fn count_dump_lists_every_cell() {
    let env = EnvSpec::RandomTabular { states: 2, actions: 2, horizon: 2, seed: 2 }.build().unwrap();
    let Environment::Tabular(mdp) = env else { panic!("tabular spec") };
    let data = sample_dataset(&mdp, &Policy::uniform(mdp.dims()), 10, &mut seeded_rng(3)).unwrap();
    let counts = raw_counts(&data, mdp.dims()).unwrap();
    let mut buf = Vec::new();
    write_counts(&counts, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    // header + 8 pair rows + 16 transition rows
    assert_eq!(text.lines().count(), 1 + 8 + 16);
    let pair_total: f64 = text.lines().skip(1).filter(|l| l.split(',').nth(3) == Some("")).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert_eq!(pair_total, 20.0);
}

#[test]
fn ledger_record_serializes() {
    let mut acc = Accountant::zcdp(1.0).unwrap();
    acc.record("pair_counts", 2.0, 0.5, 2.0);
    acc.record("transition_counts", 2.0, 0.5, 2.0);
    let rec = LedgerRecord::from(&acc.finish().unwrap());
    assert_eq!(rec.kind, "zcdp");
    assert_eq!(rec.total, 1.0);
    let json = serde_json::to_string(&rec).unwrap();
    assert_eq!(serde_json::from_str::<LedgerRecord>(&json).unwrap(), rec);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use geoecon::*;
use tempfile::TempDir;

fn geoecon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoecon"))
        .args(args)
        .env("GEOECON_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = geoecon(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Data {
    dir: TempDir,
}

impl Data {
    fn new(seed: u64) -> Self {
        let dir = tempfile::tempdir().unwrap();
        ok(&[
            "synth",
            "--seed",
            &seed.to_string(),
            "--countries",
            "6",
            "--domains",
            "8",
            "--out",
            s(dir.path()),
        ]);
        Self { dir }
    }

    fn deals(&self) -> PathBuf {
        self.dir.path().join("deals.csv")
    }

    fn classes(&self) -> PathBuf {
        self.dir.path().join("classifications.csv")
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, command: &str, out: &Path, extra: &[&str]) -> Output {
        let deals = self.deals();
        let classes = self.classes();
        let mut args = vec![
            command,
            "--deals",
            s(&deals),
            "--classifications",
            s(&classes),
            "--out",
            s(out),
        ];
        args.extend_from_slice(extra);
        geoecon(&args)
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn in_process(data: &Data, variant: &VariantSpec) -> (SpecializationMatrix, ComplexityReport) {
    let deals = parse_deals(read(&data.deals()).as_bytes()).unwrap();
    let classes = parse_classifications(read(&data.classes()).as_bytes()).unwrap();
    let t = build_tensor(&deals, &classes, &Taxonomy::default_emerging(), &FilterParams::default())
        .unwrap();
    let (_, m) = specialize(&t, 2024, variant).unwrap();
    let r = analyze(&m).unwrap();
    (m, r)
}

#[test]
fn indices_writes_three_files() {
    let data = Data::new(3);
    let out = data.out("run");
    assert!(data.run("indices", &out, &[]).status.success());
    for f in ["rva.csv", "matrix.csv", "indices.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let v: serde_json::Value = serde_json::from_str(&read(&out.join("indices.json"))).unwrap();
    assert_eq!(v["year"], 2024);
    assert_eq!(v["variant"], "plain");
    assert_eq!(v["domains"].as_array().unwrap().len(), 18);
    assert_eq!(v["countries"].as_array().unwrap().len(), 6);
    assert!(v["domains"][17]["etgci"].is_null());
}

#[test]
fn rounded_variant_matches_library() {
    let data = Data::new(4);
    let out = data.out("rounded");
    let run = data.run("indices", &out, &["--variant", "rounded", "--quantum", "25000000"]);
    assert!(run.status.success());
    let (m, r) = in_process(&data, &VariantSpec::Rounded { quantum: 2.5e7 });
    assert_eq!(read(&out.join("matrix.csv")), m.to_csv());
    let all = Taxonomy::default_emerging().ids();
    assert_eq!(read(&out.join("indices.json")), r.to_indices_json(&all));
    let v: serde_json::Value = serde_json::from_str(&read(&out.join("indices.json"))).unwrap();
    assert_eq!(v["variant"], "rounded");
}

#[test]
fn windowed_variant_runs() {
    let data = Data::new(5);
    let out = data.out("window");
    assert!(data.run("indices", &out, &["--variant", "windowed", "--window", "2"]).status.success());
    let (m, _) = in_process(&data, &VariantSpec::Windowed { window: 2 });
    assert_eq!(read(&out.join("matrix.csv")), m.to_csv());
}

#[test]
fn missing_input_exits_2_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = geoecon(&[
        "indices",
        "--deals",
        s(&missing),
        "--classifications",
        s(&missing),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("nope.csv"), "{err}");
}

#[test]
fn malformed_row_exits_2_with_line() {
    let data = Data::new(6);
    std::fs::write(data.deals(), "firm_id,country,year,amount_usd\nx,US,2024,lots\n").unwrap();
    let out = data.run("indices", &data.out("bad"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(geoecon(&["indices", "--variant"]).status.code(), Some(2));
    assert_eq!(geoecon(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(geoecon(&["synth"]).status.code(), Some(2));
    assert_eq!(geoecon(&["--help"]).status.code(), Some(0));
}

#[test]
fn command_line_overrides_config() {
    let data = Data::new(7);
    let cfg = data.out("run.cfg");
    let cfg_out = data.out("from-config");
    std::fs::write(
        &cfg,
        format!(
            "# settings\ndeals = {}\nclassifications = {}\nvariant = rounded\nquantum = 1e7\nout = {}\n",
            s(&data.deals()),
            s(&data.classes()),
            s(&cfg_out)
        ),
    )
    .unwrap();
    ok(&["--config", s(&cfg), "indices"]);
    let v: serde_json::Value = serde_json::from_str(&read(&cfg_out.join("indices.json"))).unwrap();
    assert_eq!(v["variant"], "rounded");

    let cli_out = data.out("from-cli");
    ok(&["--config", s(&cfg), "indices", "--variant", "plain", "--out", s(&cli_out)]);
    let v: serde_json::Value = serde_json::from_str(&read(&cli_out.join("indices.json"))).unwrap();
    assert_eq!(v["variant"], "plain");

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let bad = geoecon(&["--config", s(&cfg), "indices"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("colour"));
}

#[test]
fn simulate_writes_ssset_and_bloc() {
    let data = Data::new(8);
    let out = data.out("sim");
    let (m, _) = in_process(&data, &VariantSpec::Plain);
    let members = format!("{},{}", m.countries()[0], m.countries()[1]);
    let run = data.run("simulate", &out, &["--bloc", &members, "--rule", "k:1"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(read(&out.join("ssset.csv")), find_ssset(&m).unwrap().to_csv());
    let v: serde_json::Value = serde_json::from_str(&read(&out.join("bloc.json"))).unwrap();
    assert_eq!(v["rule"], "k:1");
    assert_eq!(v["bloc_label"], members.replace(',', "+"));
}

#[test]
fn single_country_gives_none_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut deals = String::from("firm_id,country,year,amount_usd\n");
    let mut classes = String::from("firm_id,domain_id,probability\n");
    for f in 0..4 {
        deals.push_str(&format!("f{f},US,2024,{}\n", 2_000_000 + f * 1_000_000));
        classes.push_str(&format!("f{f},D0{},0.9\n", 1 + f % 2));
    }
    std::fs::write(dir.path().join("d.csv"), deals).unwrap();
    std::fs::write(dir.path().join("c.csv"), classes).unwrap();
    let out = dir.path().join("out");
    ok(&[
        "simulate",
        "--deals",
        s(&dir.path().join("d.csv")),
        "--classifications",
        s(&dir.path().join("c.csv")),
        "--min-firms",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        read(&out.join("ssset.csv")),
        "country,ssset_domains,rank_change,relatedness_rank,relatedness_score\nUS,NONE,=,,\n"
    );
}

#[test]
fn figures_are_sorted_tables() {
    let data = Data::new(9);
    let out = data.out("fig");
    assert!(data.run("figures", &out, &[]).status.success());
    let heat = read(&out.join("heatmap.csv"));
    let scatter = read(&out.join("scatter.csv"));
    let mut lines = scatter.lines();
    assert_eq!(lines.next(), Some("country,diversity,mean_ubiquity"));
    let div: Vec<usize> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(div.windows(2).all(|w| w[0] >= w[1]));
    let rows: Vec<Vec<u8>> = heat
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    let ubi: Vec<usize> = (0..rows[0].len()).map(|j| rows.iter().map(|r| r[j] as usize).sum()).collect();
    assert!(ubi.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(rows.len(), div.len());
}

#[test]
fn synth_is_deterministic_and_tiered() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        ok(&["synth", "--seed", "17", "--out", s(d.path())]);
    }
    for f in ["deals.csv", "classifications.csv"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)));
    }
    let c = tempfile::tempdir().unwrap();
    ok(&["synth", "--seed", "18", "--out", s(c.path())]);
    assert_ne!(read(&a.path().join("deals.csv")), read(&c.path().join("deals.csv")));

    let deals = parse_deals(read(&a.path().join("deals.csv")).as_bytes()).unwrap();
    let classes = parse_classifications(read(&a.path().join("classifications.csv")).as_bytes()).unwrap();
    let t = build_tensor(&deals, &classes, &Taxonomy::default_emerging(), &FilterParams::default())
        .unwrap();
    let (_, m) = specialize(&t, 2024, &VariantSpec::Plain).unwrap();
    assert_eq!(m.n_countries(), 16);
    let mut patterns: Vec<&Vec<u8>> = m.rows().iter().collect();
    patterns.sort();
    patterns.dedup();
    assert_eq!(patterns.len(), 3, "three country tiers");
    let mut div = diversity(&m);
    div.sort_unstable();
    div.dedup();
    assert_eq!(div.len(), 3);
}

#[test]
fn synth_rejects_bad_parameters() {
    let d = tempfile::tempdir().unwrap();
    let out = geoecon(&["synth", "--seed", "1", "--nestedness", "1.5", "--out", s(d.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = geoecon(&["synth", "--seed", "1", "--domains", "40", "--out", s(d.path())]);
    assert_eq!(out.status.code(), Some(2));
}

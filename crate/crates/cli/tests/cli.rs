mod common;

use common::{ok, path_str, read_json, ssmseg, synth};

#[test]
fn missing_audio_exits_one_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.wav");
    let json = dir.path().join("out.json");
    let out = ssmseg(&["segment", path_str(&missing), "--out-json", path_str(&json)], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(path_str(&missing)));
    assert!(!json.exists());
}

#[test]
fn bad_config_values_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, _) = synth(dir.path(), "short", &[("anchor", 20.0)], 1);
    let json = dir.path().join("out.json");
    let wav = path_str(&wav);
    let bad_flag = ssmseg(
        &["segment", wav, "--out-json", path_str(&json), "--peak-k", "abc"],
        None,
    );
    assert_eq!(bad_flag.status.code(), Some(2));
    let cfg = dir.path().join("cfg.txt");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let bad_file = ssmseg(
        &[
            "segment",
            wav,
            "--out-json",
            path_str(&json),
            "--config",
            path_str(&cfg),
        ],
        None,
    );
    assert_eq!(bad_file.status.code(), Some(2));
    assert_eq!(ssmseg(&["segment", wav, "--no-such-flag"], None).status.code(), Some(2));
}

#[test]
fn config_precedence_is_defaults_file_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, _) = synth(dir.path(), "short", &[("anchor", 30.0)], 2);
    let cfg = dir.path().join("cfg.txt");
    std::fs::write(&cfg, "peak_k = 3.0\ntau = -1.5\n").unwrap();
    let json = dir.path().join("out.json");
    ok(&[
        "segment",
        path_str(&wav),
        "--config",
        path_str(&cfg),
        "--tau",
        "-2",
        "--out-json",
        path_str(&json),
    ]);
    let config = &read_json(&json)["config"];
    assert_eq!(config["peak_k"], 3.0);
    assert_eq!(config["tau"], -2.0);
    assert_eq!(config["segment_len_s"], 5.0);
}

#[test]
fn two_source_file_gives_one_change() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, _) = synth(dir.path(), "pair", &[("anchor", 60.0), ("caller", 60.0)], 3);
    let json = dir.path().join("out.json");
    ok(&["segment", path_str(&wav), "--out-json", path_str(&json)]);
    let report = read_json(&json);
    assert_eq!(report["change_points"].as_array().unwrap().len(), 1);
    assert_eq!(report["segments"].as_array().unwrap().len(), 2);
    let t = report["change_points"][0]["time_s"].as_f64().unwrap();
    assert!((t - 60.0).abs() <= 0.2, "{t}");
}

#[test]
fn single_source_file_gives_one_newsreader_segment() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, _) = synth(dir.path(), "mono", &[("reporter", 90.0)], 4);
    let json = dir.path().join("out.json");
    ok(&["segment", path_str(&wav), "--out-json", path_str(&json)]);
    let report = read_json(&json);
    assert!(report["change_points"].as_array().unwrap().is_empty());
    let segments = report["segments"].as_array().unwrap();
    assert_eq!(segments.len(), 1);
    assert_eq!(segments[0]["label"], "newsreader");
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, _) = synth(
        dir.path(),
        "three",
        &[("anchor", 40.0), ("guest", 35.0), ("anchor", 30.0)],
        5,
    );
    let wav = path_str(&wav);
    let mut runs = Vec::new();
    for (i, threads) in [Some(1), Some(4), None, Some(4)].into_iter().enumerate() {
        let json = dir.path().join(format!("{i}.json"));
        let rttm = dir.path().join(format!("{i}.rttm"));
        let pgm = dir.path().join(format!("{i}.pgm"));
        let seg = ssmseg(
            &[
                "segment",
                wav,
                "--out-json",
                path_str(&json),
                "--out-rttm",
                path_str(&rttm),
            ],
            threads,
        );
        assert!(seg.status.success());
        assert!(ssmseg(&["ssm-image", wav, "--out", path_str(&pgm)], threads)
            .status
            .success());
        runs.push([json, rttm, pgm].map(|p| std::fs::read(p).unwrap()));
    }
    for run in &runs[1..] {
        assert!(run == &runs[0]);
    }
}

#[test]
fn synth_is_deterministic_and_dumps_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, ref_a) = synth(dir.path(), "a", &[("studio", 12.0), ("guest", 11.0)], 6);
    let (b, ref_b) = synth(dir.path(), "b", &[("studio", 12.0), ("guest", 11.0)], 6);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read_to_string(&ref_a).unwrap(),
        std::fs::read_to_string(&ref_b).unwrap()
    );

    let mfcc = dir.path().join("mfcc.csv");
    ok(&["mfcc-dump", path_str(&a), "--out", path_str(&mfcc)]);
    let text = std::fs::read_to_string(&mfcc).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("time_s,c0,c1"));
    assert!(lines.next().unwrap().starts_with("0.012500,"));

    let nov = dir.path().join("nov.csv");
    ok(&[
        "novelty-dump",
        path_str(&a),
        "--out",
        path_str(&nov),
        "--segment-len-s",
        "2",
    ]);
    let text = std::fs::read_to_string(&nov).unwrap();
    assert_eq!(text.lines().next(), Some("segment_index,time_s,score"));
    assert_eq!(text.lines().count(), 1 + 11);
}

#[test]
fn eval_rejects_unparseable_reference() {
    let dir = tempfile::tempdir().unwrap();
    let hyp = dir.path().join("hyp.txt");
    let reference = dir.path().join("ref.txt");
    std::fs::write(&hyp, "10.0\n").unwrap();
    std::fs::write(&reference, "ten seconds\n").unwrap();
    let out = ssmseg(&["eval", path_str(&hyp), path_str(&reference)], None);
    assert_eq!(out.status.code(), Some(2));
}

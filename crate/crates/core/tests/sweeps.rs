use proptest::prelude::*;

use ratpoints::asymptotics::Regime;
use ratpoints::harness::{read_records, run_sweep, write_records, CountCache, DeltaSchedule, QGrid, SweepConfig, SweepRecord};
use ratpoints::{Curve, CurveSpec, Mode};

fn small_sweep(workers: usize) -> SweepConfig {
    SweepConfig {
        curve: CurveSpec::Builtin("cubic".into()),
        q_grid: QGrid { base: 64.0, factor: 2.0, count: 4 },
        delta: DeltaSchedule::Power { c: 0.8, gamma: 0.3 },
        mode: Mode::Tilde,
        workers,
        ..Default::default()
    }
}

#[test]
fn parabola_sweep_has_one_record_per_point() {
    let cfg = SweepConfig { q_grid: QGrid { base: 256.0, factor: 2.0, count: 5 }, ..Default::default() };
    let records = run_sweep(&cfg).unwrap();
    assert_eq!(records.len(), 5);
    assert_eq!(records.iter().map(|r| r.q).collect::<Vec<_>>(), vec![256.0, 512.0, 1024.0, 2048.0, 4096.0]);
    assert!(records.iter().all(|r| r.ratio.is_some_and(|v| v.is_finite())));
    assert!(records.iter().all(|r| r.regime == Some(Regime::One)));
}

#[test]
fn sweep_content_is_independent_of_workers() {
    let one = run_sweep(&small_sweep(1)).unwrap();
    let three = run_sweep(&small_sweep(3)).unwrap();
    assert_eq!(one.len(), three.len());
    for (a, b) in one.iter().zip(&three) {
        assert!(a.same_content(b), "{a:?}\n{b:?}");
    }
}

#[test]
fn warm_cache_returns_identical_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SweepConfig { cache_dir: Some(dir.path().to_path_buf()), ..small_sweep(0) };
    let cold = run_sweep(&cfg).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 4);
    let warm = run_sweep(&cfg).unwrap();
    assert_eq!(cold, warm);
    let fresh = run_sweep(&small_sweep(0)).unwrap();
    for (a, b) in fresh.iter().zip(&warm) {
        assert!(a.same_content(b));
    }
}

#[test]
fn cache_ignores_entries_for_other_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cache = CountCache::new(dir.path()).unwrap();
    let p = Curve::builtin("parabola").unwrap();
    assert!(cache.get(&p, Mode::Full, 100.0, 0.1).is_none());
    let key = CountCache::key(&p, Mode::Full, 100.0, 0.1);
    // A file under the right key but describing another query is not trusted.
    std::fs::write(
        dir.path().join(format!("{key}.json")),
        r#"{"curve_id":"parabola","mode":"full","q":100.0,"delta":0.2,"version":"x","count":1,"boundary_hits":0,"elapsed_ms":0.0}"#,
    )
    .unwrap();
    assert!(cache.get(&p, Mode::Full, 100.0, 0.1).is_none());
}

#[test]
fn sweep_writes_csv_and_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let plot = dir.path().join("s.dat");
    let cfg = SweepConfig { output: Some(csv.clone()), plot: Some(plot.clone()), ..small_sweep(0) };
    let records = run_sweep(&cfg).unwrap();
    let back = read_records(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(back, records);
    let text = std::fs::read_to_string(&plot).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
    assert!(text.contains("delta = 0.8 * Q^(-0.3)"));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e6f64..1e6]
}

prop_compose! {
    fn arb_record()(
        curve_id in "[a-z][a-z0-9\\-\\[\\],/]{0,12}",
        tilde in any::<bool>(),
        q in 1.0f64..1e9,
        delta in 1e-9f64..0.5,
        count in proptest::option::of(any::<u64>()),
        hits in proptest::option::of(0u64..1000),
        main in finite(),
        error in proptest::option::of(finite()),
        regime in proptest::option::of(any::<bool>()),
        k in proptest::option::of(any::<u64>()),
        bound in proptest::option::of(finite()),
        ratio in proptest::option::of(finite()),
        elapsed_ms in 0.0f64..1e7,
        note in "[ -~]{0,30}",
    ) -> SweepRecord {
        SweepRecord {
            curve_id,
            mode: if tilde { Mode::Tilde } else { Mode::Full },
            q,
            delta,
            count,
            boundary_hits: hits,
            main,
            error,
            regime: regime.map(|one| if one { Regime::One } else { Regime::Two }),
            k,
            bound,
            ratio,
            elapsed_ms,
            note,
        }
    }
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(records in proptest::collection::vec(arb_record(), 0..8)) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let back = read_records(buf.as_slice()).unwrap();
        prop_assert_eq!(back, records);
    }
}

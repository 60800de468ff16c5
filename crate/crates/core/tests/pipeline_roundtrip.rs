//! End-to-end tape round-trips: fabricated tapes re-extract to exactly the
//! durations that went in, at realistic corpus scale and across session
//! breaks, overnight gaps, and class mixtures.

use durascale_core::synth::{fabricate_tape, sample_weibull};
use durascale_core::tape::{
    extract_durations, parse_tape, summarize, ClassFilter, DurationSeries, SessionCalendar,
};
use durascale_core::models::WeibullParams;

fn roundtrip(series: &[DurationSeries]) -> Vec<DurationSeries> {
    let calendar = SessionCalendar::default();
    let tape = fabricate_tape(series, &calendar);
    let parsed = parse_tape(&tape).expect("fabricated tape parses");
    extract_durations(&parsed, ClassFilter::All, &calendar)
}

#[test]
fn corpus_scale_series_survives_exactly() {
    // one stock at roughly the size and mean of a heavily traded listing:
    // ~889k trades, ~2% simultaneous at grid resolution, mean near 3.8 s
    let exp = WeibullParams::new(1.0 / 3.81, 1.0).unwrap();
    let mut secs = sample_weibull(&exp, 889_000, 1201);
    for v in secs.iter_mut().step_by(50) {
        *v = 0.0;
    }
    let input = DurationSeries::from_secs("000001", ClassFilter::All, &secs);
    let out = roundtrip(std::slice::from_ref(&input));
    assert_eq!(out.len(), 1);
    let got = &out[0];

    assert_eq!(got.centis, input.centis, "duration sequence must round-trip");
    assert_eq!(got.segments.iter().sum::<usize>(), input.centis.len());
    // injected zeros plus draws under half a centisecond
    let zeros = input.centis.iter().filter(|&&c| c == 0).count() as u64;
    assert_eq!(got.zero_count, zeros);
    assert!(zeros >= 889_000 / 50);
    assert_eq!(
        got.n_trades,
        input.centis.len() as u64 + got.segments.len() as u64,
        "each session block costs one anchor trade"
    );
    // mean is exact at centisecond precision, not a float re-derivation
    let total: u64 = input.centis.iter().map(|&c| u64::from(c)).sum();
    let mean = got.mean_secs().unwrap();
    assert!((mean - total as f64 / 100.0 / input.centis.len() as f64).abs() < 1e-12);

    let summary = summarize(&out);
    let csv = summary.to_csv();
    assert!(csv.contains(&format!("000001,all,{},{},", got.n_trades, got.zero_count)));
}

#[test]
fn values_crossing_the_noon_break_reanchor_instead_of_bridging() {
    // 7000 s fits in one session but not in what is left after 3000 s, so
    // the third value must re-anchor in the afternoon, never spanning the
    // 11:30 to 13:00 gap
    let input = DurationSeries::from_secs(
        "000002",
        ClassFilter::All,
        &[3000.0, 1.5, 7000.0, 2.25, 0.0],
    );
    let out = roundtrip(std::slice::from_ref(&input));
    let got = &out[0];
    assert_eq!(got.centis, input.centis);
    assert_eq!(got.segments, vec![2, 3], "break splits the series into two blocks");
    assert_eq!(got.zero_count, 1);
}

#[test]
fn oversize_waits_vanish_without_spurious_durations() {
    // 40000 s exceeds both sessions: the wait spans closes and the value is
    // unrepresentable, so re-extraction sees every other value but not it
    let input =
        DurationSeries::from_secs("000003", ClassFilter::All, &[5.0, 40_000.0, 7.5, 12.0]);
    let out = roundtrip(std::slice::from_ref(&input));
    let got = &out[0];
    let kept: Vec<u32> = vec![500, 750, 1200];
    assert_eq!(got.centis, kept);
    assert_eq!(got.segments, vec![1, 2]);
    // the dropped wait costs trades but no duration
    assert_eq!(got.n_trades, 3 + 2);
}

#[test]
fn overnight_gaps_never_become_durations() {
    // two stocks force multi-day layouts; no extracted duration may exceed
    // the longest session even though the tape spans several days
    let a = DurationSeries::from_secs("000004", ClassFilter::All, &[7100.0, 7100.0, 7100.0]);
    let b = DurationSeries::from_secs("000005", ClassFilter::All, &[6900.0, 6950.0, 7000.0]);
    let calendar = SessionCalendar::default();
    let tape = fabricate_tape(&[a.clone(), b.clone()], &calendar);
    let parsed = parse_tape(&tape).unwrap();
    let days: std::collections::BTreeSet<_> =
        parsed.records.iter().map(|r| r.date).collect();
    assert!(days.len() > 1, "layout must actually span several days");
    let out = extract_durations(&parsed, ClassFilter::All, &calendar);
    for s in &out {
        let longest = 7200 * 100;
        assert!(s.centis.iter().all(|&c| c <= longest));
    }
    assert_eq!(out[0].centis, a.centis);
    assert_eq!(out[1].centis, b.centis);
}

#[test]
fn class_filters_separate_interleaved_streams() {
    let filled = DurationSeries::from_secs("000006", ClassFilter::Filled, &[1.0, 2.0, 3.0]);
    let partial =
        DurationSeries::from_secs("000006", ClassFilter::PartiallyFilled, &[4.5, 5.5]);
    let calendar = SessionCalendar::default();
    let tape = fabricate_tape(&[filled.clone(), partial.clone()], &calendar);
    let parsed = parse_tape(&tape).unwrap();

    let f = extract_durations(&parsed, ClassFilter::Filled, &calendar);
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].centis, filled.centis);

    let p = extract_durations(&parsed, ClassFilter::PartiallyFilled, &calendar);
    assert_eq!(p.len(), 1);
    assert_eq!(p[0].centis, partial.centis);
}

#[test]
fn many_stock_tapes_keep_stocks_independent() {
    let stocks: Vec<DurationSeries> = (0..23)
        .map(|i| {
            let scale = 2.0 * 1.25f64.powi(i);
            let secs: Vec<f64> =
                sample_weibull(&WeibullParams::new(1.0 / scale, 1.0).unwrap(), 500, 1301 + i as u64);
            DurationSeries::from_secs(&format!("{:06}", i + 1), ClassFilter::All, &secs)
        })
        .collect();
    let out = roundtrip(&stocks);
    assert_eq!(out.len(), 23);
    for (got, want) in out.iter().zip(&stocks) {
        assert_eq!(got.stock, want.stock);
        assert_eq!(got.centis, want.centis, "stock {}", want.stock);
    }
}

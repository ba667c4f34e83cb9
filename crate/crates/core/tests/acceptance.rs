//! Acceptance suite. Runs without the test harness so every criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use gdc2::archive::write_archive;
use gdc2::codec::fields::{l1_len, l1_pos, l2_id, l2_len, l2_pos};
use gdc2::codec::{decode_stream, SequenceDecoder, SequenceEncoder};
use gdc2::gen::{generate, GenConfig};
use gdc2::lz1::{self, Variant};
use gdc2::lz2::StreamStore;
use gdc2::pipeline::{compress_sequences, decode_collection, extract, CompressReport, Target};
use gdc2::ref_index::RefIndex;
use gdc2::{L1Tuple, L2Element, Params, RefFraction, Sequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and scales.
const C1_CORPORA: usize = 200;
const C1_REF_RANGE: (usize, usize) = (10_000, 1_000_000);
const C1_COUNT_RANGE: (usize, usize) = (2, 200);
/// Cap on collection symbols per corpus so the sweep fits its time budget.
const C1_MAX_COLLECTION: usize = 1_500_000;
const C1_WORKERS: [usize; 2] = [1, 4];
const C1_FRACTIONS: [u32; 3] = [10, 50, 100];
const C2_PAIRS: usize = 1000;
const C2_MAX_S: usize = 2048;
const C3_NOISE: f64 = 0.05;
const C7_TARGET_MBPS: f64 = 20.0;
const C7_FLOOR_MBPS: f64 = 5.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: String) -> Outcome {
    Outcome { pass: true, detail }
}

fn fail(detail: String) -> Outcome {
    Outcome { pass: false, detail }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    let x: f64 = rng.gen_range((lo as f64).ln()..=(hi as f64).ln());
    (x.exp().round() as usize).clamp(lo, hi)
}

fn params(workers: usize, percent: u32) -> Params {
    Params {
        l1_workers: workers,
        ref_fraction: RefFraction::from_percent(percent).unwrap(),
        ..Params::default()
    }
}

fn collection_bytes(archive: &gdc2::archive::Archive, dir: &Path, name: &str) -> u64 {
    write_archive(&dir.join(name), archive).unwrap().collection()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let (mut sequences, mut symbols, mut runs) = (0usize, 0u64, 0usize);
    for corpus in 0..C1_CORPORA {
        // the first two corpora pin the extremes of the size ranges
        let (ref_len, count) = match corpus {
            0 => (C1_REF_RANGE.1, C1_COUNT_RANGE.0),
            1 => (C1_REF_RANGE.0, C1_COUNT_RANGE.1),
            _ => {
                let r = log_uniform(&mut rng, C1_REF_RANGE);
                let n = log_uniform(&mut rng, C1_COUNT_RANGE);
                (r, n.min((C1_MAX_COLLECTION / r).max(C1_COUNT_RANGE.0)))
            }
        };
        let snp = rng.gen_range(0.0..=0.05);
        let indel = rng.gen_range(0.0..=0.01);
        let reference = common::random_dna(&mut rng, ref_len);
        let seqs = common::collection(&mut rng, &reference, count, snp, indel);
        for workers in C1_WORKERS {
            for percent in C1_FRACTIONS {
                let p = params(workers, percent);
                let (archive, _) =
                    match compress_sequences(&reference, seqs.clone().into_iter().map(Ok), count, &p, true) {
                        Ok(x) => x,
                        Err(e) => return fail(format!("corpus {corpus} w={workers} f={percent}%: {e}")),
                    };
                let decoded = match decode_collection(&archive, None) {
                    Ok(d) => d,
                    Err(e) => return fail(format!("corpus {corpus} w={workers} f={percent}%: {e}")),
                };
                for (meta, want) in decoded.metas.iter().zip(&seqs) {
                    let got = decoded.expand(meta.archive_ordinal).unwrap();
                    if got != want.symbols || meta.seq_id != want.id || meta.line_width as usize != want.line_width {
                        return fail(format!(
                            "corpus {corpus} w={workers} f={percent}%: record '{}' differs",
                            want.id
                        ));
                    }
                }
                runs += 1;
            }
        }
        sequences += count;
        symbols += seqs.iter().map(|s| s.symbols.len() as u64).sum::<u64>();
    }
    pass(format!(
        "{C1_CORPORA} corpora, {sequences} sequences, {symbols} symbols, {runs} compress/decompress runs byte-exact"
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let p = Params {
        h1m: 3,
        h1e: 2,
        max_candidates: usize::MAX,
        ..Params::default()
    };
    let variants = [Variant::Snp, Variant::Insertion1, Variant::Deletion1];
    let mut steps_checked = 0;
    for pair in 0..C2_PAIRS {
        let r_len = rng.gen_range(3..=1500);
        let r = common::random_dna(&mut rng, r_len);
        let s = common::patchwork(&mut rng, &r, C2_MAX_S);
        let idx = RefIndex::build(r.clone(), p.h1m).unwrap();
        let (tuples, steps) = lz1::factor_traced(&s, &idx, &p);
        match common::check_trace(&r, &s, &tuples, &steps, 3, 2, &variants) {
            Ok(n) => steps_checked += n,
            Err(e) => return fail(format!("pair {pair}: {e}")),
        }
        if lz1::expand(&tuples, &r).ok().as_deref() != Some(&s[..]) {
            return fail(format!("pair {pair}: factoring does not expand back"));
        }
    }
    pass(format!(
        "{C2_PAIRS} pairs, {steps_checked} indexed/unmatched steps equal the exhaustive oracle"
    ))
}

struct C3Data {
    reference: Vec<u8>,
    sequences: Vec<Sequence>,
}

fn c3_corpus() -> C3Data {
    let corpus = generate(&GenConfig {
        ref_len: 1_000_000,
        count: 100,
        snp_rate: 0.001,
        indel_rate: 0.0001,
        seed: 7,
        ..GenConfig::default()
    })
    .unwrap();
    let sequences = corpus
        .sequences
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut q = Sequence::new(format!("sample{}", i + 1), s);
            q.source_file = "collection.fa".into();
            q
        })
        .collect();
    C3Data {
        reference: corpus.reference,
        sequences,
    }
}

fn compress_prefix(data: &C3Data, n: usize, p: &Params, dir: &Path, name: &str) -> (u64, u64, CompressReport) {
    let seqs = data.sequences[..n].iter().cloned().map(Ok);
    let (archive, report) = compress_sequences(&data.reference, seqs, n, p, true).unwrap();
    (report.raw_bytes, collection_bytes(&archive, dir, name), report)
}

fn criterion_3(data: &C3Data, dir: &Path) -> (Outcome, CompressReport) {
    let on = params(3, 100);
    let off = Params {
        level2: false,
        ..on.clone()
    };
    let (raw, with_l2, report) = compress_prefix(data, 100, &on, dir, "c3_on");
    let (_, without_l2, _) = compress_prefix(data, 100, &off, dir, "c3_off");
    let mut ratios = Vec::new();
    for n in [10, 50] {
        let (r, c, _) = compress_prefix(data, n, &on, dir, &format!("c3_{n}"));
        ratios.push((n, r as f64 / c as f64));
    }
    ratios.push((100, raw as f64 / with_l2 as f64));
    let trend_ok = ratios.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - C3_NOISE));
    let shown: Vec<String> = ratios.iter().map(|(n, r)| format!("n={n}: {r:.1}")).collect();
    let detail = format!(
        "level 2 on {with_l2} B vs off {without_l2} B; ratios {}",
        shown.join(", ")
    );
    let outcome = if with_l2 < without_l2 && trend_ok {
        pass(detail)
    } else {
        fail(detail)
    };
    (outcome, report)
}

fn criterion_4(dir: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let reference = common::random_dna(&mut rng, 50_000);
    let mut extracted = 0;
    for (n, percent) in [(50, 100), (50, 10), (100, 10)] {
        let seqs = common::collection(&mut rng, &reference, n, 0.002, 0.0005);
        let (archive, _) =
            compress_sequences(&reference, seqs.into_iter().map(Ok), n, &params(4, percent), true).unwrap();
        let prefix = dir.join(format!("c4_{n}_{percent}"));
        write_archive(&prefix, &archive).unwrap();
        let full = decode_collection(&archive, None).unwrap();
        if n == 100 {
            let x = extract(&prefix, &Target::Ordinal(n as u32), None).unwrap();
            let bound = (n as u64 * percent as u64).div_ceil(100) as usize + 1;
            if x.sequence.symbols != full.expand(n as u32).unwrap() {
                return fail(format!("extract({n}) differs at {percent}%"));
            }
            if x.decoded_streams > bound {
                return fail(format!(
                    "extract({n}) decoded {} streams, bound {bound}",
                    x.decoded_streams
                ));
            }
            extracted += 1;
            continue;
        }
        for m in 1..=n as u32 {
            let x = extract(&prefix, &Target::Ordinal(m), None).unwrap();
            let meta = full.metas.iter().find(|r| r.archive_ordinal == m).unwrap();
            if x.sequence.symbols != full.expand(m).unwrap() || x.meta != *meta {
                return fail(format!("extract({m}) differs at {percent}%"));
            }
            extracted += 1;
        }
    }
    pass(format!(
        "{extracted} extractions equal full decompression; extract(100) at 10% within ceil(0.1n)+1 streams"
    ))
}

fn criterion_5(dir: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let reference = common::random_dna(&mut rng, 200_000);
    let seqs = common::collection(&mut rng, &reference, 30, 0.003, 0.0005);
    let ref_path = dir.join("c5_ref.fa");
    let col_path = dir.join("c5_col.fa");
    common::write_records(&ref_path, &[("ref", &reference)], 60);
    let recs: Vec<(&str, &[u8])> = seqs.iter().map(|s| (s.id.as_str(), &s.symbols[..])).collect();
    common::write_records(&col_path, &recs, 60);
    let mut rc = Vec::new();
    for run in 0..2 {
        let prefix = dir.join(format!("c5_{run}"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_gdc2"))
            .args(["compress", "--threads", "1", "-r"])
            .arg(&ref_path)
            .arg("-o")
            .arg(&prefix)
            .arg(&col_path)
            .output()
            .unwrap();
        if !status.status.success() {
            return fail(format!("compress exited with {}", status.status));
        }
        rc.push(std::fs::read(prefix.with_extension("gdc2_rc")).unwrap());
    }
    if rc[0] == rc[1] {
        pass(format!(
            "two --threads 1 runs give identical {}-byte rc files",
            rc[0].len()
        ))
    } else {
        fail("rc files differ between runs".into())
    }
}

/// Builds elements one at a time from the encoder's own predictions so each
/// lands on the requested field value.
fn criterion_6() -> Outcome {
    // independent table of expected classes
    let l1_pos_cases: [(i64, usize); 5] = [(0, 0), (63, 1), (-63, 1), (64, 2), (-64, 2)];
    let l1_len_cases: [(u64, usize); 4] = [(256, 0), (257, 1), (65_792, 1), (65_793, 2)];
    let l2_pos_cases: [(i64, usize); 9] = [
        (0, 0),
        (15, 1),
        (-15, 1),
        (16, 2),
        (-16, 2),
        (255, 2),
        (-255, 2),
        (256, 3),
        (-256, 3),
    ];
    let l2_len_cases: [(u64, usize); 8] = [
        (16, 0),
        (17, 1),
        (48, 1),
        (49, 2),
        (176, 2),
        (177, 3),
        (432, 3),
        (433, 4),
    ];
    let ids: [(u32, (u8, u8)); 4] = [(1, (0, 1)), (255, (0, 255)), (256, (1, 0)), (300, (1, 44))];

    for (v, class) in l1_pos_cases {
        let c = l1_pos::classify(v).unwrap();
        if c.class != class || l1_pos::restore(c.class, c.payload()) != v {
            return fail(format!("relative position {v}: class {}", c.class));
        }
    }
    for (v, class) in l1_len_cases {
        let c = l1_len::classify(v).unwrap();
        if c.class != class || l1_len::restore(c.class, c.payload()) != v {
            return fail(format!("level-1 length {v}: class {}", c.class));
        }
    }
    for (v, class) in l2_pos_cases {
        let c = l2_pos::classify(v).unwrap();
        if c.class != class || l2_pos::restore(c.class, c.payload()) != v {
            return fail(format!("level-2 difference {v}: class {}", c.class));
        }
    }
    for (v, class) in l2_len_cases {
        let c = l2_len::classify(v).unwrap();
        if c.class != class || l2_len::restore(c.class, c.payload()) != v {
            return fail(format!("level-2 length {v}: class {}", c.class));
        }
    }
    for (id, parts) in ids {
        if l2_id::split(id).unwrap() != parts || l2_id::join(parts.0, parts.1) != id {
            return fail(format!("id {id}"));
        }
    }

    // streams 1..=300; the ones matched into are long runs of 100-symbol matches
    let long_ids: Vec<u32> = (1..=40).chain([255, 256, 300]).collect();
    let mut store = StreamStore::new();
    for seq in 1..=300u32 {
        let n = if long_ids.contains(&seq) { 8000 } else { 1 };
        let tuples = (0..n)
            .map(|k| L1Tuple::Match {
                pos: k * 100 + 1,
                len: 100,
            })
            .collect();
        store.push(seq, tuples).unwrap();
    }
    let mut enc = SequenceEncoder::new(&store);
    let mut elems = Vec::new();
    let mut push = |enc: &mut SequenceEncoder, e: L2Element| {
        enc.encode(&e).unwrap();
        elems.push(e);
    };
    push(
        &mut enc,
        L2Element::Tuple(L1Tuple::Match {
            pos: 1_000_000,
            len: 10,
        }),
    );
    for (rel, _) in l1_pos_cases {
        let pos = enc.state().predict_l1_pos() as i64 - rel;
        push(
            &mut enc,
            L2Element::Tuple(L1Tuple::Match {
                pos: pos as u32,
                len: 5,
            }),
        );
    }
    for (len, _) in l1_len_cases {
        push(
            &mut enc,
            L2Element::Tuple(L1Tuple::Match {
                pos: 7,
                len: len as u32,
            }),
        );
    }
    let mut fresh = 2u32..=40;
    let mut l2 = |enc: &mut SequenceEncoder, seq: u32, diff: i64, len: u64| -> Result<(), String> {
        let expected = enc.state().predict_l2_pos(seq, &store).unwrap() as i64;
        let pos = expected - diff;
        if pos < 1 || pos as u64 + len - 1 > 8000 {
            return Err(format!("test layout puts stream {seq} match at {pos}+{len}"));
        }
        let e = L2Element::Match2 {
            seq,
            pos: pos as u32,
            len: len as u32,
        };
        enc.encode(&e).map_err(|e| e.to_string())?;
        elems.push(e);
        Ok(())
    };
    for (diff, _) in l2_pos_cases {
        if let Err(e) = l2(&mut enc, fresh.next().unwrap(), diff, 3) {
            return fail(e);
        }
    }
    for (len, _) in l2_len_cases {
        if let Err(e) = l2(&mut enc, fresh.next().unwrap(), 0, len) {
            return fail(e);
        }
    }
    for (id, _) in ids {
        if let Err(e) = l2(&mut enc, id, 0, 2) {
            return fail(e);
        }
    }
    let bytes = enc.finish();
    let mut dec = SequenceDecoder::new(&bytes, &store);
    for (k, want) in elems.iter().enumerate() {
        match dec.decode() {
            Ok(got) if got == *want => {}
            other => return fail(format!("element {k}: {other:?}, want {want:?}")),
        }
    }
    // the framed stream path as well
    let framed = gdc2::codec::encode_stream(&elems, &store).unwrap();
    if decode_stream(&framed, &store).ok().as_ref() != Some(&elems) {
        return fail("framed stream round trip".into());
    }
    pass(format!(
        "{} boundary values classified and {} coded elements round-trip",
        30,
        elems.len()
    ))
}

fn criterion_7(dir: &Path) -> Outcome {
    let corpus = generate(&GenConfig {
        ref_len: 5_000_000,
        count: 100,
        snp_rate: 0.001,
        indel_rate: 0.0001,
        seed: 77,
        ..GenConfig::default()
    })
    .unwrap();
    let raw: usize = corpus.sequences.iter().map(Vec::len).sum();
    let seqs = corpus.sequences.into_iter().enumerate().map(|(i, s)| {
        let mut q = Sequence::new(format!("s{i}"), s);
        q.source_file = "big.fa".into();
        Ok(q)
    });
    let started = Instant::now();
    let (archive, _) = compress_sequences(&corpus.reference, seqs, 100, &params(4, 100), true).unwrap();
    let size = collection_bytes(&archive, dir, "c7");
    let secs = started.elapsed().as_secs_f64();
    let mbps = raw as f64 / 1e6 / secs;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let detail = format!(
        "{:.0} MB in {secs:.2} s = {mbps:.1} MB/s on {cores} core(s), 4 level-1 workers, ratio {:.0}; \
         target {C7_TARGET_MBPS} MB/s {}, floor {C7_FLOOR_MBPS} MB/s",
        raw as f64 / 1e6,
        raw as f64 / size as f64,
        if mbps >= C7_TARGET_MBPS { "met" } else { "missed" },
    );
    if mbps >= C7_FLOOR_MBPS {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_8(data: &C3Data, report_full: &CompressReport) -> Outcome {
    let caps = &report_full.tuple_index_capacities;
    let pow2 = caps.iter().all(|c| c.is_power_of_two()) && report_full.ref_index_capacity.is_power_of_two();
    let monotone = caps.windows(2).all(|w| w[0] <= w[1]);
    let mut steps: Vec<usize> = caps.clone();
    steps.dedup();
    // at 10% the table stops growing once the indexed streams are in
    let (_, partial) = compress_sequences(
        &data.reference,
        data.sequences.iter().cloned().map(Ok),
        100,
        &params(3, 10),
        true,
    )
    .unwrap();
    let frozen = partial.tuple_index_capacities[10..].windows(2).all(|w| w[0] == w[1]);
    let detail = format!(
        "reference table {}; level-2 capacity steps {:?}; frozen after ordinal 10 at 10%: {frozen}",
        report_full.ref_index_capacity, steps
    );
    if pow2 && monotone && steps.len() >= 3 && frozen {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut timed = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "{} criterion {name}: {} ({secs:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((name, o, secs));
    };
    let data = c3_corpus();
    let mut full_report = None;
    timed("1 losslessness", &mut criterion_1);
    timed("2 level-1 oracle", &mut criterion_2);
    timed("3 two-level benefit", &mut || {
        let (o, r) = criterion_3(&data, dir.path());
        full_report = Some(r);
        o
    });
    timed("4 single-sequence extraction", &mut || criterion_4(dir.path()));
    timed("5 determinism", &mut || criterion_5(dir.path()));
    timed("6 codec boundaries", &mut criterion_6);
    timed("7 throughput", &mut || criterion_7(dir.path()));
    timed("8 memory shape", &mut || {
        criterion_8(&data, full_report.as_ref().unwrap())
    });
    let failed = results.iter().filter(|(_, o, _)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

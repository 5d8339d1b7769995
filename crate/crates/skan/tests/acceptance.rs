//! Acceptance gate: ten end-to-end criteria, one pass/fail line each.
//! Each test prints `criterion N: PASS` on success; a failing assertion
//! names the criterion in its panic message.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skan::driver;
use skan::mnist::{self, CorruptionMap};
use skan_core::experiments::{subseed, EnvPreset};
use skan_core::homeostasis::{left_shift_neuron, right_shift_neuron, NormConfig};
use skan_core::params::{DrInitPolicy, LsbPolicy, NeuronParams, NormSignal};
use skan_core::stimulus::{compose_stream, gen_pattern, NoiseSpec, StimulusProgram};
use skan_core::{presets, stats, NeuronState};

fn pass(n: u32, detail: &str) {
    println!("criterion {n}: PASS — {detail}");
}

// ---------------------------------------------------------------------------
// 1. Kernel arithmetic against a closed-form ramp oracle
// ---------------------------------------------------------------------------

/// Closed-form triangular ramp: a spike accepted at step `t` yields
/// r(t + k - 1) = min(k * dr_int, w) while rising (K = ceil(w / dr_int)
/// steps) and then w - j * dr_int floored at zero for another K steps;
/// spikes landing inside that busy interval are ignored.
fn ramp_oracle(spikes: &[bool], w: u32, dr: u32, f: u32) -> Vec<u32> {
    let len = spikes.len();
    let dr_int = (dr >> f).max(1);
    let k = w.div_ceil(dr_int) as usize;
    let mut r = vec![0u32; len];
    let mut t = 0usize;
    while t < len {
        if spikes[t] {
            for i in 1..=k {
                if t + i - 1 < len {
                    r[t + i - 1] = ((i as u64 * dr_int as u64).min(w as u64)) as u32;
                }
            }
            for j in 1..=k {
                if t + k - 1 + j < len {
                    r[t + k - 1 + j] = w.saturating_sub(j as u32 * dr_int);
                }
            }
            t += 2 * k;
        } else {
            t += 1;
        }
    }
    r
}

#[test]
fn criterion_1_kernel_ramp_matches_oracle_exactly() {
    const F: u32 = 8;
    for case in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let w: u32 = rng.gen_range(1..=65535);
        let dr: u32 = rng.gen_range(1..=(4096 << F));
        let params = NeuronParams {
            n_synapses: 1,
            bit_width_b: 16,
            slope_frac_bits_f: F,
            w_rise: 1,
            w_fall: 1,
            slope_step_ddr: 1,
            slope_min: 1,
            slope_max: 4096 << F,
            theta_rise: 1,
            theta_fall: 1,
            theta_min: 1,
            theta_init: u64::MAX / 4, // pulse never fires: pure kernel arithmetic
            w_init: w,
            dr_init_policy: DrInitPolicy::Uniform(dr),
            lsb_policy: LsbPolicy::ZeroedLsbHigh,
            norm_signal: NormSignal::MaxW,
            adaptive_weights: false,
        };
        params.validate().unwrap();
        let spikes: Vec<bool> = (0..300).map(|_| rng.gen_bool(0.1)).collect();
        let expected = ramp_oracle(&spikes, w, dr, F);

        let mut state = NeuronState::new(&params, &mut rng);
        for (t, &u) in spikes.iter().enumerate() {
            state.step(&[u], &params).unwrap();
            assert_eq!(
                state.synapses[0].r, expected[t],
                "criterion 1: FAIL — case {case} diverges from ramp oracle at step {t} \
                 (w={w}, dr={dr})"
            );
        }
    }
    pass(1, "1000 seeded single-synapse traces equal the closed-form ramp");
}

// ---------------------------------------------------------------------------
// 2. Noise-free tuning collapses the pulse and aligns the kernel apexes
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_tuning_reaches_unit_pulse_within_30_presentations() {
    for seed in 0..3u64 {
        let trace = driver::run_tuning(seed, 40);
        let hit = trace.rows.iter().find(|r| {
            r.presentation <= 30 && (1..=2).contains(&r.pulse_width) && r.peak_spread <= 1
        });
        assert!(
            hit.is_some(),
            "criterion 2: FAIL — seed {seed} never reached pulse width <= 2 with apex \
             spread <= 1 within 30 presentations: {:?}",
            trace.rows
        );
    }
    pass(2, "pulse width <= 2 and apex spread <= 1 within 30 presentations, 3 seeds");
}

// ---------------------------------------------------------------------------
// 3. Weight-update conformance: flag-gated constant deltas only
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_weight_deltas_and_flag_resets_conform() {
    let params = NeuronParams {
        n_synapses: 8,
        w_rise: 4096,
        w_fall: 256,
        dr_init_policy: DrInitPolicy::SeededRandom,
        ..NeuronParams::default()
    };
    params.validate().unwrap();
    let w_max = params.w_max();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut state = NeuronState::new(&params, &mut rng);

    let (mut rises, mut falls) = (0u64, 0u64);
    for t in 0..100_000u64 {
        let inputs: Vec<bool> = (0..params.n_synapses).map(|_| rng.gen_bool(0.02)).collect();
        let prev_w: Vec<u32> = state.synapses.iter().map(|s| s.w).collect();
        let prev_flag: Vec<bool> = state.synapses.iter().map(|s| s.d_flag).collect();
        let events = state.step(&inputs, &params).unwrap();
        let edge = events.s_fell || events.sum_fell;

        for (i, syn) in state.synapses.iter().enumerate() {
            let delta = syn.w as i64 - prev_w[i] as i64;
            let ok = delta == 0
                || delta == params.w_rise as i64
                || delta == -(params.w_fall as i64)
                || (syn.w == w_max && delta > 0 && delta < params.w_rise as i64)
                || (syn.w == 0 && delta < 0 && delta > -(params.w_fall as i64));
            assert!(
                ok,
                "criterion 3: FAIL — synapse {i} weight delta {delta} at step {t} is not \
                 in {{+w_rise, -w_fall, 0}} (or a register-boundary clip)"
            );
            if delta != 0 {
                assert!(
                    edge && (prev_flag[i] || inputs[i]),
                    "criterion 3: FAIL — weight changed at step {t} without an edge event \
                     and a set flag"
                );
                if delta > 0 {
                    rises += 1;
                } else {
                    falls += 1;
                }
            }
            if prev_flag[i] && !syn.d_flag {
                assert!(
                    edge,
                    "criterion 3: FAIL — flag {i} cleared at step {t} without a pulse \
                     falling edge or membrane zero-return"
                );
            }
        }
    }
    assert!(rises > 100 && falls > 100, "criterion 3: FAIL — test exercised too few updates");
    pass(3, &format!("100k steps, {rises} rises / {falls} falls, all flag-gated"));
}

// ---------------------------------------------------------------------------
// 4. Shift normalization error versus the division oracle across bit widths
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_norm_error_shrinks_with_bit_width() {
    let bits = [4u32, 6, 8, 10, 12, 16];
    let rows = driver::run_normcheck(&bits, 30, 800);
    let median_of = |b: u32, p: LsbPolicy, f: fn(&skan_core::experiments::NormReplayRow) -> f64| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.bit_width == b && r.lsb_policy == p)
            .map(f)
            .collect();
        stats::median(&v)
    };

    let zeroed: Vec<f64> = bits
        .iter()
        .map(|&b| median_of(b, LsbPolicy::ZeroedLsbHigh, |r| r.rms_error))
        .collect();
    for w in zeroed.windows(2) {
        assert!(
            w[1] < w[0],
            "criterion 4: FAIL — median rms error not strictly decreasing: {zeroed:?}"
        );
    }
    for &b in &bits[2..] {
        for p in [LsbPolicy::ZeroedLsbHigh, LsbPolicy::AllLsbHigh] {
            let rho = median_of(b, p, |r| r.spearman_rank_corr);
            assert!(
                rho >= 0.95,
                "criterion 4: FAIL — median Spearman {rho} < 0.95 at b={b} ({p:?})"
            );
        }
        let all = median_of(b, LsbPolicy::AllLsbHigh, |r| r.rms_error);
        let zero = median_of(b, LsbPolicy::ZeroedLsbHigh, |r| r.rms_error);
        assert!(
            all <= 2.0 * zero,
            "criterion 4: FAIL — AllLsbHigh median {all} > 2x ZeroedLsbHigh {zero} at b={b}"
        );
    }
    pass(4, &format!("median rms {:?} strictly decreasing, rank corr >= 0.95 at b>=8", zeroed));
}

// ---------------------------------------------------------------------------
// 5. Standby shift pairs leave spike onsets essentially unchanged
// ---------------------------------------------------------------------------

fn onsets(inject: bool) -> (Vec<u64>, usize) {
    let params = presets::tuning_params();
    let n = params.n_synapses;
    let pattern = gen_pattern(n, presets::TUNING_WINDOW, subseed(7, 1));
    let program = StimulusProgram::repeat(40, presets::TUNING_WINDOW, subseed(7, 2));
    let raster = compose_stream(&program, &[pattern], &NoiseSpec::silent(n));

    let mut rng = ChaCha8Rng::seed_from_u64(subseed(7, 3));
    let mut state = NeuronState::new(&params, &mut rng);
    let cfg = NormConfig::from_params(&params);
    let mut onsets = Vec::new();
    let mut pairs = 0usize;
    raster.scan(|t, row| {
        if inject && state.is_standby() && t % 97 == 0 {
            right_shift_neuron(&mut state, &cfg);
            left_shift_neuron(&mut state, &cfg).unwrap();
            pairs += 1;
        }
        let was = state.s;
        state.step(row, &params).unwrap();
        if state.s && !was {
            onsets.push(t);
        }
    });
    (onsets, pairs)
}

#[test]
fn criterion_5_shift_pairs_preserve_spike_onsets() {
    let (base, _) = onsets(false);
    let (shifted, pairs) = onsets(true);
    assert!(pairs >= 10, "criterion 5: FAIL — only {pairs} shift pairs injected");
    assert_eq!(
        base.len(),
        shifted.len(),
        "criterion 5: FAIL — pulse count changed under shift pairs"
    );
    for (a, b) in base.iter().zip(&shifted) {
        assert!(
            a.abs_diff(*b) <= 1,
            "criterion 5: FAIL — onset moved from {a} to {b} (> 1 step)"
        );
    }
    pass(5, &format!("{} onsets within 1 step across {pairs} injected shift pairs", base.len()));
}

// ---------------------------------------------------------------------------
// 6. Three-synapse sweep: the noisy channel's weight decays with its rate
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_sweep_noisy_weight_monotone_and_clean_pair_matched() {
    let lambdas = [0.0, 0.25, 0.5, 1.0];
    let seeds: Vec<u64> = (0..10).collect();
    let rows = driver::run_sweep_grid(
        &lambdas,
        &seeds,
        &[NormSignal::MaxW, NormSignal::SumW],
    );
    for signal in ["maxw", "sumw"] {
        let mut w3 = Vec::new();
        for &l3 in &lambdas {
            let point = format!("lambda3={l3}");
            let at = |syn: usize| {
                rows.iter()
                    .find(|r| r.signal == signal && r.point == point && r.synapse == syn)
                    .expect("grid row present")
                    .mean_w
            };
            let (w1, w2) = (at(0), at(1));
            assert!(
                (w1 - w2).abs() <= 0.10 * w1.max(w2),
                "criterion 6: FAIL — clean weights differ by > 10% at {signal} {point}: \
                 {w1} vs {w2}"
            );
            w3.push(at(2));
        }
        for w in w3.windows(2) {
            assert!(
                w[1] <= w[0],
                "criterion 6: FAIL — noisy weight not monotone non-increasing ({signal}): {w3:?}"
            );
        }
    }
    pass(6, "noisy weight monotone non-increasing, clean pair within 10%, both signals");
}

// ---------------------------------------------------------------------------
// 7. Ramp environment: steady-state weights anti-correlate with noise rates
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_ramp_weights_anticorrelate_with_noise() {
    let seeds: Vec<u64> = (0..10).collect();
    let rows = driver::run_env_sweep(
        EnvPreset::Ramp,
        &seeds,
        &[NormSignal::MaxW, NormSignal::SumW],
    );
    let mut rhos = Vec::new();
    for signal in ["maxw", "sumw"] {
        let sel: Vec<&driver::SweepRow> = rows.iter().filter(|r| r.signal == signal).collect();
        let ws: Vec<f64> = sel.iter().map(|r| r.mean_w).collect();
        let ls: Vec<f64> = sel.iter().map(|r| r.lambda).collect();
        let rho = stats::spearman(&ws, &ls);
        assert!(
            rho <= -0.9,
            "criterion 7: FAIL — Spearman {rho} > -0.9 for {signal}"
        );
        rhos.push(rho);
    }
    pass(7, &format!("Spearman {rhos:?} <= -0.9 for both signals"));
}

// ---------------------------------------------------------------------------
// 8. Recognition error over the SNR grid, adaptive vs static arms
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_recognition_error_curves() {
    let seeds: Vec<u64> = (0..10).collect();
    let rows = driver::run_recognition_grid(false, &[8], &presets::RECOGNITION_SNR_GRID, &seeds);
    let mean: BTreeMap<(u64, bool), f64> = driver::mean_errors(&rows)
        .into_iter()
        .map(|(_, snr, adaptive, err)| ((snr.to_bits(), adaptive), err))
        .collect();
    let at = |snr: f64, adaptive: bool| mean[&(snr.to_bits(), adaptive)];

    // (a) both arms essentially perfect without noise
    for arm in [false, true] {
        let e = at(0.0, arm);
        assert!(e < 0.02, "criterion 8a: FAIL — error {e} >= 2% at zero noise (adaptive={arm})");
    }
    // (b) the adaptive arm wins at every rate >= 1
    for snr in [1.0, 2.0, 3.0, 4.0] {
        let (a, s) = (at(snr, true), at(snr, false));
        assert!(
            a < s,
            "criterion 8b: FAIL — adaptive {a} >= static {s} at noise rate {snr}"
        );
    }
    // (c) somewhere in the mid range the gap is categorical
    let gap = [0.5, 1.0, 2.0]
        .iter()
        .any(|&snr| at(snr, true) < 0.05 && at(snr, false) > 0.20);
    assert!(
        gap,
        "criterion 8c: FAIL — no mid-range rate with adaptive < 5% while static > 20%"
    );
    // (d) the bump-visible preset elevates error at the lowest nonzero rate
    let bump_rows = driver::run_recognition_grid(true, &[8], &[0.25, 1.0], &seeds);
    let bump: BTreeMap<u64, f64> = driver::mean_errors(&bump_rows)
        .into_iter()
        .filter(|&(_, _, adaptive, _)| adaptive)
        .map(|(_, snr, _, err)| (snr.to_bits(), err))
        .collect();
    let (low, mid) = (bump[&0.25f64.to_bits()], bump[&1.0f64.to_bits()]);
    assert!(
        low > mid,
        "criterion 8d: FAIL — no low-noise bump: error {low} at 0.25 <= {mid} at 1.0"
    );
    pass(
        8,
        &format!(
            "zero-noise {:.3}/{:.3}, adaptive wins at rate >= 1, bump {low:.3} > {mid:.3}",
            at(0.0, false),
            at(0.0, true)
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. Image feature learning disables exactly the corrupted pixels
// ---------------------------------------------------------------------------

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

#[test]
fn criterion_9_feature_learning_disables_corrupted_pixels() {
    let (images, labels) = mnist::locate(&data_dir()).expect("bundled dataset present");
    let set = mnist::load_pair(&images, &labels).unwrap();
    let zeros = mnist::filter_label(&set, 0);
    assert!(zeros.images.len() > 500, "criterion 9: FAIL — too few zero images");

    let map = CorruptionMap::random(784, 40, presets::IMAGE_LAMBDA_BAND, subseed(0, 30));
    let (_, summary) = driver::run_feature(&zeros.images, &map, 3000, 0);

    assert_eq!(
        summary.corrupted_disabled, 40,
        "criterion 9: FAIL — only {}/40 corrupted pixels disabled",
        summary.corrupted_disabled
    );
    let last = summary.last_corrupted_disable.unwrap();
    assert!(
        last < 1000,
        "criterion 9: FAIL — last corrupted pixel disabled at image {last} (>= 1000)"
    );
    assert_eq!(
        summary.clean_disabled, 0,
        "criterion 9: FAIL — {} clean pixels disabled",
        summary.clean_disabled
    );
    assert!(
        summary.slope_intensity_pearson <= -0.5,
        "criterion 9: FAIL — slope/intensity Pearson {} > -0.5",
        summary.slope_intensity_pearson
    );
    pass(
        9,
        &format!(
            "40/40 corrupted disabled by image {last}, 0 clean disabled, Pearson {:.3}",
            summary.slope_intensity_pearson
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. Byte-identical reruns for every subcommand
// ---------------------------------------------------------------------------

fn run_cli(out: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_skan"))
        .args(["--seed", "5", "--out"])
        .arg(out)
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .status()
        .expect("spawn skan binary");
    assert!(status.success(), "criterion 10: FAIL — `skan {args:?}` exited nonzero");
}

fn collect_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_10_every_subcommand_is_byte_deterministic() {
    let data = data_dir().canonicalize().unwrap();
    let data_arg = data.to_str().unwrap();
    // fetch-data must find every file already present or it would hit the network
    let fetch_dir = tempfile::tempdir().unwrap();
    for name in [
        "train-images-idx3-ubyte.gz",
        "train-labels-idx1-ubyte.gz",
        "t10k-images-idx3-ubyte.gz",
        "t10k-labels-idx1-ubyte.gz",
    ] {
        std::fs::write(fetch_dir.path().join(name), b"present").unwrap();
    }
    let fetch_arg = fetch_dir.path().to_str().unwrap().to_string();

    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--presentations", "40", "--plot"],
        vec!["normcheck", "--bits", "4,8", "--seeds", "3", "--updates", "300"],
        vec!["sweep-noise", "--lambda3", "0,0.5", "--seeds", "2", "--signal", "maxw"],
        vec!["recognition", "--noisy", "8", "--snrs", "1", "--seeds", "1"],
        vec!["--data-dir", data_arg, "mnist", "--train", "120"],
        vec!["--data-dir", &fetch_arg, "fetch-data"],
    ];
    for args in &commands {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_cli(a.path(), args);
        run_cli(b.path(), args);
        let (fa, fb) = (collect_files(a.path()), collect_files(b.path()));
        assert!(
            args[0] == "--data-dir" && args.contains(&"fetch-data") || !fa.is_empty(),
            "criterion 10: FAIL — `skan {args:?}` produced no output files"
        );
        assert_eq!(
            fa.keys().collect::<Vec<_>>(),
            fb.keys().collect::<Vec<_>>(),
            "criterion 10: FAIL — file sets differ for `skan {args:?}`"
        );
        for (rel, bytes) in &fa {
            assert_eq!(
                bytes,
                &fb[rel],
                "criterion 10: FAIL — {} differs between reruns of `skan {args:?}`",
                rel.display()
            );
        }
    }
    pass(10, "all six subcommands byte-identical across paired reruns");
}

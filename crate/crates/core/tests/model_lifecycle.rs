//! Training, checkpointing, evaluation and MC-dropout bands on a tiny
//! synthetic campaign.

use std::sync::OnceLock;

use efem_core::fuzzy::NEUTRAL_SCORE;
use efem_core::harness::{
    evaluate_model, model_inputs, prepare_data, train_model, zoo_entry, ModelMeta, PreparedData, RunConfig,
    TrainedModel,
};
use efem_core::nn::{CellKind, Checkpoint, DropoutMode, Network, NetworkConfig, RngState};
use efem_core::uncertainty::{confidence_band, mc_dropout_predict, postprocess, ConfidenceBand, PredictiveEnsemble};
use ndarray::{s, Array3, Array4, Axis};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TINY: &str = "\
seed = 7
scenario.steps = 300
window.len = 10
window.horizon = 8
window.stride = 20
window.targets = 2
model.hidden = 8
model.linear_dim = 12
train.epochs = 4
train.batch_size = 8
";

fn tiny() -> &'static (RunConfig, PreparedData) {
    static DATA: OnceLock<(RunConfig, PreparedData)> = OnceLock::new();
    DATA.get_or_init(|| {
        let cfg = RunConfig::parse(TINY).unwrap();
        let data = prepare_data(&cfg).unwrap();
        (cfg, data)
    })
}

fn train(name: &str) -> TrainedModel {
    let (cfg, data) = tiny();
    train_model(&zoo_entry(name).unwrap(), &data.train, &data.val, cfg, &mut |_| {}).unwrap()
}

fn efem() -> &'static TrainedModel {
    static MODEL: OnceLock<TrainedModel> = OnceLock::new();
    MODEL.get_or_init(|| train("EFEM-BiLSTM"))
}

#[test]
fn training_is_deterministic() {
    let a = train("Res-LSTM");
    let b = train("Res-LSTM");
    assert_eq!(a.log, b.log);
    assert_eq!(a.checkpoint.to_bytes(), b.checkpoint.to_bytes());
}

#[test]
fn feedback_score_starts_neutral_and_stays_in_range() {
    let log = &efem().log;
    assert_eq!(log[0].score, Some(NEUTRAL_SCORE));
    for r in log {
        let s = r.score.unwrap();
        assert!((0.0..=1.0).contains(&s));
        assert!(r.val_soft_dtw.is_some() && r.val_tdi.is_some());
    }
    let meta = efem().meta();
    assert!(meta.score.is_some());
    assert_eq!(meta.epochs, log.len());
}

#[test]
fn mse_models_carry_no_score() {
    let t = train("LSTM");
    assert!(t.log.iter().all(|r| r.score.is_none() && r.val_soft_dtw.is_none()));
}

#[test]
fn checkpoint_round_trip_preserves_everything() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("efem.ckpt");
    let ckpt = &efem().checkpoint;
    ckpt.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();

    assert_eq!(back.network.config(), ckpt.network.config());
    assert_eq!(back.network.params().step, ckpt.network.params().step);
    for (a, b) in back.network.params().params.iter().zip(&ckpt.network.params().params) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.value, b.value);
        assert_eq!(a.m, b.m);
        assert_eq!(a.v, b.v);
    }
    assert_eq!(back.meta, ckpt.meta);
    assert_eq!(ModelMeta::from_checkpoint(&back).unwrap(), efem().meta());

    // The restored generator continues the original stream.
    let mut original = ckpt.rng.as_ref().unwrap().restore().unwrap();
    let mut restored = back.rng.as_ref().unwrap().restore().unwrap();
    for _ in 0..16 {
        assert_eq!(original.next_u64(), restored.next_u64());
    }
    assert_eq!(back.to_bytes(), ckpt.to_bytes());
}

#[test]
fn rng_state_survives_mid_stream() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    rng.set_stream(9);
    for _ in 0..37 {
        rng.next_u32();
    }
    let mut restored = RngState::capture(&rng).restore().unwrap();
    assert_eq!(rng.random::<u64>(), restored.random::<u64>());
}

#[test]
fn corrupted_checkpoints_are_rejected() {
    let bytes = efem().checkpoint.to_bytes();
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(Checkpoint::from_bytes(&bad_magic).is_err());
    assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 8]).is_err());
}

#[test]
fn evaluation_is_pure() {
    let (_, data) = tiny();
    let names = data.forecast_names();
    let a = evaluate_model(&efem().checkpoint, &data.test, &names).unwrap();
    let b = evaluate_model(&efem().checkpoint, &data.test, &names).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.channels.len(), 2);
    let mean_mse = a.channels.iter().map(|c| c.metrics.mse).sum::<f64>() / 2.0;
    assert!((a.pooled.mse - mean_mse).abs() < 1e-12);
}

#[test]
fn eval_forward_is_a_pure_function() {
    let (_, data) = tiny();
    let net = &efem().checkpoint.network;
    let x = model_inputs(data.test.inputs.view(), efem().meta().score);
    let a = net.predict(x.view(), DropoutMode::Eval, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = net.predict(x.view(), DropoutMode::Eval, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert_eq!(a, b);
}

fn band_of(passes: &Array4<f64>) -> ConfidenceBand {
    confidence_band(&PredictiveEnsemble {
        passes: passes.clone(),
        seed: 0,
    })
}

#[test]
fn mc_bands_have_width_and_commute_with_postprocessing() {
    let (_, data) = tiny();
    let net = &efem().checkpoint.network;
    let x = model_inputs(data.test.inputs.view(), efem().meta().score);
    let ens = mc_dropout_predict(net, x.view(), 40, 11).unwrap();
    let band = confidence_band(&ens);
    let mut widths: Vec<f64> = (&band.upper - &band.lower).iter().copied().collect();
    widths.sort_by(f64::total_cmp);
    assert!(widths[widths.len() / 2] > 0.0);

    let stats = &data.stats;
    let targets = &data.forecast_channels;
    let mut physical = ens.passes.clone();
    for (k, &t) in targets.iter().enumerate() {
        physical
            .slice_mut(s![.., .., .., k])
            .mapv_inplace(|v| stats.mu[t] + v * stats.sigma[t]);
    }
    let direct = band_of(&physical);
    let mapped = postprocess(&band, stats, targets).unwrap();
    for (a, b) in [(&direct.mean, &mapped.mean), (&direct.lower, &mapped.lower), (&direct.upper, &mapped.upper)] {
        for (p, q) in a.iter().zip(b.iter()) {
            assert!((p - q).abs() <= 1e-9 * (1.0 + q.abs()), "{p} vs {q}");
        }
    }
}

#[test]
fn mc_ensemble_does_not_depend_on_thread_count() {
    let (_, data) = tiny();
    let net = &efem().checkpoint.network;
    let x = model_inputs(data.test.inputs.view(), efem().meta().score);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let threaded = pool.install(|| mc_dropout_predict(net, x.view(), 12, 5).unwrap());
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| mc_dropout_predict(net, x.view(), 12, 5).unwrap());
    assert_eq!(threaded, single);
}

#[test]
fn mc_mean_settles_as_passes_grow() {
    let (_, data) = tiny();
    let net = &efem().checkpoint.network;
    let x = model_inputs(data.test.inputs.slice(s![..2, .., ..]), efem().meta().score);
    let small = mc_dropout_predict(net, x.view(), 50, 21).unwrap();
    let large = mc_dropout_predict(net, x.view(), 200, 22).unwrap();
    let (bs, bl) = (confidence_band(&small), confidence_band(&large));
    // Half-width / 1.96 is the per-element spread of a single pass.
    let sigma = (&bl.upper - &bl.lower) / (2.0 * 1.96);
    let mut outliers = 0;
    for ((a, b), sd) in bs.mean.iter().zip(bl.mean.iter()).zip(sigma.iter()) {
        // Standard error of the difference of the two means.
        let se = sd * (1.0 / 50.0 + 1.0 / 200.0_f64).sqrt();
        outliers += usize::from((a - b).abs() > 4.0 * se + 1e-12);
    }
    assert!(outliers * 100 <= bs.mean.len(), "{outliers} of {} means moved more than 4 se", bs.mean.len());
}

#[test]
fn bidirectional_width_and_finite_activations() {
    let cfg = NetworkConfig {
        input_dim: 3,
        window_len: 12,
        horizon: 4,
        n_targets: 2,
        cell: CellKind::Lstm,
        hidden_dim: 5,
        n_layers: 2,
        bidirectional: true,
        residual_head: true,
        input_skip: true,
        linear_dim: 6,
        n_linear: 2,
        proj_dim: 2,
        dropout_rate: 0.2,
        seed: 1,
    };
    let net = Network::new(cfg.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let seq = Array3::from_shape_fn((1, 12, 3), |_| rng.random_range(-10.0..10.0));
    let h = net.recurrent_outputs(seq.index_axis(Axis(0), 0)).unwrap();
    assert_eq!(h.dim(), (12, 2 * 5));
    assert!(h.iter().all(|v| v.is_finite()));
    let out = net.predict(seq.view(), DropoutMode::Mc, &mut rng).unwrap();
    assert!(out.iter().all(|v| v.is_finite()));
}

#[test]
fn training_loss_falls_well_below_its_start() {
    // Dropout keeps the late loss noisy, so compare ten-epoch averages at
    // both ends rather than demanding a monotone curve.
    let (cfg, data) = tiny();
    let mut cfg = cfg.clone();
    cfg.epochs = 40;
    let t = train_model(&zoo_entry("BiLSTM").unwrap(), &data.train, &data.val, &cfg, &mut |_| {}).unwrap();
    let losses: Vec<f64> = t.log.iter().map(|r| r.train_loss).collect();
    let early = losses[..10].iter().sum::<f64>() / 10.0;
    let late = losses[30..].iter().sum::<f64>() / 10.0;
    assert!(late < 0.5 * early, "{early} -> {late}");
}

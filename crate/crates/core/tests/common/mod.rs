#![allow(dead_code)]

use hdbnn::bnn::{Activation, Architecture, BnnModel, ConvSpec, Layer, Model};
use hdbnn::harness::{Corpus, Sample, Split};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOPICS: [(&str, [&str; 6]); 3] = [
    ("Weather", ["rain", "sunny", "forecast", "umbrella", "storm", "temperature"]),
    ("Travel", ["train", "ticket", "station", "departure", "platform", "journey"]),
    ("Food", ["pizza", "dinner", "recipe", "restaurant", "hungry", "pasta"]),
];
const FILLER: [&str; 8] = ["please", "tell", "me", "about", "the", "today", "now", "what"];

/// Three separable intents built from topic words plus filler.
pub fn synthetic_corpus(train_per_class: usize, test_per_class: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for (intent, words) in TOPICS {
        for i in 0..train_per_class + test_per_class {
            let mut text = Vec::new();
            for _ in 0..rng.gen_range(3..7) {
                if rng.gen_bool(0.6) {
                    text.push(words[rng.gen_range(0..words.len())]);
                } else {
                    text.push(FILLER[rng.gen_range(0..FILLER.len())]);
                }
            }
            text.push(words[rng.gen_range(0..words.len())]);
            let split = if i < train_per_class { Split::Train } else { Split::Test };
            samples.push(Sample { text: text.join(" "), intent: intent.to_string(), split });
        }
    }
    Corpus::new("synthetic", samples).unwrap()
}

/// Small random sign-activated architecture that accepts `d_in` inputs.
pub fn random_arch(rng: &mut ChaCha8Rng) -> Architecture {
    loop {
        let d_in = rng.gen_range(8..96);
        let convs = (0..rng.gen_range(0..3))
            .map(|_| ConvSpec { filters: rng.gen_range(1..12), kernel: rng.gen_range(1..5), pool: rng.gen_range(1..4) })
            .collect();
        let hidden = (0..rng.gen_range(0..3)).map(|_| rng.gen_range(1..20)).collect();
        let arch = Architecture {
            d_in,
            num_classes: rng.gen_range(2..6),
            convs,
            hidden,
            batchnorm: rng.gen_bool(0.8),
            dropout: 0.0,
            activation: Activation::Sign,
            bn_momentum: 0.1,
            bn_epsilon: 1e-5,
        };
        if arch.validate().is_ok() {
            return arch;
        }
    }
}

/// Overwrites batch-norm parameters and statistics with random values,
/// including negative and zero scales.
pub fn randomize_bn(model: &mut BnnModel, rng: &mut ChaCha8Rng) {
    for layer in model.layers_mut() {
        if let Layer::BatchNorm(bn) = layer {
            for c in 0..bn.channels() {
                bn.gamma[c] = match rng.gen_range(0..10) {
                    0 => 0.0,
                    1..=3 => -rng.gen_range(0.05..3.0),
                    _ => rng.gen_range(0.05..3.0),
                };
                bn.beta[c] = rng.gen_range(-2.0..2.0);
                bn.running_mean[c] = rng.gen_range(-6.0..6.0);
                bn.running_var[c] = rng.gen_range(0.01..20.0);
            }
            bn.initialized = true;
        }
    }
}

pub fn random_model(rng: &mut ChaCha8Rng) -> BnnModel {
    let arch = random_arch(rng);
    let mut model = Model::new(arch, rng.gen()).unwrap();
    randomize_bn(&mut model, rng);
    model
}

mod common;

use hdbnn::bnn::{predict, train, Activation, Architecture, Model, TrainConfig};
use hdbnn::hdcore::{BitVector, HdVector};
use hdbnn::packrt::{export_model, load_model, PackError, PACKED_VERSION};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_bits(rng: &mut ChaCha8Rng, d: usize) -> BitVector {
    BitVector::from_signs(d, (0..d).map(|_| rng.gen_bool(0.5)))
}

#[test]
fn byte_round_trip_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..30 {
        let packed = export_model(&common::random_model(&mut rng)).unwrap();
        let bytes = packed.to_bytes();
        let back = load_model(&bytes).unwrap();
        assert_eq!(back, packed);
        assert_eq!(back.to_bytes(), bytes);
    }
}

#[test]
fn every_truncation_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bytes = export_model(&common::random_model(&mut rng)).unwrap().to_bytes();
    for cut in 0..bytes.len() {
        let err = load_model(&bytes[..cut]).unwrap_err();
        assert!(matches!(err, PackError::CorruptLength(_) | PackError::BadMagic), "cut {cut}: {err:?}");
    }
    for cut in 4..bytes.len() {
        assert!(matches!(load_model(&bytes[..cut]), Err(PackError::CorruptLength(_))));
    }
}

#[test]
fn header_and_trailer_are_checked() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bytes = export_model(&common::random_model(&mut rng)).unwrap().to_bytes();

    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    assert_eq!(load_model(&bad), Err(PackError::BadMagic));

    let mut bad = bytes.clone();
    bad[4..6].copy_from_slice(&(PACKED_VERSION + 1).to_le_bytes());
    assert_eq!(load_model(&bad), Err(PackError::FormatVersionMismatch { expected: PACKED_VERSION, found: PACKED_VERSION + 1 }));

    let mut bad = bytes;
    bad.push(0);
    assert!(matches!(load_model(&bad), Err(PackError::CorruptLength(_))));
}

#[test]
fn untrained_and_real_valued_models_are_refused() {
    let arch = Architecture::text_lenet(512, 3, Activation::Sign);
    assert_eq!(export_model(&Model::new(arch, 0).unwrap()), Err(PackError::UntrainedModel));

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut arch = common::random_arch(&mut rng);
    arch.activation = Activation::Relu;
    let mut model = Model::new(arch, 0).unwrap();
    common::randomize_bn(&mut model, &mut rng);
    assert_eq!(export_model(&model), Err(PackError::NotBinarized));
}

#[test]
fn wrong_input_width_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = common::random_model(&mut rng);
    let packed = export_model(&model).unwrap();
    let d = model.d_in();
    assert_eq!(packed.infer(&BitVector::zeros(d + 1)).unwrap_err(), PackError::DimMismatch { expected: d, found: d + 1 });
}

#[test]
fn trained_model_agrees_with_float_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = 64;
    let protos: Vec<BitVector> = (0..3).map(|_| random_bits(&mut rng, d)).collect();
    let data: Vec<(HdVector, usize)> = (0..60)
        .map(|i| {
            let c = i % 3;
            let noisy = BitVector::from_signs(d, (0..d).map(|j| protos[c].bit(j) ^ rng.gen_bool(0.1)));
            (HdVector::Binary(noisy), c)
        })
        .collect();
    let mut arch = Architecture::text_lenet(d, 3, Activation::Sign);
    arch.convs.truncate(1);
    arch.convs[0].filters = 8;
    arch.hidden = vec![16];
    arch.dropout = 0.0;
    let mut model = Model::new(arch, 7).unwrap();
    train(&mut model, &data, &TrainConfig { epochs: 3, ..TrainConfig::default() }).unwrap();
    let packed = load_model(&export_model(&model).unwrap().to_bytes()).unwrap();
    for _ in 0..100 {
        let x = random_bits(&mut rng, d);
        let out = packed.infer(&x).unwrap();
        let input = HdVector::Binary(x);
        assert_eq!(out.label, predict(&model, &input).unwrap().0);
        assert_eq!(out.logits, model.logits(&input).unwrap());
    }
}

#[test]
fn full_size_lenet_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..2 {
        let mut model = Model::new(Architecture::text_lenet(512, 4, Activation::Sign), seed).unwrap();
        common::randomize_bn(&mut model, &mut rng);
        let packed = export_model(&model).unwrap();
        for _ in 0..20 {
            let x = random_bits(&mut rng, 512);
            let out = packed.infer(&x).unwrap();
            assert_eq!(out.logits, model.logits(&HdVector::Binary(x)).unwrap());
        }
    }
}

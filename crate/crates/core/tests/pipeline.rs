use sparsequbo::coding::{build_qubo, objective, patch_image, reconstruct_patch, unpatch, Dictionary, QuboMode};
use sparsequbo::io::{load_idx, persist_run, read_pgm, write_pgm, Manifest, RunInfo};
use sparsequbo::learn::{train, LearnConfig};
use sparsequbo::qubo::{load_qubo, save_qubo};
use sparsequbo::samplers::{brute_force, BruteForce, SaConfig, Sampler, SamplerRequest, SimulatedAnnealing};

/// Two 28x28 images of vertical bars in IDX layout.
fn idx_fixture() -> Vec<u8> {
    let mut bytes = 0x0803u32.to_be_bytes().to_vec();
    for d in [2u32, 28, 28] {
        bytes.extend(d.to_be_bytes());
    }
    for img in 0..2 {
        for _r in 0..28 {
            for c in 0..28 {
                bytes.push(if (c / 7 + img) % 2 == 0 { 200 } else { 0 });
            }
        }
    }
    bytes
}

#[test]
fn idx_to_patches_to_image() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("images.idx");
    std::fs::write(&path, idx_fixture()).unwrap();
    let tensor = load_idx(&path).unwrap();
    assert_eq!(tensor.len(), 2);
    let image = tensor.image(1).unwrap();
    let patches = patch_image(&image, 7).unwrap();
    assert_eq!(patches.len(), 16);
    assert_eq!(patches[0].values, vec![0.0; 49]);
    assert_eq!(unpatch(&patches).unwrap(), image);
}

#[test]
fn learn_code_and_reconstruct() {
    let mut bytes = idx_fixture();
    // Append a bright row band to the first image so there is more than one
    // patch type.
    for c in 0..28 {
        bytes[16 + 3 * 28 + c] = 255;
    }
    let image = sparsequbo::io::parse_idx(&bytes).unwrap().image(0).unwrap();
    let patches = patch_image(&image, 7).unwrap();
    let config = LearnConfig {
        p: 6,
        s_target: 0.3,
        lambda_init: 0.01,
        epochs: 15,
        reads: 1,
        seed: 3,
        ..LearnConfig::default()
    };
    let out = train(&patches, &config, &BruteForce).unwrap();
    let errors: Vec<f64> = out.trace.epochs.iter().map(|r| r.mean_error).collect();
    assert!(errors.last().unwrap() < &errors[0], "{errors:?}");

    let tmp = tempfile::tempdir().unwrap();
    let dict_path = tmp.path().join("dict.json");
    out.dictionary.save(&dict_path).unwrap();
    let dict = Dictionary::load(&dict_path).unwrap();
    assert_eq!(dict, out.dictionary);

    let sa = SimulatedAnnealing::new(SaConfig::default());
    let mut recon = Vec::new();
    for (k, x) in patches.iter().enumerate() {
        let q = build_qubo(x, &dict, out.lambda, QuboMode::Exact).unwrap();
        let qpath = tmp.path().join(format!("q{k}.coo"));
        save_qubo(&q, &qpath).unwrap();
        let q = load_qubo(&qpath).unwrap();
        let set = sa.sample(&SamplerRequest::new(&q, 20, k as u64)).unwrap();
        let best = &set.lowest().state;
        let exact = brute_force(&q).unwrap().energy;
        assert!((set.min_energy() - exact).abs() < 1e-9);
        assert!((objective(x, &dict, best, out.lambda).unwrap() - set.min_energy()).abs() < 1e-9);
        recon.push(reconstruct_patch(x, &dict, best).unwrap());
    }
    let image_out = unpatch(&recon).unwrap();
    let pgm = tmp.path().join("out/recon.pgm");
    write_pgm(&image_out, &pgm).unwrap();
    let back = read_pgm(&pgm).unwrap();
    assert_eq!((back.rows(), back.cols()), (28, 28));
    for (a, b) in back.pixels().iter().zip(image_out.pixels()) {
        assert!((a - b.clamp(0.0, 1.0)).abs() <= 0.5 / 255.0 + 1e-12);
    }
}

#[test]
fn persisted_dictionary_has_manifest() {
    let dict = Dictionary::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let manifest = persist_run(
        &dict,
        tmp.path(),
        &RunInfo::new("learn-dict", 5, serde_json::json!({"p": 2})),
    )
    .unwrap();
    assert_eq!(Manifest::load(tmp.path()).unwrap(), manifest);
    assert_eq!(manifest.run.seeds["master"], 5);
    let loaded = Dictionary::load(tmp.path().join("dictionary.json")).unwrap();
    assert_eq!(loaded, dict);
}

proptest::proptest! {
    #[test]
    fn dictionary_json_round_trip_is_exact(
        atoms in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 5), 1..6)
    ) {
        let dict = Dictionary::new(atoms).unwrap();
        proptest::prop_assert_eq!(Dictionary::from_json(&dict.to_json()).unwrap(), dict);
    }
}

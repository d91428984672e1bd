use rand::Rng;
use rand_distr::StandardNormal;
use sparsequbo::qubo::{BinaryState, IsingProblem, QuboProblem};
use sparsequbo::samplers::{brute_force, RandomSampler, SaConfig, Sampler, SamplerRequest, SimulatedAnnealing};
use sparsequbo::seed::rng_from;
use sparsequbo::strategies::{
    iterated_warm_start, qemc_chain, QemcConfig, ReverseAnnealing, ReverseScheduleConfig, WarmStartConfig,
};
use sparsequbo::synthetic::{instance, InstanceSpec};

fn reverse(s: f64) -> ReverseAnnealing {
    ReverseAnnealing::new(ReverseScheduleConfig {
        s,
        ..ReverseScheduleConfig::default()
    })
}

/// Sherrington-Kirkpatrick glass: many local minima, so memory of the start
/// is visible.
fn spin_glass(n: usize, seed: u64) -> QuboProblem {
    let mut rng = rng_from(seed, &[]);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w: f64 = rng.sample(StandardNormal);
            pairs.push(((i, j), w));
        }
    }
    IsingProblem::new(vec![0.0; n], pairs, 0.0).unwrap().to_qubo()
}

/// Mean overlap with `start` over several instances.
fn mean_overlap(sampler: &dyn Sampler, seeded: bool) -> f64 {
    let mut total = 0.0;
    for k in 0..8u64 {
        let q = spin_glass(16, 400 + k);
        let start = BinaryState::random(q.n(), &mut rng_from(k, &[9]));
        let mut request = SamplerRequest::new(&q, 100, k);
        if seeded {
            request = request.with_initial_state(start.clone());
        }
        total += sampler.sample(&request).unwrap().mean_overlap(&start);
    }
    total / 8.0
}

#[test]
fn reverse_anneal_memory_depends_on_s() {
    let fresh = mean_overlap(&SimulatedAnnealing::new(SaConfig::default()), false);
    let hot = mean_overlap(&reverse(0.02), true);
    let mid = mean_overlap(&reverse(0.5), true);
    let cold = mean_overlap(&reverse(0.98), true);
    assert!(
        (hot - 0.5).abs() < 0.05 && (hot - fresh).abs() < 0.05,
        "hot {hot} vs fresh {fresh}"
    );
    assert!(hot < mid && mid < cold, "{hot} {mid} {cold}");
}

#[test]
fn reverse_anneal_requires_initial_state() {
    let q = instance(&InstanceSpec::default(), 0).unwrap().qubo;
    assert!(reverse(0.5).sample(&SamplerRequest::new(&q, 1, 0)).is_err());
    assert!(reverse(1.0)
        .sample(&SamplerRequest::new(&q, 1, 0).with_initial_state(BinaryState::zeros(q.n())))
        .is_err());
}

#[test]
fn qemc_accounting_and_global_best() {
    let q = instance(&InstanceSpec::default(), 1).unwrap().qubo;
    for elitist in [false, true] {
        let config = QemcConfig {
            iterations: 12,
            batch: 7,
            seed: 4,
            elitist,
        };
        let trace = qemc_chain(&q, &RandomSampler, &reverse(0.3), &config, Some(0.3)).unwrap();
        assert_eq!(trace.steps.len(), 13);
        assert_eq!(trace.total_reads(), 13 * 7);
        assert!(trace.steps[0].seed_overlap.is_none());
        assert!(trace.steps[1..].iter().all(|s| s.seed_overlap.is_some()));
        let batch_min = trace
            .steps
            .iter()
            .map(|s| s.batch_min_energy)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(trace.best_energy, batch_min);
        assert_eq!(*trace.global_best_series().last().unwrap(), batch_min);
        let best = trace.best_state.as_ref().unwrap();
        assert!((q.energy(best).unwrap() - batch_min).abs() < 1e-12);
        if elitist {
            let inc = trace.incumbent_series();
            assert!(inc.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

#[test]
fn reverse_anneal_chain_finds_optimum() {
    let mut solved = 0;
    for k in 0..20u64 {
        let q = instance(&InstanceSpec::default(), 600 + k).unwrap().qubo;
        let ground = brute_force(&q).unwrap();
        let config = QemcConfig {
            iterations: 100,
            batch: 10,
            seed: k,
            elitist: false,
        };
        let trace = qemc_chain(&q, &RandomSampler, &reverse(0.5), &config, Some(0.5)).unwrap();
        if (trace.best_energy - ground.energy).abs() < 1e-9 {
            solved += 1;
        }
    }
    assert!(solved >= 16, "optimum reached on {solved}/20");
}

#[test]
fn warm_start_global_best_is_monotone() {
    let q = instance(&InstanceSpec::default(), 2).unwrap().qubo;
    let sa = SimulatedAnnealing::new(SaConfig {
        sweeps: 20,
        ..SaConfig::default()
    });
    let trace = iterated_warm_start(
        &q,
        &sa,
        &WarmStartConfig {
            iterations: 15,
            reads: 2,
            seed: 8,
        },
    )
    .unwrap();
    assert_eq!(trace.total_reads(), 30);
    let best = trace.global_best_series();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
    assert!(trace.steps.iter().all(|s| s.seed_overlap.is_some()));
}

#[test]
fn chains_are_reproducible() {
    let q = instance(&InstanceSpec::default(), 3).unwrap().qubo;
    let config = QemcConfig {
        iterations: 5,
        batch: 4,
        seed: 21,
        elitist: false,
    };
    let a = qemc_chain(&q, &RandomSampler, &reverse(0.7), &config, Some(0.7)).unwrap();
    let b = qemc_chain(&q, &RandomSampler, &reverse(0.7), &config, Some(0.7)).unwrap();
    assert_eq!(a.checksum(), b.checksum());
    let c = qemc_chain(
        &q,
        &RandomSampler,
        &reverse(0.7),
        &QemcConfig { seed: 22, ..config },
        Some(0.7),
    )
    .unwrap();
    assert_ne!(a.checksum(), c.checksum());
}

#[test]
fn failed_step_keeps_partial_trace() {
    let q = instance(&InstanceSpec::default(), 3).unwrap().qubo;
    let bad = ReverseAnnealing::new(ReverseScheduleConfig {
        s: 2.0,
        ..ReverseScheduleConfig::default()
    });
    let err = qemc_chain(
        &q,
        &RandomSampler,
        &bad,
        &QemcConfig {
            iterations: 3,
            batch: 2,
            seed: 0,
            elitist: false,
        },
        None,
    )
    .unwrap_err();
    assert_eq!(err.partial.steps.len(), 1);
    assert!(err.to_string().contains("1 completed"), "{err}");
}

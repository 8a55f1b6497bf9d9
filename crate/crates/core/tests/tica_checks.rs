use gafmtf::tica::network::window_topology;
use gafmtf::tica::{
    pretrain_network, Image, LayerShape, NetworkConfig, PatchSet, TicaConfig, TicaLayer, Topology,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-8;

fn small_topology() -> Topology {
    let shape = LayerShape {
        in_channels: 1,
        field: 3,
        maps: 2,
        tiling: 2,
    };
    window_topology(&shape, 2).unwrap()
}

fn random_patches(dim: usize, count: usize, seed: u64) -> PatchSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patches: Vec<Vec<f64>> = (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    PatchSet::from_vecs(dim, &patches).unwrap()
}

fn footprint_entries(t: &Topology) -> Vec<usize> {
    let q = t.inputs();
    (0..t.units())
        .flat_map(|u| t.footprint(u).indices().map(move |j| u * q + j).collect::<Vec<_>>())
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn gradient_matches_central_differences() {
    let topology = small_topology();
    let patches = random_patches(topology.inputs(), 20, 7);
    let entries = footprint_entries(&topology);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10 {
        let mut w: Vec<f64> = (0..topology.units() * topology.inputs())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        topology.localize(&mut w);
        let layer = TicaLayer::with_weights(topology.clone(), w.clone()).unwrap();
        let (_, grad) = layer.objective_and_gradient(&patches, EPS);
        let h = 1e-5;
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for &e in &entries {
            let mut plus = w.clone();
            plus[e] += h;
            let mut minus = w.clone();
            minus[e] -= h;
            let fp = TicaLayer::with_weights(topology.clone(), plus).unwrap().objective(&patches, EPS);
            let fm = TicaLayer::with_weights(topology.clone(), minus).unwrap().objective(&patches, EPS);
            numeric.push((fp - fm) / (2.0 * h));
            analytic.push(grad[e]);
        }
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&analytic).max(norm(&numeric));
        assert!(rel <= 1e-4, "trial {trial}: relative error {rel}");
        let outside = (0..grad.len()).filter(|i| !entries.contains(i));
        for i in outside {
            assert_eq!(grad[i], 0.0);
        }
    }
}

#[test]
fn objective_matches_direct_sum() {
    let topology = small_topology();
    let patches = random_patches(topology.inputs(), 12, 3);
    let layer = TicaLayer::initialize(topology, 5);
    let direct: f64 = patches.iter().map(|x| layer.activations(x, EPS).iter().sum::<f64>()).sum();
    let fast = layer.objective(&patches, EPS);
    assert!((direct - fast).abs() <= 1e-10 * direct.abs().max(1.0));
}

#[test]
fn pretraining_respects_constraints() {
    let topology = small_topology();
    let q = topology.inputs();
    let patches = random_patches(q, 64, 21);
    let mut layer = TicaLayer::initialize(topology.clone(), 9);
    let report = layer.pretrain(&patches, &TicaConfig::default()).unwrap();
    let hist = &report.objective_history;
    assert_eq!(hist.len(), report.iterations + 1);
    assert!(hist.windows(2).all(|p| p[1] <= p[0]), "{hist:?}");
    assert!(hist.last().unwrap() < hist.first().unwrap());

    for group in topology.overlap_groups() {
        for &a in group {
            for &b in group {
                let d: f64 = layer.row(a).iter().zip(layer.row(b)).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((d - want).abs() <= 1e-6, "units {a},{b}: {d}");
            }
        }
    }
    for group in topology.tie_groups() {
        let local = |u: usize| -> Vec<u64> {
            topology.footprint(u).indices().map(|j| layer.row(u)[j].to_bits()).collect()
        };
        let first = local(group[0]);
        for &u in &group[1..] {
            assert_eq!(local(u), first);
        }
    }
    for u in 0..topology.units() {
        let inside: Vec<usize> = topology.footprint(u).indices().collect();
        for j in 0..q {
            if !inside.contains(&j) {
                assert_eq!(layer.row(u)[j], 0.0);
            }
        }
    }
}

#[test]
fn single_unit_activation_is_absolute_response() {
    let topology = Topology::dense(1, 5).unwrap();
    let w = vec![0.5, -1.0, 2.0, 0.0, 0.25];
    let layer = TicaLayer::with_weights(topology, w.clone()).unwrap();
    let x = [1.0, 2.0, -0.5, 3.0, 4.0];
    let z: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
    assert_eq!(layer.activations(&x, 0.0), vec![z.abs()]);
}

fn random_images(count: usize, side: usize, channels: usize, seed: u64) -> Vec<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let data = (0..side * side * channels).map(|_| rng.random_range(-1.0..1.0)).collect();
            Image::new(side, channels, data).unwrap()
        })
        .collect()
}

fn quick_config() -> NetworkConfig {
    let mut config = NetworkConfig::default();
    config.tica.max_iters = 15;
    config
}

#[test]
fn forward_is_absolutely_homogeneous() {
    let images = random_images(4, 16, 2, 1);
    let (net, _) = pretrain_network(&images, &quick_config(), 3).unwrap();
    assert_eq!(net.feature_len(16), Some(294));
    for img in &images {
        let base = net.forward(img).unwrap();
        assert_eq!(base.len(), 294);
        for a in [-3.0, -0.5, 0.0, 2.0, 7.5] {
            let scaled = net.forward(&img.scaled(a)).unwrap();
            for (s, b) in scaled.iter().zip(&base) {
                assert!((s - a.abs() * b).abs() <= 1e-9 * (1.0 + (a.abs() * b).abs()), "a={a}");
            }
        }
    }
}

#[test]
fn pretraining_is_deterministic() {
    let images = random_images(3, 16, 1, 4);
    let config = quick_config();
    let (a, ra) = pretrain_network(&images, &config, 42).unwrap();
    let (b, rb) = pretrain_network(&images, &config, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    let (c, _) = pretrain_network(&images, &config, 43).unwrap();
    assert_ne!(a, c);
}

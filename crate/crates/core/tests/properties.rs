use bcred::blocks::{BlockPartition, PartitionSpec};
use bcred::denoise::{soft_threshold, tv1d_prox, tv1d_value, Denoiser};
use bcred::forward::{ForwardModel, ForwardSpec};
use bcred::metrics::snr_db;
use bcred::solver::{selection_stream, Selection};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn signal(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 2..max_len)
}

fn tv_objective(x: &[f64], z: &[f64], w: f64) -> f64 {
    0.5 * x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + w * tv1d_value(x)
}

proptest! {
    #[test]
    fn contiguous_blocks_cover_every_index_once(n in 1usize..200, b in 1usize..20) {
        prop_assume!(b <= n);
        let p = BlockPartition::new(n, PartitionSpec::Contiguous { blocks: b }).unwrap();
        let mut seen = vec![0; n];
        for block in p.blocks() {
            for &j in block {
                seen[j] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes: Vec<usize> = p.blocks().iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn inject_then_extract_is_identity(
        (h, w, th, tw) in (1usize..12, 1usize..12).prop_flat_map(|(h, w)| (Just(h), Just(w), 1..=h, 1..=w)),
        seed in any::<u64>(),
    ) {
        let p = BlockPartition::new(h * w, PartitionSpec::Tiles { height: h, width: w, tile_height: th, tile_width: tw }).unwrap();
        let mut rng = bcred::rng::SplitMix64::new(seed);
        let x = rng.normal_vec(h * w);
        let mut rebuilt = vec![0.0; h * w];
        for i in 0..p.num_blocks() {
            let xi = p.extract(&x, i).unwrap();
            let full = p.inject(&xi, i).unwrap();
            prop_assert_eq!(p.extract(&full, i).unwrap(), xi);
            for (r, v) in rebuilt.iter_mut().zip(&full) {
                *r += v;
            }
        }
        prop_assert_eq!(rebuilt, x);
    }

    #[test]
    fn soft_threshold_is_nonexpansive(a in -50.0f64..50.0, b in -50.0f64..50.0, theta in 0.0f64..10.0) {
        let rounding = 4.0 * f64::EPSILON * (a.abs() + b.abs());
        prop_assert!((soft_threshold(a, theta) - soft_threshold(b, theta)).abs() <= (a - b).abs() + rounding);
        prop_assert!(soft_threshold(a, theta).abs() <= a.abs());
    }

    #[test]
    fn tv1d_prox_preserves_mean_and_shrinks_tv(z in signal(60), w in 0.0f64..5.0) {
        let x = tv1d_prox(&z, w);
        let n = z.len() as f64;
        let mean_z: f64 = z.iter().sum::<f64>() / n;
        let mean_x: f64 = x.iter().sum::<f64>() / n;
        prop_assert!((mean_z - mean_x).abs() <= 1e-9 * (1.0 + mean_z.abs()));
        prop_assert!(tv1d_value(&x) <= tv1d_value(&z) + 1e-9);
    }

    #[test]
    fn tv1d_prox_is_optimal_and_nonexpansive(z in signal(40), w in 0.01f64..3.0, seed in any::<u64>()) {
        let x = tv1d_prox(&z, w);
        let best = tv_objective(&x, &z, w);
        let mut rng = bcred::rng::SplitMix64::new(seed);
        for scale in [1e-1, 1e-3, 1e-5] {
            let perturbed: Vec<f64> = x.iter().map(|v| v + scale * rng.normal()).collect();
            prop_assert!(tv_objective(&perturbed, &z, w) >= best - 1e-9 * (1.0 + best));
        }
        let z2: Vec<f64> = z.iter().map(|v| v + rng.normal()).collect();
        let x2 = tv1d_prox(&z2, w);
        let dz = DVector::from_column_slice(&z) - DVector::from_column_slice(&z2);
        let dx = DVector::from_column_slice(&x) - DVector::from_column_slice(&x2);
        prop_assert!(dx.norm() <= dz.norm() * (1.0 + 1e-9));
    }

    #[test]
    fn gradient_step_red_operator_is_lambda_x(x in signal(30), lambda in 0.0f64..4.0, tau in 0.1f64..4.0) {
        let d = Denoiser::GradientStep { lambda, tau };
        let h = d.red_operator(&x, tau).unwrap();
        for (hv, xv) in h.iter().zip(&x) {
            prop_assert_eq!(*hv, lambda * xv);
        }
    }

    #[test]
    fn dense_model_matches_nalgebra(m in 1usize..10, n in 1usize..10, seed in any::<u64>()) {
        let mut rng = bcred::rng::SplitMix64::new(seed);
        let data = rng.normal_vec(m * n);
        let model = ForwardModel::build(&ForwardSpec::Dense { m, n, data: data.clone() }).unwrap();
        let a = DMatrix::from_row_slice(m, n, &data);
        let x = rng.normal_vec(n);
        let u = rng.normal_vec(m);
        let ax = a.clone() * DVector::from_column_slice(&x);
        let atu = a.transpose() * DVector::from_column_slice(&u);
        prop_assert!((ax - DVector::from_vec(model.apply(&x).unwrap())).amax() <= 1e-12);
        prop_assert!((atu - DVector::from_vec(model.adjoint(&u).unwrap())).amax() <= 1e-12);
    }

    #[test]
    fn snr_is_scale_and_permutation_invariant(x in signal(50), seed in any::<u64>(), s in 0.1f64..100.0) {
        let mut rng = bcred::rng::SplitMix64::new(seed);
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let est: Vec<f64> = x.iter().map(|v| v + 0.1 * rng.normal()).collect();
        let base = snr_db(&est, &x).unwrap();
        let scaled_est: Vec<f64> = est.iter().map(|v| v * s).collect();
        let scaled_x: Vec<f64> = x.iter().map(|v| v * s).collect();
        prop_assert!((snr_db(&scaled_est, &scaled_x).unwrap() - base).abs() <= 1e-9);
        let mut perm: Vec<usize> = (0..x.len()).collect();
        rng.shuffle(&mut perm);
        let pe: Vec<f64> = perm.iter().map(|&j| est[j]).collect();
        let px: Vec<f64> = perm.iter().map(|&j| x[j]).collect();
        prop_assert!((snr_db(&pe, &px).unwrap() - base).abs() <= 1e-9);
    }

    #[test]
    fn epoch_selection_visits_each_block_once_per_epoch(b in 1usize..30, epochs in 1usize..10, seed in any::<u64>()) {
        let stream = selection_stream(Selection::EpochShuffle { seed }, b, epochs);
        prop_assert_eq!(stream.len(), b * epochs);
        for epoch in stream.chunks(b) {
            let mut sorted = epoch.to_vec();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..b).collect::<Vec<_>>());
        }
        let iid = selection_stream(Selection::Iid { seed }, b, epochs);
        prop_assert!(iid.iter().all(|&i| i < b));
        prop_assert_eq!(iid, selection_stream(Selection::Iid { seed }, b, epochs));
    }
}

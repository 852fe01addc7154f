use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resn::data::{
    window, NormalizationScope, Segment, SeriesOptions, TimeSeriesDataset, WindowedSet,
};
use resn::evolve::{mutate, MutationRates, StepSizes};
use resn::rnn::{Architecture, SearchSpace};

proptest! {
    #[test]
    fn denormalize_inverts_normalization(
        raw in prop::collection::vec(-1e3..1e3_f64, 2..60),
        frac in 0.1..0.95_f64,
        whole in any::<bool>(),
    ) {
        let opts = SeriesOptions {
            train_fraction: frac,
            normalization: if whole { NormalizationScope::WholeSeries } else { NormalizationScope::TrainSegment },
        };
        let ds = TimeSeriesDataset::from_raw(raw.clone(), &opts).unwrap();
        if ds.norm_max() > ds.norm_min() {
            for (r, n) in raw.iter().zip(ds.normalized()) {
                prop_assert!((ds.denormalize(*n) - r).abs() <= 1e-9 * r.abs().max(1.0));
            }
        }
    }

    #[test]
    fn window_count_is_length_minus_look_back(len in 2usize..80, lb in 1usize..10) {
        let series: Vec<f64> = (0..len).map(|k| k as f64).collect();
        match WindowedSet::from_series(&series, lb) {
            Ok(set) => {
                prop_assert_eq!(set.len(), len - lb);
                for k in 0..set.len() {
                    prop_assert_eq!(set.targets()[k], series[k + lb]);
                }
            }
            Err(_) => prop_assert!(lb >= len),
        }
    }

    #[test]
    fn segments_partition_targets(len in 10usize..80, lb in 1usize..5) {
        let raw: Vec<f64> = (0..len).map(|k| (k as f64).sqrt()).collect();
        let ds = TimeSeriesDataset::from_raw(raw, &SeriesOptions::default()).unwrap();
        let split = ds.split_index();
        prop_assume!(lb < split);
        let train = window(&ds, lb, Segment::Train).unwrap();
        let test = window(&ds, lb, Segment::Test).unwrap();
        prop_assert_eq!(train.len() + test.len(), len - lb);
        prop_assert_eq!(test.targets()[0], ds.normalized()[split]);
    }

    #[test]
    fn mutation_stays_feasible(
        max_layers in 1usize..4,
        min_n in 1usize..6,
        span_n in 0usize..4,
        min_lb in 1usize..5,
        span_lb in 0usize..3,
        width_step in 1usize..10,
        lb_step in 1usize..10,
        seed in any::<u64>(),
    ) {
        let space = SearchSpace {
            max_layers,
            min_neurons: min_n,
            max_neurons: min_n + span_n,
            min_look_back: min_lb,
            max_look_back: min_lb + span_lb,
        };
        let rates = MutationRates { width: 0.5, add_layer: 0.5, remove_layer: 0.5, look_back: 0.5 };
        let steps = StepSizes { width: width_step, look_back: lb_step };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut arch = Architecture::new(vec![min_n + span_n; max_layers], min_lb).unwrap();
        for _ in 0..30 {
            arch = mutate(&arch, &space, &rates, &steps, &mut rng);
            prop_assert!(space.contains(&arch), "{} outside {:?}", arch, space);
        }
    }
}

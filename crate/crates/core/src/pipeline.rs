//! Two-level online multi-kernel models.
//!
//! [`MklModel`] runs one VAW expert per kernel feature map and combines the
//! expert predictions with a meta-learner (a second VAW over the N expert
//! outputs, EWA, or the aggregating forecaster). [`ConcatVawModel`] instead
//! concatenates all feature maps into one long vector and runs a single VAW
//! over it; per-round cost grows quadratically in N, so it serves as a
//! correctness and complexity reference rather than a benchmark contender.
//!
//! Round ordering is fixed: experts absorb features and emit predictions,
//! the prediction vector is (optionally) truncated, the meta predicts, the
//! label is revealed, the meta updates, and finally every expert updates.
//! The phase machine inside each VAW state makes it impossible for any
//! learner to read the label before the round's prediction exists.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::meta::{AggregatingState, EwaState, TruncationPolicy};
use crate::rff::FeatureMap;
use crate::vaw::VawState;

/// Second-level combiner over the N expert predictions.
#[derive(Debug, Clone, PartialEq)]
pub enum MetaCombiner {
    /// Linear combination learned by a VAW forecaster of dimension N;
    /// weights may go negative.
    VawMeta(VawState),
    /// Convex combination with exponential weights.
    Ewa(EwaState),
    /// Aggregating forecaster with the squared-loss substitution rule.
    Aggregating(AggregatingState),
}

impl MetaCombiner {
    fn len(&self) -> usize {
        match self {
            MetaCombiner::VawMeta(s) => s.dim(),
            MetaCombiner::Ewa(s) => s.len(),
            MetaCombiner::Aggregating(s) => s.len(),
        }
    }

    fn predict(&mut self, z: &[f64]) -> Result<f64> {
        match self {
            MetaCombiner::VawMeta(s) => s.absorb_features(z),
            MetaCombiner::Ewa(s) => s.predict(z),
            MetaCombiner::Aggregating(s) => s.predict(z),
        }
    }

    fn update(&mut self, z: &[f64], y: f64) -> Result<()> {
        match self {
            MetaCombiner::VawMeta(s) => s.absorb_label(z, y),
            MetaCombiner::Ewa(s) => s.update(z, y),
            MetaCombiner::Aggregating(s) => s.update(z, y),
        }
    }

    /// Final combination weights: the linear coefficient vector for the VAW
    /// meta, the simplex weights otherwise.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            MetaCombiner::VawMeta(s) => s.weights().to_vec(),
            MetaCombiner::Ewa(s) => s.weights(),
            MetaCombiner::Aggregating(s) => s.weights(),
        }
    }
}

/// What happened in one online round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub prediction: f64,
    pub label: f64,
    pub squared_loss: f64,
    /// Raw (untruncated) expert predictions, kept only when requested.
    pub expert_predictions: Option<Vec<f64>>,
}

/// Per-round records plus the running mean of squared losses.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<RoundRecord>,
    pub cumulative_mse: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_mse(&self) -> f64 {
        *self.cumulative_mse.last().expect("nonempty trajectory")
    }
}

/// Anything that can play one (x, y) round and report the outcome.
pub trait OnlineModel {
    fn round(&mut self, x: &[f64], y: f64, record_experts: bool) -> Result<RoundRecord>;

    /// Feature dimension of the inputs x.
    fn input_dim(&self) -> usize;
}

/// N feature maps, N VAW experts, one meta-combiner.
#[derive(Debug, Clone)]
pub struct MklModel {
    maps: Vec<FeatureMap>,
    experts: Vec<VawState>,
    meta: MetaCombiner,
    truncation: TruncationPolicy,
    rounds_seen: usize,
    // per-expert feature buffers reused across rounds
    feature_buf: Vec<Vec<f64>>,
    z_buf: Vec<f64>,
}

impl MklModel {
    /// Builds the model with one fresh VAW expert (regularizer
    /// `expert_lambda`) per feature map. All maps must share one input
    /// dimension, and the meta-combiner must have size N.
    pub fn new(
        maps: Vec<FeatureMap>,
        expert_lambda: f64,
        meta: MetaCombiner,
        truncation: TruncationPolicy,
    ) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::EmptyInput("feature map list"));
        }
        let d = maps[0].input_dim();
        if maps.iter().any(|m| m.input_dim() != d) {
            return Err(Error::invalid(
                "maps",
                "feature maps disagree on input dimension",
            ));
        }
        if meta.len() != maps.len() {
            return Err(Error::DimensionMismatch {
                context: "meta-combiner size vs expert count",
                expected: maps.len(),
                got: meta.len(),
            });
        }
        let experts = maps
            .iter()
            .map(|m| VawState::new(m.output_dim(), expert_lambda))
            .collect::<Result<Vec<_>>>()?;
        let feature_buf = maps.iter().map(|m| vec![0.0; m.output_dim()]).collect();
        let n = maps.len();
        Ok(MklModel {
            maps,
            experts,
            meta,
            truncation,
            rounds_seen: 0,
            feature_buf,
            z_buf: vec![0.0; n],
        })
    }

    pub fn num_experts(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[FeatureMap] {
        &self.maps
    }

    pub fn experts(&self) -> &[VawState] {
        &self.experts
    }

    pub fn meta(&self) -> &MetaCombiner {
        &self.meta
    }

    pub fn truncation(&self) -> &TruncationPolicy {
        &self.truncation
    }

    pub fn rounds_seen(&self) -> usize {
        self.rounds_seen
    }

    /// Final meta weights over the kernel dictionary.
    pub fn meta_weights(&self) -> Vec<f64> {
        self.meta.weights()
    }
}

impl OnlineModel for MklModel {
    fn round(&mut self, x: &[f64], y: f64, record_experts: bool) -> Result<RoundRecord> {
        // 1. experts see the features and commit their predictions
        for j in 0..self.maps.len() {
            self.maps[j].features_into(x, &mut self.feature_buf[j])?;
            self.z_buf[j] = self.experts[j].absorb_features(&self.feature_buf[j])?;
        }
        let raw_z = record_experts.then(|| self.z_buf.clone());

        // 2. optional truncation of the meta's input
        self.truncation.apply_in_place(&mut self.z_buf);

        // 3. meta predicts, and only now may the label be used
        let prediction = self.meta.predict(&self.z_buf)?;
        let squared_loss = (prediction - y) * (prediction - y);

        // 4. meta then experts fold in the label
        self.meta.update(&self.z_buf, y)?;
        for j in 0..self.experts.len() {
            self.experts[j].absorb_label(&self.feature_buf[j], y)?;
        }

        self.rounds_seen += 1;
        Ok(RoundRecord {
            t: self.rounds_seen,
            prediction,
            label: y,
            squared_loss,
            expert_predictions: raw_z,
        })
    }

    fn input_dim(&self) -> usize {
        self.maps[0].input_dim()
    }
}

/// All feature maps concatenated into one vector, learned by a single VAW.
#[derive(Debug, Clone)]
pub struct ConcatVawModel {
    maps: Vec<FeatureMap>,
    learner: VawState,
    concat_buf: Vec<f64>,
}

impl ConcatVawModel {
    pub fn new(maps: Vec<FeatureMap>, lambda: f64) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::EmptyInput("feature map list"));
        }
        let d = maps[0].input_dim();
        if maps.iter().any(|m| m.input_dim() != d) {
            return Err(Error::invalid(
                "maps",
                "feature maps disagree on input dimension",
            ));
        }
        let total: usize = maps.iter().map(|m| m.output_dim()).sum();
        Ok(ConcatVawModel {
            maps,
            learner: VawState::new(total, lambda)?,
            concat_buf: vec![0.0; total],
        })
    }

    pub fn maps(&self) -> &[FeatureMap] {
        &self.maps
    }

    pub fn learner(&self) -> &VawState {
        &self.learner
    }
}

impl OnlineModel for ConcatVawModel {
    fn round(&mut self, x: &[f64], y: f64, _record_experts: bool) -> Result<RoundRecord> {
        let mut offset = 0;
        for map in &self.maps {
            let dim = map.output_dim();
            map.features_into(x, &mut self.concat_buf[offset..offset + dim])?;
            offset += dim;
        }
        let prediction = self.learner.step(&self.concat_buf, y)?;
        Ok(RoundRecord {
            t: self.learner.rounds_seen() as usize,
            prediction,
            label: y,
            squared_loss: (prediction - y) * (prediction - y),
            expert_predictions: None,
        })
    }

    fn input_dim(&self) -> usize {
        self.maps[0].input_dim()
    }
}

/// Plays the whole dataset through the model in order, collecting per-round
/// records and the running MSE.
pub fn run_stream(
    model: &mut impl OnlineModel,
    dataset: &Dataset,
    record_experts: bool,
) -> Result<Trajectory> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let t_max = dataset.len();
    let mut records = Vec::with_capacity(t_max);
    let mut cumulative_mse = Vec::with_capacity(t_max);
    let mut loss_sum = 0.0;
    for t in 0..t_max {
        let record = model.round(dataset.row(t), dataset.label(t), record_experts)?;
        loss_sum += record.squared_loss;
        cumulative_mse.push(loss_sum / (t + 1) as f64);
        records.push(record);
    }
    Ok(Trajectory {
        records,
        cumulative_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta::default_eta_ewa;
    use crate::rff::{sample_dictionary, FeatureVariant, KernelSpec};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1, Array2};

    fn toy_maps(n: usize, m: usize, d: usize, seed: u64) -> Vec<FeatureMap> {
        let specs: Vec<KernelSpec> = (0..n)
            .map(|j| {
                if j % 2 == 0 {
                    KernelSpec::gaussian(1.0 + j as f64).unwrap()
                } else {
                    KernelSpec::laplacian(1.0 + j as f64).unwrap()
                }
            })
            .collect();
        sample_dictionary(&specs, m, d, FeatureVariant::CosSin, seed).unwrap()
    }

    fn toy_dataset(t: usize, d: usize, seed: u64) -> Dataset {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let features = Array2::from_shape_fn((t, d), |_| rng.random::<f64>() * 2.0 - 1.0);
        let labels = Array1::from_shape_fn(t, |_| rng.random::<f64>());
        Dataset::new("toy", features, labels).unwrap()
    }

    #[test]
    fn first_round_predictions_are_zero_for_fresh_models() {
        let maps = toy_maps(3, 4, 2, 1);
        let meta = MetaCombiner::VawMeta(VawState::new(3, 1.0).unwrap());
        let mut model =
            MklModel::new(maps.clone(), 1.0, meta, TruncationPolicy::disabled()).unwrap();
        let rec = model.round(&[0.4, -0.2], 0.9, true).unwrap();
        assert_eq!(rec.prediction, 0.0);
        assert_eq!(rec.t, 1);
        assert!(rec.expert_predictions.unwrap().iter().all(|&z| z == 0.0));

        let meta = MetaCombiner::Ewa(EwaState::new(3, 0.5).unwrap());
        let mut model = MklModel::new(
            maps,
            1.0,
            meta,
            TruncationPolicy::interval(0.0, 1.0).unwrap(),
        )
        .unwrap();
        let rec = model.round(&[0.4, -0.2], 0.9, false).unwrap();
        assert_eq!(rec.prediction, 0.0);
    }

    #[test]
    fn single_expert_ewa_passes_prediction_through() {
        let maps = toy_maps(1, 6, 2, 2);
        let trunc = TruncationPolicy::interval(0.0, 1.0).unwrap();
        let meta = MetaCombiner::Ewa(EwaState::new(1, default_eta_ewa(0.0, 1.0)).unwrap());
        let mut model = MklModel::new(maps.clone(), 1.0, meta, trunc).unwrap();
        let mut solo = VawState::new(maps[0].output_dim(), 1.0).unwrap();
        let data = toy_dataset(40, 2, 3);
        for t in 0..data.len() {
            let x = data.row(t);
            let y = data.label(t);
            let rec = model.round(x, y, false).unwrap();
            let phi = maps[0].features(x).unwrap();
            let z = solo.step(&phi, y).unwrap();
            assert_eq!(rec.prediction, z.clamp(0.0, 1.0));
        }
    }

    #[test]
    fn round_record_squared_loss_consistent() {
        let maps = toy_maps(2, 5, 3, 4);
        let meta = MetaCombiner::VawMeta(VawState::new(2, 1.0).unwrap());
        let mut model = MklModel::new(maps, 1.0, meta, TruncationPolicy::disabled()).unwrap();
        let data = toy_dataset(20, 3, 5);
        for t in 0..data.len() {
            let rec = model.round(data.row(t), data.label(t), false).unwrap();
            assert_eq!(
                rec.squared_loss,
                (rec.prediction - rec.label) * (rec.prediction - rec.label)
            );
        }
    }

    #[test]
    fn constant_stream_ewa_mse_nonincreasing_after_round_three() {
        let maps = toy_maps(2, 4, 3, 6);
        let trunc = TruncationPolicy::interval(0.0, 1.0).unwrap();
        let meta = MetaCombiner::Ewa(EwaState::new(2, default_eta_ewa(0.0, 1.0)).unwrap());
        let mut model = MklModel::new(maps, 1.0, meta, trunc).unwrap();
        let x0 = [0.3, -0.4, 0.8];
        let features = Array2::from_shape_fn((30, 3), |(_, j)| x0[j]);
        let labels = Array1::ones(30);
        let data = Dataset::new("const", features, labels).unwrap();
        let trajectory = run_stream(&mut model, &data, false).unwrap();
        for t in 3..trajectory.len() {
            assert!(
                trajectory.cumulative_mse[t] <= trajectory.cumulative_mse[t - 1] + 1e-15,
                "cumulative MSE rose at round {}",
                t + 1
            );
        }
    }

    #[test]
    fn concat_single_map_matches_solo_vaw_bitwise() {
        let maps = toy_maps(1, 5, 2, 7);
        let mut concat = ConcatVawModel::new(maps.clone(), 1.0).unwrap();
        let mut solo = VawState::new(maps[0].output_dim(), 1.0).unwrap();
        let data = toy_dataset(60, 2, 8);
        for t in 0..data.len() {
            let rec = concat.round(data.row(t), data.label(t), false).unwrap();
            let phi = maps[0].features(data.row(t)).unwrap();
            let expected = solo.step(&phi, data.label(t)).unwrap();
            assert_eq!(rec.prediction, expected);
        }
    }

    #[test]
    fn concat_fresh_model_predicts_zero() {
        let maps = toy_maps(3, 4, 2, 9);
        let mut concat = ConcatVawModel::new(maps, 2.0).unwrap();
        let rec = concat.round(&[0.1, 0.2], 1.0, false).unwrap();
        assert_eq!(rec.prediction, 0.0);
    }

    #[test]
    fn run_stream_covers_dataset_and_is_deterministic() {
        let data = toy_dataset(25, 2, 10);
        let build = || {
            let maps = toy_maps(2, 4, 2, 11);
            let meta = MetaCombiner::VawMeta(VawState::new(2, 1.0).unwrap());
            MklModel::new(maps, 1.0, meta, TruncationPolicy::disabled()).unwrap()
        };
        let t1 = run_stream(&mut build(), &data, true).unwrap();
        let t2 = run_stream(&mut build(), &data, true).unwrap();
        assert_eq!(t1.len(), data.len());
        assert_eq!(t1, t2);
        // cumulative MSE is the prefix mean of squared losses
        let mut sum = 0.0;
        for (t, rec) in t1.records.iter().enumerate() {
            sum += rec.squared_loss;
            assert_abs_diff_eq!(t1.cumulative_mse[t], sum / (t + 1) as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn run_stream_zero_labels_zero_loss() {
        let features = array![[0.5, 0.5], [0.1, -0.2], [0.9, 0.3]];
        let labels = Array1::zeros(3);
        let data = Dataset::new("zeros", features, labels).unwrap();
        let maps = toy_maps(2, 4, 2, 12);
        let meta = MetaCombiner::VawMeta(VawState::new(2, 1.0).unwrap());
        let mut model = MklModel::new(maps, 1.0, meta, TruncationPolicy::disabled()).unwrap();
        let trajectory = run_stream(&mut model, &data, false).unwrap();
        assert!(trajectory.records.iter().all(|r| r.prediction == 0.0));
        assert_eq!(trajectory.final_mse(), 0.0);
    }

    #[test]
    fn fresh_vaw_meta_weights_are_zero() {
        let maps = toy_maps(3, 4, 2, 17);
        let meta = MetaCombiner::VawMeta(VawState::new(3, 1.0).unwrap());
        let model = MklModel::new(maps, 1.0, meta, TruncationPolicy::disabled()).unwrap();
        assert_eq!(model.meta_weights(), vec![0.0; 3]);
    }

    #[test]
    fn meta_size_must_match_expert_count() {
        let maps = toy_maps(3, 4, 2, 13);
        let meta = MetaCombiner::Ewa(EwaState::new(2, 0.5).unwrap());
        assert!(matches!(
            MklModel::new(maps, 1.0, meta, TruncationPolicy::disabled()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn prediction_does_not_depend_on_current_label() {
        // the round-t prediction must be fixed before y_t is consumed
        let data = toy_dataset(10, 2, 14);
        for meta_kind in 0..3 {
            let build = || {
                let maps = toy_maps(2, 4, 2, 15);
                let trunc = TruncationPolicy::interval(0.0, 1.0).unwrap();
                let meta = match meta_kind {
                    0 => MetaCombiner::VawMeta(VawState::new(2, 1.0).unwrap()),
                    1 => MetaCombiner::Ewa(EwaState::new(2, 0.5).unwrap()),
                    _ => {
                        MetaCombiner::Aggregating(AggregatingState::new(2, 2.0, 0.0, 1.0).unwrap())
                    }
                };
                MklModel::new(maps, 1.0, meta, trunc).unwrap()
            };
            let mut a = build();
            let mut b = build();
            for t in 0..data.len() - 1 {
                a.round(data.row(t), data.label(t), false).unwrap();
                b.round(data.row(t), data.label(t), false).unwrap();
            }
            let t = data.len() - 1;
            let ra = a.round(data.row(t), 0.123, false).unwrap();
            let rb = b.round(data.row(t), 0.877, false).unwrap();
            assert_eq!(ra.prediction, rb.prediction);
        }
    }

    #[test]
    fn reseeding_one_kernel_changes_only_that_expert() {
        let specs = vec![
            KernelSpec::gaussian(1.0).unwrap(),
            KernelSpec::laplacian(2.0).unwrap(),
        ];
        let maps_a = sample_dictionary(&specs, 6, 2, FeatureVariant::CosSin, 100).unwrap();
        let mut maps_b = maps_a.clone();
        // resample only kernel 1 from a different stream
        let mut rng = {
            use rand::SeedableRng;
            rand_chacha::ChaCha8Rng::seed_from_u64(999)
        };
        maps_b[1] = FeatureMap::sample(specs[1], 6, 2, FeatureVariant::CosSin, &mut rng).unwrap();

        let build = |maps: Vec<FeatureMap>| {
            let meta = MetaCombiner::VawMeta(VawState::new(2, 1.0).unwrap());
            MklModel::new(maps, 1.0, meta, TruncationPolicy::disabled()).unwrap()
        };
        let mut a = build(maps_a);
        let mut b = build(maps_b);
        let data = toy_dataset(15, 2, 16);
        for t in 0..data.len() {
            let ra = a.round(data.row(t), data.label(t), true).unwrap();
            let rb = b.round(data.row(t), data.label(t), true).unwrap();
            let za = ra.expert_predictions.unwrap();
            let zb = rb.expert_predictions.unwrap();
            assert_eq!(za[0], zb[0], "expert 0 diverged at round {t}");
            if t > 0 {
                // after one update the reseeded expert should differ
                assert_ne!(za[1], zb[1], "expert 1 identical at round {t}");
            }
        }
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::bounds::expected_update_norm_bound;
use crate::error::Error;
use crate::model::{Example, WeightMatrix};
use crate::sampling::{arm_distribution, enumerate_superarms, superarm_prob};

fn lbl(n: usize) -> Label {
    Label::new(n).unwrap()
}

fn config(k: usize, d: usize, m: usize, gamma: f64, seed: u64) -> LearnerConfig {
    LearnerConfig { k, d, m, gamma, seed }
}

fn random_instance(rng: &mut ChaCha8Rng, k: usize, d: usize) -> (WeightMatrix, Vec<f64>, Label) {
    let w = WeightMatrix::from_fn(k, d, |_, _| rng.gen_range(-1.0..1.0));
    let mut x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 1.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    (w, x, Label::from_index(rng.gen_range(0..k)))
}

/// Exact `E_Z[U~]` and `E_Z[||U~||_F^2]` by summing over every ordered
/// superarm.
fn enumerate_expectation(
    w: &WeightMatrix,
    x: &[f64],
    y: Label,
    m: usize,
    gamma: f64,
) -> (Vec<Vec<f64>>, f64) {
    let (k, d) = (w.num_classes(), w.dim());
    let greedy = w.score(x).unwrap().top_m(m).unwrap();
    let dist = arm_distribution(&greedy, k, gamma).unwrap();
    let consts = EstimatorConstants::new(k, m).unwrap();
    let mut mean = vec![vec![0.0; d]; k];
    let mut norm = 0.0;
    for arm in enumerate_superarms(k, m).unwrap() {
        let z = superarm_prob(&dist, &arm).unwrap();
        let u = bandit_update(x, &greedy, &arm, arm.contains(y), z, &consts);
        for (r, row) in mean.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += z * u.entry(r, j);
            }
        }
        norm += z * u.frobenius_sq();
    }
    (mean, norm)
}

#[test]
fn mcslp_update_when_label_in_greedy_set() {
    let w = WeightMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![-1.0, 0.0]]).unwrap();
    let x = [1.0, 0.5];
    let (u, greedy) = subset_update(&w, &x, lbl(1), 2).unwrap();
    assert_eq!(greedy.numbers(), vec![1, 2]);
    assert_eq!(u.to_rows(), vec![vec![0.5, 0.25], vec![-0.5, -0.25], vec![0.0, 0.0]]);
}

#[test]
fn mcslp_update_from_zero_weights() {
    let mut learner = McSlp::new(&config(3, 2, 2, 0.5, 0)).unwrap();
    let (u, rec) = learner.update(&[1.0, 0.0], lbl(3)).unwrap();
    assert_eq!(u.to_rows(), vec![vec![-0.5, 0.0], vec![-0.5, 0.0], vec![1.0, 0.0]]);
    assert_eq!(rec.greedy.numbers(), vec![1, 2]);
    assert!(rec.set_mistake && rec.top1_mistake);
    assert_eq!(learner.weights().as_slice(), &[-0.5, 0.0, -0.5, 0.0, 1.0, 0.0]);
    assert_eq!(learner.state().round, 1);
}

#[test]
fn mcslp_columns_sum_to_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let k = rng.gen_range(2..9);
        let m = rng.gen_range(1..k);
        let (w, x, y) = random_instance(&mut rng, k, 5);
        let (u, _) = subset_update(&w, &x, y, m).unwrap();
        for j in 0..5 {
            assert!(u.column_sum(j).abs() < 1e-12);
        }
    }
}

#[test]
fn mcslp_rejects_dimension_mismatch() {
    let mut learner = McSlp::new(&config(3, 2, 2, 0.5, 0)).unwrap();
    assert!(matches!(
        learner.update(&[1.0], lbl(1)),
        Err(Error::DimensionMismatch { .. })
    ));
    assert_eq!(learner.state().round, 0);
}

#[test]
fn bandit_update_without_feedback_ignores_sampled_set() {
    let x = [0.3, -0.2];
    let k = 5;
    let consts = EstimatorConstants::new(k, 2).unwrap();
    let greedy = LabelSet::from_numbers(&[2, 4], k).unwrap();
    let a = LabelSet::from_numbers(&[1, 3], k).unwrap();
    let b = LabelSet::from_numbers(&[4, 2], k).unwrap();
    let ua = bandit_update(&x, &greedy, &a, false, 0.01, &consts);
    let ub = bandit_update(&x, &greedy, &b, false, 0.3, &consts);
    assert_eq!(ua, ub);
    for r in 0..k {
        let expected = -consts.tau2 - if r == 1 || r == 3 { 0.5 } else { 0.0 };
        assert_eq!(ua.coefficients()[r], expected);
    }
}

/// Textbook Banditron update written out directly.
fn banditron_reference(
    x: &[f64],
    k: usize,
    predicted: usize,
    played: usize,
    hit: bool,
    gamma: f64,
) -> Vec<Vec<f64>> {
    let p_played = if played == predicted { 1.0 - gamma + gamma / k as f64 } else { gamma / k as f64 };
    (0..k)
        .map(|r| {
            let c = f64::from(u8::from(hit && r == played)) / p_played - f64::from(u8::from(r == predicted));
            x.iter().map(|v| v * c).collect()
        })
        .collect()
}

#[test]
fn single_label_case_is_banditron() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..300 {
        let k = rng.gen_range(2..8);
        let gamma = rng.gen_range(0.01..0.99);
        let (w, x, y) = random_instance(&mut rng, k, 4);
        let greedy = w.score(&x).unwrap().top_m(1).unwrap();
        let dist = arm_distribution(&greedy, k, gamma).unwrap();
        let consts = EstimatorConstants::new(k, 1).unwrap();
        assert_eq!((consts.tau1, consts.tau2), (1.0, 0.0));
        for arm in enumerate_superarms(k, 1).unwrap() {
            let z = superarm_prob(&dist, &arm).unwrap();
            let u = bandit_update(&x, &greedy, &arm, arm.contains(y), z, &consts);
            let reference = banditron_reference(
                &x,
                k,
                greedy.first().index(),
                arm.first().index(),
                arm.contains(y),
                gamma,
            );
            for r in 0..k {
                for j in 0..4 {
                    assert!((u.entry(r, j) - reference[r][j]).abs() <= 1e-12 * reference[r][j].abs().max(1.0));
                }
            }
        }
    }
}

#[test]
fn estimator_is_unbiased_k5() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in 1..=3 {
        for _ in 0..10 {
            let (w, x, y) = random_instance(&mut rng, 5, 4);
            let (mean, _) = enumerate_expectation(&w, &x, y, m, 0.3);
            let (u, _) = subset_update(&w, &x, y, m).unwrap();
            for r in 0..5 {
                for j in 0..4 {
                    assert!((mean[r][j] - u.entry(r, j)).abs() < 1e-10, "m={m} r={r} j={j}");
                }
            }
        }
    }
}

#[test]
fn estimator_is_unbiased_and_norm_bounded_on_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 2..=6 {
        for m in 1..k.min(4) {
            for &gamma in &[0.05, 0.3, 0.9] {
                for _ in 0..5 {
                    let (w, x, y) = random_instance(&mut rng, k, 3);
                    let (mean, norm) = enumerate_expectation(&w, &x, y, m, gamma);
                    let (u, greedy) = subset_update(&w, &x, y, m).unwrap();
                    for r in 0..k {
                        for j in 0..3 {
                            assert!((mean[r][j] - u.entry(r, j)).abs() < 1e-10);
                        }
                    }
                    let x_sq = x.iter().map(|v| v * v).sum::<f64>();
                    let bound =
                        expected_update_norm_bound(k, m, gamma, x_sq, !greedy.contains(y)).unwrap();
                    assert!(norm <= bound, "k={k} m={m} gamma={gamma}: {norm} > {bound}");
                }
            }
        }
    }
}

#[test]
fn bandit_update_depends_on_feedback_bit_only() {
    // Two environments with different true labels that happen to give the
    // same membership answer must drive the learner identically.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = config(6, 4, 3, 0.3, 77);
    let mut a = McDbf::new(&cfg).unwrap();
    let mut b = McDbf::new(&cfg).unwrap();
    for _ in 0..300 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let y = Label::from_index(rng.gen_range(0..6));
        let sampled = a.clone().step(&x, &mut LabelOracle(y)).unwrap().sampled;
        let other = (0..6)
            .map(Label::from_index)
            .find(|&l| l != y && sampled.contains(l) == sampled.contains(y))
            .unwrap();
        let sa = a.step(&x, &mut LabelOracle(y)).unwrap();
        let sb = b.step(&x, &mut LabelOracle(other)).unwrap();
        assert_eq!(sa, sb);
    }
    assert_eq!(a.weights(), b.weights());
}

struct Offline;

impl FeedbackOracle for Offline {
    fn contains(&mut self, _set: &LabelSet) -> Result<bool> {
        Err(Error::OracleUnavailable("offline".into()))
    }
}

#[test]
fn unavailable_oracle_leaves_state_untouched() {
    let mut learner = McDbf::new(&config(5, 2, 2, 0.2, 9)).unwrap();
    let mut twin = learner.clone();
    learner.observe(&[0.2, 0.1], lbl(2)).unwrap();
    twin.observe(&[0.2, 0.1], lbl(2)).unwrap();
    let before = learner.state().clone();
    assert!(matches!(
        learner.step(&[0.5, 0.5], &mut Offline),
        Err(Error::OracleUnavailable(_))
    ));
    assert_eq!(learner.state(), &before);
    // the random stream was not advanced either
    let a = learner.observe(&[0.1, 0.3], lbl(4)).unwrap();
    let b = twin.observe(&[0.1, 0.3], lbl(4)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_input_gives_zero_update() {
    let x = [0.0; 3];
    let cfg = config(4, 3, 2, 0.3, 1);
    let mut learners: Vec<Box<dyn Learner>> = vec![
        Box::new(McSlp::new(&cfg).unwrap()),
        Box::new(McDbf::new(&cfg).unwrap()),
        Box::new(Perceptron::new(&cfg).unwrap()),
        Box::new(Banditron::new(&cfg).unwrap()),
    ];
    for learner in &mut learners {
        for y in 1..=4 {
            let (u, _) = learner.observe(&x, lbl(y)).unwrap();
            assert!(u.to_rows().iter().flatten().all(|&v| v == 0.0), "{}", learner.name());
        }
        assert!(learner.weights().as_slice().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn perceptron_correct_prediction_no_update() {
    let mut p = Perceptron::new(&config(3, 2, 1, 0.5, 0)).unwrap();
    p.update(&[1.0, 0.0], lbl(2)).unwrap();
    let w = p.weights().clone();
    let (u, rec) = p.update(&[1.0, 0.0], lbl(2)).unwrap();
    assert!(!rec.top1_mistake);
    assert!(u.is_zero());
    assert_eq!(p.weights(), &w);
}

#[test]
fn perceptron_mistake_from_zero() {
    let mut p = Perceptron::new(&config(3, 2, 1, 0.5, 0)).unwrap();
    let (_, rec) = p.update(&[1.0, 0.0], lbl(2)).unwrap();
    assert_eq!(rec.prediction.number(), 1);
    assert_eq!(p.weights().as_slice(), &[-1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn configs_are_validated() {
    assert!(McSlp::new(&config(3, 2, 3, 0.5, 0)).is_err());
    assert!(McSlp::new(&config(3, 0, 1, 0.5, 0)).is_err());
    assert!(McDbf::new(&config(3, 2, 2, 0.0, 0)).is_err());
    assert!(McDbf::new(&config(3, 2, 2, 1.0, 0)).is_err());
    assert!(Banditron::new(&config(3, 2, 2, 1.0, 0)).is_err());
    assert!(Perceptron::new(&config(1, 2, 1, 0.5, 0)).is_err());
}

fn stream(seed: u64, k: usize, d: usize, n: usize) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (_, x, y) = random_instance(&mut rng, k, d);
            Example::new(x, y, k).unwrap()
        })
        .collect()
}

#[test]
fn run_zero_rounds() {
    let mut l = McDbf::new(&config(4, 3, 2, 0.3, 0)).unwrap();
    let data = stream(1, 4, 3, 10);
    let metrics = run_online(&mut l, &data, 0, 5).unwrap();
    assert_eq!(metrics.set_mistakes, 0);
    assert_eq!(metrics.top1_mistakes, 0);
    assert!(metrics.checkpoints.is_empty());
    assert!(!metrics.truncated);
}

/// Never updates: `W` stays at zero.
struct Frozen {
    state: LearnerState,
    m: usize,
}

impl Learner for Frozen {
    fn name(&self) -> &'static str {
        "frozen"
    }

    fn state(&self) -> &LearnerState {
        &self.state
    }

    fn observe(&mut self, x: &[f64], label: Label) -> Result<(UpdateMatrix, TrialRecord)> {
        let scores = self.state.weights.score(x)?;
        let k = scores.len();
        self.state.round += 1;
        let record = TrialRecord::new(self.state.round, scores.argmax(), scores.top_m(self.m)?, None, None, label);
        Ok((UpdateMatrix::zero(k, x.len()), record))
    }
}

#[test]
fn frozen_learner_counts_constant_mistakes() {
    for (label, expected_per_round) in [(4, 1), (1, 0), (2, 0)] {
        let mut frozen = Frozen {
            state: LearnerState::new(4, 2),
            m: 2,
        };
        let data: Vec<Example> = (0..37)
            .map(|i| Example::new(vec![0.01 * i as f64, 0.5], lbl(label), 4).unwrap())
            .collect();
        let metrics = run_online(&mut frozen, &data, 37, 10).unwrap();
        assert_eq!(metrics.set_mistakes, 37 * expected_per_round);
        assert_eq!(
            metrics.checkpoints.iter().map(|c| c.round).collect::<Vec<_>>(),
            vec![10, 20, 30, 37]
        );
    }
}

#[test]
fn run_flags_truncated_stream() {
    let mut l = McSlp::new(&config(4, 3, 2, 0.3, 0)).unwrap();
    let data = stream(2, 4, 3, 25);
    let metrics = run_online(&mut l, &data, 100, 10).unwrap();
    assert!(metrics.truncated);
    assert_eq!(metrics.rounds, 25);
    assert_eq!(metrics.checkpoints.last().unwrap().round, 25);
}

#[test]
fn runs_replay_bit_identically() {
    let data = stream(3, 6, 5, 3000);
    let run = |seed| {
        let mut l = McDbf::new(&config(6, 5, 3, 0.25, seed)).unwrap();
        let mut records = Vec::new();
        let mut metrics = run_online_with(&mut l, &data, 3000, 100, |r, _| records.push(r.clone())).unwrap();
        metrics.wall_clock = Default::default();
        (metrics, records, l.weights().clone())
    };
    let (a, b) = (run(8), run(8));
    assert_eq!(a, b);
    assert_ne!(a.2, run(9).2);
}

#[test]
fn checkpoints_are_exact_cumulative_rates() {
    let data = stream(4, 5, 4, 1000);
    let mut l = McDbf::new(&config(5, 4, 2, 0.3, 1)).unwrap();
    let mut flags = Vec::new();
    let metrics = run_online_with(&mut l, &data, 1000, 7, |r, _| flags.push((r.top1_mistake, r.set_mistake))).unwrap();
    let mut previous_set = 0;
    for c in &metrics.checkpoints {
        let top1 = flags[..c.round as usize].iter().filter(|f| f.0).count() as u64;
        let set = flags[..c.round as usize].iter().filter(|f| f.1).count() as u64;
        assert_eq!(c.top1_mistakes, top1);
        assert_eq!(c.set_mistakes, set);
        assert_eq!(c.error_rate(), top1 as f64 / c.round as f64);
        assert!(c.set_mistakes >= previous_set);
        previous_set = c.set_mistakes;
    }
}

#[test]
fn mcdbf_m1_and_banditron_share_trajectories() {
    let data = stream(5, 7, 6, 2000);
    let cfg = config(7, 6, 1, 0.2, 31);
    let mut a = McDbf::new(&cfg).unwrap();
    let mut b = Banditron::new(&cfg).unwrap();
    for ex in &data {
        let (_, ra) = a.observe(&ex.features, ex.label).unwrap();
        let (_, rb) = b.observe(&ex.features, ex.label).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.weights().as_slice(), b.weights().as_slice());
    }
}

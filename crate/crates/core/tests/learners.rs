use dpotb::geometry::vector::{dist2, dot, norm2, norm2_sq};
use dpotb::learners::{Feedback, Ftrl, OptimisticOmd, Osd, ParameterFree, RegretLedger, Regularizer, ScOsd, StepSchedule};
use dpotb::{Ball, LearnerKind, NormSpec, OnlineLearner, Rng};
use rand::Rng as _;

fn line(radius: f64) -> Ball {
    Ball::centered(1, radius)
}

/// Plays `grads` against `learner` and returns the plays.
fn play(learner: &mut dyn OnlineLearner, grads: &[Vec<f64>]) -> Vec<Vec<f64>> {
    grads
        .iter()
        .map(|g| {
            let w = learner.predict();
            learner.receive(Feedback::linear(g)).unwrap();
            w
        })
        .collect()
}

fn linear_regret(plays: &[Vec<f64>], grads: &[Vec<f64>], u: &[f64]) -> f64 {
    plays.iter().zip(grads).map(|(w, g)| dot(g, w) - dot(g, u)).sum()
}

/// Best fixed point in a ball for linear losses: the boundary point
/// opposite the gradient sum.
fn best_linear(ball: &Ball, grads: &[Vec<f64>]) -> Vec<f64> {
    let mut s = vec![0.0; ball.dim()];
    for g in grads {
        s.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    let n = norm2(&s);
    if n == 0.0 {
        return ball.center.clone();
    }
    ball.center.iter().zip(&s).map(|(c, v)| c - ball.radius * v / n).collect()
}

fn random_signs(rng: &mut Rng, n: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| if rng.random_bool(0.5) { scale } else { -scale }).collect())
        .collect()
}

#[test]
fn osd_zero_gradients_keep_play_fixed() {
    let mut osd = Osd::new(Ball::centered(3, 1.0), StepSchedule::Adaptive).with_start(vec![0.1, -0.2, 0.3]);
    let plays = play(&mut osd, &vec![vec![0.0; 3]; 50]);
    assert!(plays.iter().all(|w| w == &vec![0.1, -0.2, 0.3]));
}

#[test]
fn osd_saturates_at_boundary() {
    let mut osd = Osd::new(line(1.0), StepSchedule::Constant(1.0));
    let plays = play(&mut osd, &vec![vec![1.0]; 20]);
    assert_eq!(plays[0], vec![0.0]);
    assert!(plays[1..].iter().all(|w| w == &vec![-1.0]));
}

#[test]
fn osd_alternating_losses_within_standard_bound() {
    let ball = line(1.0);
    let t = 1000;
    let grads: Vec<Vec<f64>> = (1..=t).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect();
    let mut osd = Osd::new(ball.clone(), StepSchedule::Adaptive);
    let plays = play(&mut osd, &grads);
    let regret = linear_regret(&plays, &grads, &[0.0]);
    let bound = 2.0 * ball.diameter() * osd.gradient_scale() * (t as f64).sqrt();
    assert!(regret <= bound, "{regret} > {bound}");
}

#[test]
fn ftrl_without_gradients_stays_at_start() {
    let mut ftrl = Ftrl::new(Ball::new(vec![0.5, 0.5], 1.0), StepSchedule::Adaptive);
    let plays = play(&mut ftrl, &vec![vec![0.0, 0.0]; 10]);
    assert!(plays.iter().all(|w| w == &vec![0.5, 0.5]));
}

#[test]
fn ftrl_unconstrained_closed_form() {
    let c = 0.3;
    let g = [0.2, -0.1];
    let mut ftrl = Ftrl::new(Ball::centered(2, 1e9), StepSchedule::InverseSqrt(c));
    for t in 1..=40 {
        ftrl.receive(Feedback::linear(&g)).unwrap();
        let eta = c / (t as f64).sqrt();
        let expect: Vec<f64> = g.iter().map(|gi| -eta * t as f64 * gi).collect();
        assert!(dist2(&ftrl.predict(), &expect) <= 1e-12, "t={t}");
    }
}

/// `psi(u)/eta + eta/(2 lambda) sum ||g||^2` with `psi = ||u - w_1||^2`,
/// written for the constant `eta_p = 2 eta` that matches the learner's
/// `||w - w_1||^2 / (2 eta)` regularizer.
#[test]
fn ftrl_regret_bound_on_random_sequences() {
    let lambda = NormSpec::l2().lambda;
    let ball = Ball::centered(3, 1.5);
    for seed in 0..100 {
        let mut rng = Rng::new(seed);
        let eta = rng.random_range(0.01..0.5);
        let n = rng.random_range(50..400);
        let grads: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut ftrl = Ftrl::new(ball.clone(), StepSchedule::Constant(eta));
        let plays = play(&mut ftrl, &grads);
        let g_sq: f64 = grads.iter().map(|g| norm2_sq(g)).sum();
        let eta_p = 2.0 * eta;
        let mut competitors = vec![best_linear(&ball, &grads), ball.center.clone()];
        competitors.push(ball.project(&[rng.random_range(-2.0..2.0), 0.4, -0.7]));
        for u in competitors {
            let psi = norm2_sq(&u);
            let bound = psi / eta_p + eta_p / (2.0 * lambda) * g_sq;
            let regret = linear_regret(&plays, &grads, &u);
            assert!(regret <= bound + 1e-9 * bound.abs().max(1.0), "seed {seed}: {regret} > {bound}");
        }
    }
}

fn run_optimistic(ball: &Ball, grads: &[Vec<f64>], hints: impl Fn(usize) -> Option<Vec<f64>>) -> (Vec<Vec<f64>>, OptimisticOmd) {
    let mut omd = OptimisticOmd::new(ball.clone(), NormSpec::l2());
    let mut plays = Vec::new();
    for (i, g) in grads.iter().enumerate() {
        plays.push(omd.predict());
        let h = hints(i + 1);
        omd.receive(Feedback {
            gradient: g,
            hint_next: h.as_deref(),
            strong_convexity: 0.0,
        })
        .unwrap();
    }
    (plays, omd)
}

#[test]
fn optimistic_perfect_hints_give_logarithmic_regret() {
    let ball = Ball::centered(4, 1.0);
    for seed in 0..10 {
        let mut rng = Rng::new(100 + seed);
        let t = 2000;
        let grads: Vec<Vec<f64>> = (0..t).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let g_hat = grads.iter().map(|g| norm2(g)).fold(0.0, f64::max);
        let (plays, omd) = run_optimistic(&ball, &grads, |next| grads.get(next).cloned());
        // only the first round misses: no hint exists before it
        assert!((omd.hint_error() - norm2_sq(&grads[0])).abs() <= 1e-12);
        let regret = linear_regret(&plays, &grads, &best_linear(&ball, &grads));
        let bound = 10.0 * ball.diameter() * g_hat * (1.0 + (t as f64).ln());
        assert!(regret <= bound, "seed {seed}: {regret} > {bound}");
    }
}

/// Zero hints reduce the learner to projected gradient descent with
/// non-increasing steps `eta_t`, whose regret is at most
/// `D^2 / (2 eta_T) + sum eta_t ||g_t||^2 / 2`.
#[test]
fn optimistic_zero_hints_match_gradient_descent_bound() {
    let ball = Ball::centered(3, 1.0);
    let d = ball.diameter();
    let lambda = NormSpec::l2().lambda;
    let mut rng = Rng::new(7);
    let grads: Vec<Vec<f64>> = (0..1500).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let zeros = vec![0.0; 3];
    let (plays, _) = run_optimistic(&ball, &grads, |_| Some(zeros.clone()));
    let floor = norm2(&grads[0]);
    let mut miss = 0.0;
    let mut bound = 0.0;
    let mut eta = 0.0;
    for g in &grads {
        eta = d / (lambda * f64::max(miss, floor * floor)).sqrt();
        bound += 0.5 * eta * norm2_sq(g);
        miss += norm2_sq(g);
    }
    bound += d * d / (2.0 * eta);
    for u in [best_linear(&ball, &grads), ball.center.clone()] {
        let regret = linear_regret(&plays, &grads, &u);
        assert!(regret <= bound * (1.0 + 1e-9), "{regret} > {bound}");
    }
}

#[test]
fn optimistic_previous_gradient_hints_track_drift() {
    let ball = Ball::centered(2, 1.0);
    let t = 4000;
    let grads: Vec<Vec<f64>> = (1..=t)
        .map(|i| {
            let a = i as f64 / 300.0;
            vec![a.cos() + 0.3, 0.5 * a.sin()]
        })
        .collect();
    let (plays, omd) = run_optimistic(&ball, &grads, |next| Some(grads[next - 1].clone()));
    let regret = linear_regret(&plays, &grads, &best_linear(&ball, &grads));
    let fitted = regret / (ball.diameter() * omd.hint_error().sqrt());
    assert!(fitted <= 4.0, "fitted constant {fitted}");
}

#[test]
fn optimistic_missing_hint_is_treated_as_zero() {
    let ball = Ball::centered(2, 1.0);
    let mut a = OptimisticOmd::new(ball.clone(), NormSpec::l2());
    let mut b = OptimisticOmd::new(ball, NormSpec::l2());
    let zero = [0.0, 0.0];
    for g in [[0.3, -0.2], [0.1, 0.4], [-0.5, 0.0]] {
        a.receive(Feedback::linear(&g)).unwrap();
        b.receive(Feedback {
            gradient: &g,
            hint_next: Some(&zero),
            strong_convexity: 0.0,
        })
        .unwrap();
        assert_eq!(a.predict(), b.predict());
    }
}

#[test]
fn sc_osd_single_round_definition() {
    let ball = Ball::centered(2, 1.0);
    let mut sc = ScOsd::new(ball.clone());
    sc.receive(Feedback {
        gradient: &[0.4, -3.0],
        hint_next: None,
        strong_convexity: 2.0,
    })
    .unwrap();
    assert_eq!(sc.predict(), ball.project(&[-0.2, 1.5]));
}

#[test]
fn sc_osd_harmonic_steps_reach_the_minimizer() {
    // l_t(w) = (w - a)^2 / 2: w_2 = w_1 - (w_1 - a) = a and stays there
    let a = 0.35;
    let mut sc = ScOsd::new(line(1.0));
    for _ in 0..50 {
        let w = sc.predict()[0];
        sc.receive(Feedback {
            gradient: &[w - a],
            hint_next: None,
            strong_convexity: 1.0,
        })
        .unwrap();
    }
    assert!((sc.predict()[0] - a).abs() <= 1e-15);
    assert_eq!(sc.curvature_sum(), 50.0);
}

#[test]
fn sc_osd_regret_bound_on_random_quadratics() {
    let ball = Ball::centered(3, 1.0);
    for seed in 0..20 {
        let mut rng = Rng::new(300 + seed);
        let t = 1000;
        let mus: Vec<f64> = (0..t).map(|_| rng.random_range(0.5..2.0)).collect();
        let anchors: Vec<Vec<f64>> = (0..t).map(|_| (0..3).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
        let loss = |i: usize, w: &[f64]| 0.5 * mus[i] * dist2(w, &anchors[i]).powi(2);
        let mut sc = ScOsd::new(ball.clone());
        let mut plays = Vec::new();
        let mut bound = 0.0;
        let mut mu_sum = 0.0;
        for i in 0..t {
            let w = sc.predict();
            let g: Vec<f64> = w.iter().zip(&anchors[i]).map(|(w, a)| mus[i] * (w - a)).collect();
            mu_sum += mus[i];
            bound += norm2_sq(&g) / (2.0 * mu_sum);
            sc.receive(Feedback {
                gradient: &g,
                hint_next: None,
                strong_convexity: mus[i],
            })
            .unwrap();
            plays.push(w);
        }
        // weighted mean of anchors, projected, minimizes the sum
        let total: f64 = mus.iter().sum();
        let mut u = vec![0.0; 3];
        for (m, a) in mus.iter().zip(&anchors) {
            u.iter_mut().zip(a).for_each(|(ui, ai)| *ui += m * ai / total);
        }
        let u = ball.project(&u);
        let regret: f64 = (0..t).map(|i| loss(i, &plays[i]) - loss(i, &u)).sum();
        assert!(regret <= bound * (1.0 + 1e-6), "seed {seed}: {regret} > {bound}");
    }
}

#[test]
fn sc_osd_rejects_non_positive_curvature() {
    let mut sc = ScOsd::new(line(1.0));
    for mu in [0.0, -1.0, f64::NAN] {
        let fb = Feedback {
            gradient: &[1.0],
            hint_next: None,
            strong_convexity: mu,
        };
        assert!(sc.receive(fb).is_err());
    }
}

#[test]
fn parameter_free_zero_gradients_stay_at_center() {
    let ball = Ball::new(vec![0.2, -0.1], 1.0);
    let mut pf = ParameterFree::new(ball.clone(), 1.0).unwrap();
    let plays = play(&mut pf, &vec![vec![0.0, 0.0]; 100]);
    assert!(plays.iter().all(|w| w == &ball.center));
}

#[test]
fn parameter_free_regret_at_center_is_bounded_by_wealth() {
    let cap = 2.0;
    for seed in 0..10 {
        let mut rng = Rng::new(500 + seed);
        let grads = random_signs(&mut rng, 10_000, 1, cap);
        let mut pf = ParameterFree::new(line(1.0), cap).unwrap();
        let plays = play(&mut pf, &grads);
        let regret = linear_regret(&plays, &grads, &[0.0]);
        assert!(regret <= 10.0 * cap, "seed {seed}: {regret}");
        assert_eq!(pf.clip_count(), 0);
    }
}

#[test]
fn parameter_free_constant_gradient_scaling() {
    let cap = 1.0;
    for e in 10..=14 {
        let t = 1usize << e;
        let grads = vec![vec![-cap]; t];
        let mut pf = ParameterFree::new(line(1.0), cap).unwrap();
        let plays = play(&mut pf, &grads);
        let regret = linear_regret(&plays, &grads, &[1.0]);
        let tf = t as f64;
        let ratio = regret / (cap * (tf * tf.ln()).sqrt());
        assert!(ratio <= 5.0, "T={t}: ratio {ratio}");
    }
}

#[test]
fn parameter_free_clips_and_counts_large_gradients() {
    let mut pf = ParameterFree::new(line(1.0), 1.0).unwrap();
    play(&mut pf, &[vec![5.0], vec![0.5], vec![-3.0]]);
    assert_eq!(pf.clip_count(), 2);
    assert!(ParameterFree::new(line(1.0), 0.0).is_err());
    assert!(ParameterFree::new(line(1.0), f64::INFINITY).is_err());
}

#[test]
fn every_learner_plays_inside_the_domain() {
    let ball = Ball::new(vec![1.0, -2.0, 0.5], 0.75);
    for kind in [
        LearnerKind::Osd,
        LearnerKind::Ftrl,
        LearnerKind::OptimisticOmd,
        LearnerKind::ScOsd,
        LearnerKind::ParameterFree,
    ] {
        let mut rng = Rng::new(kind as u64);
        let mut learner = kind.build(&ball, 1e3).unwrap();
        for _ in 0..10_000 {
            let w = learner.predict();
            assert!(ball.contains(&w), "{}: {w:?} outside", kind.as_str());
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            let g: Vec<f64> = (0..3).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..3).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            learner
                .receive(Feedback {
                    gradient: &g,
                    hint_next: Some(&h),
                    strong_convexity: rng.random_range(0.1..5.0),
                })
                .unwrap();
        }
    }
}

#[test]
fn learner_kind_round_trips_through_strings() {
    for kind in [
        LearnerKind::Osd,
        LearnerKind::Ftrl,
        LearnerKind::OptimisticOmd,
        LearnerKind::ScOsd,
        LearnerKind::ParameterFree,
    ] {
        assert_eq!(kind.as_str().parse::<LearnerKind>().unwrap(), kind);
        let json = serde_json::to_string(&kind).unwrap();
        assert_eq!(json, format!("\"{}\"", kind.as_str()));
    }
    assert!("sgd".parse::<LearnerKind>().is_err());
}

#[test]
fn ledger_incremental_sums_match_the_trace() {
    let mut rng = Rng::new(42);
    let center = vec![0.1, 0.2, -0.3];
    let mut ledger = RegretLedger::new(center.clone());
    for i in 0..5000 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..3).map(|_| rng.random_range(-100.0..100.0)).collect();
        match i % 3 {
            0 => ledger.record_linear(&w, &g),
            1 => {
                let sent: Vec<f64> = g.iter().map(|v| v + 1.0).collect();
                ledger.record(&w, &sent, &g, Regularizer::Quadratic {
                    weight: 0.7,
                    anchor: vec![0.0, 0.5, 0.0],
                });
            }
            _ => ledger.record(&w, &g, &g, Regularizer::Radial { xi: 2.0, nu: 0.25 }),
        }
    }
    assert_eq!(ledger.rounds(), 5000);
    for _ in 0..20 {
        let u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b) = (ledger.sent_regret(&u), ledger.sent_regret_from_trace(&u));
        assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()), "{a} vs {b}");
        let (a, b) = (ledger.loss_regret(&u), ledger.loss_regret_from_trace(&u));
        assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()), "{a} vs {b}");
    }
}

#[test]
fn ledger_regularizers_enter_loss_regret_only() {
    let mut ledger = RegretLedger::new(vec![0.0]);
    ledger.record(&[1.0], &[0.0], &[0.0], Regularizer::Radial { xi: 3.0, nu: 1.0 });
    // loss at w=1 is 3 + 1, at u=0 it is 0
    assert_eq!(ledger.loss_regret(&[0.0]), 4.0);
    assert_eq!(ledger.sent_regret(&[0.0]), 0.0);
    assert_eq!(ledger.sent_sq_sum(), 0.0);
    assert_eq!(ledger.plays().count(), 1);
}

mod common;

use common::*;
use dpn_core::policy::ActionLabels;
use dpn_core::seed;
use dpn_core::MasterAction;

#[test]
fn analytic_gradients_match_central_differences() {
    let (lp, sl) = gradient_check(20, 11);
    assert!(lp <= 1e-4, "score gradient relative error {lp:e}");
    assert!(sl <= 1e-4, "supervised gradient relative error {sl:e}");
}

#[test]
fn gradients_hold_for_saturated_and_small_weights() {
    let mut rng = seed::rng(3);
    for scale in [0.01, 3.0] {
        let net = random_net(&mut rng, scale);
        let x = random_x(&mut rng);
        let a = random_action(&mut rng);
        let g = net.grad_log_prob(&x, &a).unwrap();
        let fd = central_diff(&net, 1e-5, |p| p.log_prob(&x, &a).unwrap());
        assert!(rel_err(&g, &fd) <= 1e-4, "scale {scale}");
        let labels = ActionLabels::from(MasterAction::bye());
        let (_, g) = net.grad_supervised_loss(&x, &labels).unwrap();
        let fd = central_diff(&net, 1e-5, |p| p.supervised_loss(&x, &labels).unwrap());
        assert!(rel_err(&g, &fd) <= 1e-4, "scale {scale}");
    }
}

#[test]
fn legal_actions_carry_all_probability_mass() {
    assert!(probability_completeness(10, 5) <= 1e-6);
}

#[test]
fn relative_error_helper() {
    assert_eq!(rel_err(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
    assert_eq!(rel_err(&[0.0, 2.0], &[0.0, 1.0]), 0.5);
    assert_eq!(rel_err(&[0.0], &[0.0]), 0.0);
}

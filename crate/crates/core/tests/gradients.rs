#[path = "support/gradcheck.rs"]
mod gradcheck;

fn run(case: fn() -> gradcheck::Outcome) {
    match case() {
        Ok(worst) => eprintln!("worst rel err {worst:e}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn conv_grad() {
    run(gradcheck::conv);
}

#[test]
fn dense_grad() {
    run(gradcheck::dense);
}

#[test]
fn relu_grad() {
    run(gradcheck::relu);
}

#[test]
fn max_pool_grad() {
    run(gradcheck::max_pool);
}

#[test]
fn upsample_grad() {
    run(gradcheck::upsample);
}

#[test]
fn adaptive_pool_grad() {
    run(gradcheck::adaptive_pool);
}

#[test]
fn concat_is_stacking() {
    run(gradcheck::concat);
}

#[test]
fn critic_grad() {
    run(gradcheck::critic);
}

#[test]
fn unet_actor_grad() {
    run(gradcheck::unet_actor);
}

#[test]
fn vector_actor_grad() {
    run(gradcheck::vector_actor);
}

#[test]
fn log_prob_grad_matches_differences() {
    run(gradcheck::gaussian_log_prob);
}

#[test]
fn clamped_log_std_blocks_gradient() {
    run(gradcheck::clamped_log_std);
}

#[test]
fn actor_loss_grad() {
    run(gradcheck::actor_objective);
}

#[test]
fn critic_loss_grad() {
    run(gradcheck::critic_objective);
}

#[test]
fn every_case_is_listed() {
    assert_eq!(gradcheck::CASES.len(), 14);
}

use paretoflow_core::envs::objectives::GridObjective;
use paretoflow_core::envs::HyperGridEnv;

fn main() {
    for (a, b) in [
        (GridObjective::Branin, GridObjective::Currin),
        (GridObjective::Branin, GridObjective::Shubert),
        (GridObjective::Currin, GridObjective::Shubert),
        (GridObjective::Shubert, GridObjective::Beale),
    ] {
        let env = HyperGridEnv::new(2, 32, vec![a, b]).unwrap();
        let front = env.true_front().unwrap();
        println!("{:?}-{:?}: front size {}", a, b, front.len());
    }
}

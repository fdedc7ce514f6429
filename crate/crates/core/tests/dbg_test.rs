#[test]
fn debug_identical_grad() {
    use splat4d_core::grid::Grid;
    use splat4d_core::losses::color_loss;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = Grid::from_data(16, 16, 3, (0..16*16*3).map(|_| rng.gen_range(0.05..0.95)).collect());
    let out = color_loss(&a, &a, None, 0.2).unwrap();
    let max = out.d_pred.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("value = {:e}, max grad = {:e}", out.value, max);
}

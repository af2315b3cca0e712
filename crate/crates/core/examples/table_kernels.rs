// Non-constant kernels from the JSON table format.

use bosenet::collision::CollisionOperator;
use bosenet::{Kernel, Kernels, Operator, StateF};

const K12: &str = r#"[
  { "indices": [1, 1, 2], "value": 0.5 },
  { "indices": [1, 2, 3], "value": 2.0 }
]"#;

pub fn run() -> bosenet::Result<()> {
    let k12 = Kernel::from_json(3, K12)?;
    // permutations share one entry; missing tuples are zero
    println!("K(2,1,1) = {}, K(3,2,1) = {}, K(3,3,3) = {}", k12.value(&[2, 1, 1]), k12.value(&[3, 2, 1]), k12.value(&[3, 3, 3]));

    let k22 = Kernel::from_fn(4, 3, |idx| 1.0 / idx.iter().sum::<usize>() as f64)?;
    let kernels = Kernels::default().with(Operator::C12, k12).with(Operator::C22, k22);
    let op = CollisionOperator::new(3, &kernels)?;
    println!("velocity {:?}", op.rhs(&StateF::new(vec![1.0, 0.5, 0.25])?)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> bosenet::Result<()> {
    run()
}

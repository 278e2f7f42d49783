// Dyadic Brownian paths: refinement never changes an increment already drawn.

use rieszgas::brownian::{BrownianPath, PathGrid, PathKey};

pub fn run_example() -> rieszgas::Result<()> {
    let grid = PathGrid::new(0.5, 20)?;
    let key = PathKey {
        seed: 1,
        replica: 0,
        particle: 0,
    };
    let mut coarse = BrownianPath::new(key, grid);
    let mut fine = BrownianPath::new(key, grid);
    let whole = coarse.increment(0.0, 1.0)?;
    let mut parts = 0.0;
    let h = 1.0 / 64.0;
    for k in 0..64 {
        parts += fine.increment(k as f64 * h, (k + 1) as f64 * h)?;
    }
    println!("W(1) - W(0): one step {whole:.12}, 64 steps {parts:.12}");
    println!("same query again: {:.12}", fine.increment(0.0, 1.0)?);
    Ok(())
}

fn main() -> rieszgas::Result<()> {
    run_example()
}

use std::time::Instant;

fn main() {
    // The conv workhorse shape: (batch*positions, patch) x (patch, out_ch).
    let (m, k, n) = (4096usize, 288usize, 32usize);
    let a = vec![1.0f64; m * k];
    let b = vec![1.0f64; k * n];
    let mut c = vec![0.0f64; m * n];
    let reps = 50;
    let t0 = Instant::now();
    for _ in 0..reps {
        unsafe {
            matrixmultiply::dgemm(
                m, k, n, 1.0, a.as_ptr(), k as isize, 1,
                b.as_ptr(), n as isize, 1, 0.0, c.as_mut_ptr(), n as isize, 1,
            );
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    let gflops = (2.0 * (m * k * n) as f64 * reps as f64) / dt / 1e9;
    println!("gemm {m}x{k}x{n}: {gflops:.2} GFLOP/s");

    // GCN shape.
    let (m2, k2, n2) = (480usize, 33usize, 32usize);
    let a2 = vec![1.0f64; m2 * k2];
    let b2 = vec![1.0f64; k2 * n2];
    let mut c2 = vec![0.0f64; m2 * n2];
    let reps2 = 2000;
    let t0 = Instant::now();
    for _ in 0..reps2 {
        unsafe {
            matrixmultiply::dgemm(
                m2, k2, n2, 1.0, a2.as_ptr(), k2 as isize, 1,
                b2.as_ptr(), n2 as isize, 1, 0.0, c2.as_mut_ptr(), n2 as isize, 1,
            );
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    let gflops = (2.0 * (m2 * k2 * n2) as f64 * reps2 as f64) / dt / 1e9;
    println!("gemm {m2}x{k2}x{n2}: {gflops:.2} GFLOP/s");
}

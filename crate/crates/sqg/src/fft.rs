//! Cached 2-D complex FFT built on 1-D rustfft plans. Transforms are
//! unnormalized: `forward` computes Σ f(x_j) e^{−ik·x_j} and `inverse`
//! computes Σ c_k e^{+ik·x_j}.

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone)]
pub(crate) struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn cache() -> &'static Mutex<HashMap<usize, Fft2>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Fft2>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Fft2 {
    pub fn get(n: usize) -> Fft2 {
        let mut map = cache().lock().unwrap();
        map.entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Fft2 {
                    n,
                    fwd: planner.plan_fft_forward(n),
                    inv: planner.plan_fft_inverse(n),
                }
            })
            .clone()
    }

    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.transform(data, true);
    }

    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.transform(data, false);
    }

    fn transform(&self, data: &mut Array2<Complex64>, forward: bool) {
        let n = self.n;
        assert_eq!(data.dim(), (n, n), "field size does not match plan");
        let plan = if forward { &self.fwd } else { &self.inv };
        // rows (contiguous in standard layout)
        for mut row in data.rows_mut() {
            plan.process(row.as_slice_mut().expect("row not contiguous"));
        }
        // columns via a scratch buffer
        let mut col = vec![Complex64::default(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[(i, j)];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[(i, j)] = col[i];
            }
        }
    }
}

use serde::{Deserialize, Serialize};

const CLIP: f64 = 10.0;

/// Running per-component mean and variance (Welford), used to whiten
/// observations before they reach the networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    pub count: f64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn update(&mut self, x: &[f64]) {
        self.count += 1.0;
        for ((m, s), v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / self.count;
            *s += d * (v - *m);
        }
    }

    pub fn variance(&self, i: usize) -> f64 {
        if self.count < 2.0 {
            1.0
        } else {
            self.m2[i] / self.count
        }
    }

    pub fn normalize_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(x.iter().enumerate().map(|(i, v)| {
            ((v - self.mean[i]) / (self.variance(i) + 1e-8).sqrt()).clamp(-CLIP, CLIP)
        }));
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        self.normalize_into(x, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_batch_statistics() {
        let data = [[1.0, -2.0], [3.0, 0.0], [5.0, 7.0], [-1.0, 1.0]];
        let mut norm = RunningNorm::new(2);
        for x in &data {
            norm.update(x);
        }
        for i in 0..2 {
            let mean = data.iter().map(|x| x[i]).sum::<f64>() / 4.0;
            let var = data.iter().map(|x| (x[i] - mean).powi(2)).sum::<f64>() / 4.0;
            assert!((norm.mean[i] - mean).abs() < 1e-12);
            assert!((norm.variance(i) - var).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_component_does_not_blow_up() {
        let mut norm = RunningNorm::new(1);
        for _ in 0..10 {
            norm.update(&[0.0]);
        }
        assert_eq!(norm.normalize(&[0.0]), vec![0.0]);
        assert_eq!(norm.normalize(&[1.0]), vec![CLIP]);
    }
}

use super::Scalar;

/// Real-valued weights updated by the optimizer. Binarized layers use
/// `sign(values)` in the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTensor<S> {
    pub shape: Vec<usize>,
    pub values: Vec<S>,
}

impl<S: Scalar> LatentTensor<S> {
    pub fn new(shape: Vec<usize>, values: Vec<S>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), values.len(), "shape/value length mismatch");
        LatentTensor { shape, values }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        LatentTensor { shape, values: vec![S::ZERO; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn binarized(&self) -> Vec<S> {
        self.values.iter().map(|&x| super::ops::sign(x)).collect()
    }

    pub fn clip(&mut self, limit: S) {
        for v in &mut self.values {
            if *v > limit {
                *v = limit;
            } else if *v < -limit {
                *v = -limit;
            }
        }
    }
}

/// A batch of `n` samples, each a `len x ch` channels-last matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<S> {
    pub n: usize,
    pub len: usize,
    pub ch: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Batch<S> {
    pub fn zeros(n: usize, len: usize, ch: usize) -> Self {
        Batch { n, len, ch, data: vec![S::ZERO; n * len * ch] }
    }

    /// Stacks single-channel vectors into a batch.
    pub fn from_vectors(vectors: &[Vec<S>]) -> Self {
        let len = vectors.first().map_or(0, Vec::len);
        assert!(vectors.iter().all(|v| v.len() == len), "ragged batch");
        Batch {
            n: vectors.len(),
            len,
            ch: 1,
            data: vectors.concat(),
        }
    }

    pub fn sample_size(&self) -> usize {
        self.len * self.ch
    }

    pub fn sample(&self, i: usize) -> &[S] {
        let s = self.sample_size();
        &self.data[i * s..(i + 1) * s]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [S] {
        let s = self.sample_size();
        &mut self.data[i * s..(i + 1) * s]
    }
}

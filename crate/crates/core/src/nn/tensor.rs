use super::NnError;

/// Dense row-major array of `f64` with an optional gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NnError> {
        check_shape(&shape)?;
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NnError::ShapeMismatch {
                context: "tensor".into(),
                expected: format!("{expected} elements for shape {shape:?}"),
                found: format!("{} elements", data.len()),
            });
        }
        Ok(Self { shape, data, grad: None })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self, NnError> {
        check_shape(&shape)?;
        let n = shape.iter().product();
        Ok(Self { shape, data: vec![0.0; n], grad: None })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    /// Gradient buffer, allocated as zeros on first access.
    pub fn grad_mut(&mut self) -> &mut [f64] {
        let n = self.data.len();
        self.grad.get_or_insert_with(|| vec![0.0; n])
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.fill(0.0);
        }
    }

    /// Borrow data and gradient at the same time (gradient allocated if absent).
    pub fn data_and_grad_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let n = self.data.len();
        let grad = self.grad.get_or_insert_with(|| vec![0.0; n]);
        (&mut self.data, grad)
    }

    /// Same data viewed under a new shape with the same element count.
    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self, NnError> {
        check_shape(&shape)?;
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(NnError::ShapeMismatch {
                context: "reshape".into(),
                expected: format!("{} elements", self.data.len()),
                found: format!("shape {shape:?}"),
            });
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Leading dimension, i.e. the batch size for batched tensors.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Element count of one entry along the leading dimension.
    pub fn row_len(&self) -> usize {
        self.shape[1..].iter().product()
    }
}

fn check_shape(shape: &[usize]) -> Result<(), NnError> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(NnError::InvalidShape(shape.to_vec()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_dimension() {
        assert!(matches!(Tensor::zeros(vec![3, 0]), Err(NnError::InvalidShape(_))));
        assert!(Tensor::zeros(vec![]).is_err());
    }

    #[test]
    fn length_must_match_shape() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
        let t = Tensor::new(vec![2, 2], vec![1.0; 4]).unwrap();
        assert_eq!(t.row_len(), 2);
        assert!(t.grad().is_none());
    }

    #[test]
    fn grad_is_allocated_lazily_with_matching_length() {
        let mut t = Tensor::zeros(vec![3, 4]).unwrap();
        assert_eq!(t.grad_mut().len(), 12);
        t.grad_mut()[5] = 2.0;
        t.zero_grad();
        assert!(t.grad().unwrap().iter().all(|&g| g == 0.0));
    }
}

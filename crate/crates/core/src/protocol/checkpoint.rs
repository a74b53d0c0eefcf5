use std::collections::BTreeMap;

use super::ProtocolError;
use crate::nn::{ArchSpec, Network, Tensor};

/// Parameters of a trained network with the architecture needed to rebuild
/// it and free-form provenance (`config`, `labeling`, `epoch`, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub arch: ArchSpec,
    pub num_classes: usize,
    pub params: Vec<Tensor>,
    pub provenance: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn from_network(net: &Network, provenance: BTreeMap<String, String>) -> Self {
        Self {
            arch: net.arch().clone(),
            num_classes: net.num_classes(),
            params: net.params().into_iter().map(|p| Tensor::new(p.shape().to_vec(), p.data().to_vec()).expect("valid")).collect(),
            provenance,
        }
    }

    pub fn to_network(&self) -> Result<Network, ProtocolError> {
        let mut net = Network::new(&self.arch, self.num_classes, 0, 0)?;
        net.load_params(&self.params)?;
        Ok(net)
    }

    /// Parameters of every layer but the head.
    pub fn body_params(&self) -> &[Tensor] {
        &self.params[..self.params.len().saturating_sub(2)]
    }

    /// `"<arch> head:<classes>"`, the descriptor stored in checkpoint files.
    pub fn descriptor(&self) -> String {
        format!("{} head:{}", self.arch, self.num_classes)
    }

    pub fn parse_descriptor(text: &str) -> Result<(ArchSpec, usize), ProtocolError> {
        let (arch, head) = text
            .rsplit_once(" head:")
            .ok_or_else(|| ProtocolError::InvalidArgument(format!("descriptor `{text}` lacks `head:<classes>`")))?;
        let classes = head
            .parse()
            .map_err(|_| ProtocolError::InvalidArgument(format!("bad head width `{head}`")))?;
        Ok((arch.parse()?, classes))
    }
}

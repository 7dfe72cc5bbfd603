//! Runtime configuration and document loading.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use isabel_core::{fixtures, Pipeline, PipelineConfig, PipelineError};
use thiserror::Error;

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("[load] cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Where documents come from and how the service listens. A missing
/// `kg_path` means the bundled graph.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub kg_path: Option<PathBuf>,
    pub lexicon_path: Option<PathBuf>,
    pub log_path: Option<PathBuf>,
    pub listen: IpAddr,
    pub port: u16,
    pub pipeline: PipelineConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            kg_path: None,
            lexicon_path: None,
            log_path: None,
            listen: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn socket_addr(&self) -> SocketAddr {
        SocketAddr::new(self.listen, self.port)
    }

    /// Read both documents from disk and build a validated pipeline.
    pub fn load_pipeline(&self) -> Result<Pipeline, LoadError> {
        let kg = match &self.kg_path {
            Some(path) => read(path)?,
            None => fixtures::KG_JSON.as_bytes().to_vec(),
        };
        let lexicon = self.lexicon_path.as_deref().map(read).transpose()?;
        Ok(Pipeline::from_documents(&kg, lexicon.as_deref(), self.pipeline)?)
    }
}

fn read(path: &Path) -> Result<Vec<u8>, LoadError> {
    std::fs::read(path).map_err(|source| LoadError::Read {
        path: path.to_path_buf(),
        source,
    })
}

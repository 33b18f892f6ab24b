use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use weaklink::config::{OutputFormat, RunConfig};
use weaklink::{Error, Result};

use crate::GlobalArgs;

/// Resolved configuration and output settings for one invocation.
pub struct Context {
    pub cfg: RunConfig,
    pub hash: String,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub seed: u64,
    written: std::cell::RefCell<Vec<String>>,
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

impl Context {
    pub fn new(args: &GlobalArgs) -> Result<Self> {
        let (cfg, bytes) = match &args.config {
            Some(path) => {
                let text = read(path)?;
                let cfg = RunConfig::from_json(&text).map_err(|e| match e {
                    Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
                    other => other,
                })?;
                (cfg, text.into_bytes())
            }
            None => {
                let cfg = RunConfig::default();
                let text = serde_json::to_vec(&cfg).expect("default config serialises");
                (cfg, text)
            }
        };
        let hash = hex::encode(Sha256::digest(&bytes));
        let out = args
            .out
            .clone()
            .or_else(|| cfg.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let format = args.format.map(Into::into).unwrap_or(cfg.output.format);
        let seed = args.seed.or(cfg.seed).unwrap_or(0);
        Ok(Context {
            cfg,
            hash,
            out,
            format,
            seed,
            written: Default::default(),
        })
    }

    pub fn header(&self) -> Vec<String> {
        vec![format!("config_sha256={}", self.hash)]
    }

    pub fn write(&self, name: &str, text: &str) -> Result<()> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, text)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        self.written.borrow_mut().push(path.display().to_string());
        Ok(())
    }

    /// Writes a JSON document with the config hash added at the top level.
    pub fn write_json(&self, name: &str, mut value: serde_json::Value) -> Result<()> {
        if let Some(map) = value.as_object_mut() {
            map.insert("config_sha256".into(), self.hash.clone().into());
        }
        let text = serde_json::to_string_pretty(&value).expect("value serialises") + "\n";
        self.write(name, &text)
    }

    pub fn files(&self) -> Vec<String> {
        self.written.borrow().clone()
    }
}

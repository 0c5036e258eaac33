use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::CliError;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Runtime(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Opens `name` for writing, runs `f`, and flushes.
    pub fn write_with<F>(&self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::Runtime(e.to_string()))?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    /// `config.json` holds the resolved config; `manifest.json` adds the command
    /// and version so `velgrad <command> --config config.json` repeats the run.
    pub fn write_manifest<T: Serialize>(&self, command: &str, config: &T) -> Result<(), CliError> {
        self.write_json("config.json", config)?;
        self.write_json(
            "manifest.json",
            &json!({
                "command": command,
                "version": env!("CARGO_PKG_VERSION"),
                "rerun": format!("velgrad {command} --config config.json"),
                "config": config,
            }),
        )
    }
}

//! `manifest.csv`: every file under the output directory with its SHA-256.

use std::fs;
use std::path::{Path, PathBuf};

use rcmc::Result;
use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "manifest.csv";

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

pub fn write(root: &Path) -> Result<()> {
    if !root.is_dir() {
        return Ok(());
    }
    let mut files = Vec::new();
    collect(root, &mut files)?;
    let mut rel: Vec<(String, PathBuf)> = files
        .into_iter()
        .filter_map(|p| {
            let r = p.strip_prefix(root).ok()?.to_string_lossy().replace('\\', "/");
            (r != FILE_NAME && !r.ends_with(".tmp")).then_some((r, p))
        })
        .collect();
    rel.sort();
    let mut body = String::from("path,sha256,bytes\n");
    for (r, p) in rel {
        let data = fs::read(&p)?;
        body.push_str(&format!("{r},{},{}\n", hex::encode(Sha256::digest(&data)), data.len()));
    }
    fs::write(root.join(FILE_NAME), body)?;
    Ok(())
}

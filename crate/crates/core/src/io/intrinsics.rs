//! Camera intrinsics as JSON: all fields numeric, all required.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};

pub fn read_intrinsics(path: impl AsRef<Path>) -> Result<CameraIntrinsics> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let intr: CameraIntrinsics =
        serde_json::from_reader(reader).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    intr.validate()?;
    Ok(intr)
}

pub fn write_intrinsics(intr: &CameraIntrinsics, path: impl AsRef<Path>) -> Result<()> {
    intr.validate()?;
    let mut writer = BufWriter::new(File::create(path.as_ref())?);
    serde_json::to_writer_pretty(&mut writer, intr).map_err(|e| Error::Parse {
        path: path.as_ref().to_path_buf(),
        message: e.to_string(),
    })?;
    use std::io::Write;
    writer.flush()?;
    Ok(())
}

//! The `.rec` shard container.
//!
//! Little-endian throughout:
//!
//! ```text
//! "FRRC" | version: u32 = 1 | count: u32
//! count x ( label: u32 | height: u32 | width: u32 | channels: u32 | pixels: u8[h*w*c] )
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::RasterImage;

pub const SHARD_MAGIC: &[u8; 4] = b"FRRC";
pub const SHARD_VERSION: u32 = 1;
const HEADER_LEN: u64 = 12;
const RECORD_HEADER_LEN: u64 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleRecord {
    pub label: u32,
    pub height: u32,
    pub width: u32,
    pub channels: u32,
    pub pixels: Vec<u8>,
}

impl ExampleRecord {
    pub fn from_image(label: u32, img: &RasterImage) -> Result<Self> {
        img.expect(crate::imaging::Colorspace::Rgb, "ExampleRecord::from_image")?;
        Ok(Self {
            label,
            height: img.height() as u32,
            width: img.width() as u32,
            channels: 3,
            pixels: img.to_u8(),
        })
    }

    pub fn to_image(&self) -> Result<RasterImage> {
        if self.channels != 3 {
            return Err(Error::invalid(format!("record has {} channels, expected 3", self.channels)));
        }
        RasterImage::from_rgb8(self.height as usize, self.width as usize, &self.pixels)
    }

    fn payload_len(&self) -> usize {
        self.height as usize * self.width as usize * self.channels as usize
    }
}

fn fmt_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: Some(path.to_path_buf()),
        offset,
        message: message.into(),
    }
}

/// Streaming shard writer; the record count in the header is patched on
/// [`ShardWriter::finish`].
pub struct ShardWriter {
    path: PathBuf,
    out: BufWriter<File>,
    count: u32,
}

impl ShardWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut header = Vec::with_capacity(HEADER_LEN as usize);
        header.extend_from_slice(SHARD_MAGIC);
        header.extend_from_slice(&SHARD_VERSION.to_le_bytes());
        header.extend_from_slice(&0u32.to_le_bytes());
        out.write_all(&header).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
            count: 0,
        })
    }

    pub fn append(&mut self, rec: &ExampleRecord) -> Result<()> {
        if rec.pixels.len() != rec.payload_len() {
            return Err(Error::invalid(format!(
                "record payload is {} bytes, dims {}x{}x{} need {}",
                rec.pixels.len(),
                rec.height,
                rec.width,
                rec.channels,
                rec.payload_len()
            )));
        }
        let io = |e| Error::io(&self.path, e);
        let mut head = [0u8; RECORD_HEADER_LEN as usize];
        for (i, v) in [rec.label, rec.height, rec.width, rec.channels].into_iter().enumerate() {
            head[i * 4..i * 4 + 4].copy_from_slice(&v.to_le_bytes());
        }
        self.out.write_all(&head).map_err(io)?;
        self.out.write_all(&rec.pixels).map_err(io)?;
        self.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u32> {
        let path = self.path.clone();
        let io = |e| Error::io(&path, e);
        self.out.flush().map_err(io)?;
        let mut file = self.out.into_inner().map_err(|e| io(e.into_error()))?;
        file.seek(SeekFrom::Start(8)).map_err(io)?;
        file.write_all(&self.count.to_le_bytes()).map_err(io)?;
        file.sync_all().map_err(io)?;
        Ok(self.count)
    }
}

pub fn write_shard(path: &Path, records: &[ExampleRecord]) -> Result<()> {
    let mut w = ShardWriter::create(path)?;
    for r in records {
        w.append(r)?;
    }
    w.finish()?;
    Ok(())
}

/// Sequential reader over one shard file.
pub struct ShardReader {
    path: PathBuf,
    input: BufReader<File>,
    offset: u64,
    remaining: u32,
    file_len: u64,
}

impl ShardReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let mut input = BufReader::new(file);
        let mut header = [0u8; HEADER_LEN as usize];
        read_fully(&mut input, &mut header).map_err(|got| {
            fmt_err(path, got as u64, "truncated shard header")
        })?;
        if &header[0..4] != SHARD_MAGIC {
            return Err(fmt_err(path, 0, "bad shard magic"));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != SHARD_VERSION {
            return Err(fmt_err(path, 4, format!("unsupported shard version {version}")));
        }
        let count = u32::from_le_bytes(header[8..12].try_into().unwrap());
        Ok(Self {
            path: path.to_path_buf(),
            input,
            offset: HEADER_LEN,
            remaining: count,
            file_len,
        })
    }

    pub fn remaining(&self) -> u32 {
        self.remaining
    }

    /// Byte offset of the next record.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn read_record(&mut self) -> Result<ExampleRecord> {
        let start = self.offset;
        let mut head = [0u8; RECORD_HEADER_LEN as usize];
        read_fully(&mut self.input, &mut head)
            .map_err(|got| fmt_err(&self.path, start + got as u64, "truncated record header"))?;
        let field = |i: usize| u32::from_le_bytes(head[i * 4..i * 4 + 4].try_into().unwrap());
        let (label, height, width, channels) = (field(0), field(1), field(2), field(3));
        let len = height as u64 * width as u64 * channels as u64;
        let payload_at = start + RECORD_HEADER_LEN;
        if payload_at + len > self.file_len {
            return Err(fmt_err(
                &self.path,
                payload_at,
                format!("record payload of {len} bytes runs past end of file ({} bytes)", self.file_len),
            ));
        }
        let mut pixels = vec![0u8; len as usize];
        read_fully(&mut self.input, &mut pixels)
            .map_err(|got| fmt_err(&self.path, payload_at + got as u64, "truncated record payload"))?;
        self.offset = payload_at + len;
        Ok(ExampleRecord {
            label,
            height,
            width,
            channels,
            pixels,
        })
    }
}

impl Iterator for ShardReader {
    type Item = Result<ExampleRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let rec = self.read_record();
        match rec {
            Ok(_) => self.remaining -= 1,
            Err(_) => self.remaining = 0,
        }
        Some(rec)
    }
}

/// Fill `buf`, returning the number of bytes obtained on short reads.
fn read_fully(r: &mut impl Read, buf: &mut [u8]) -> std::result::Result<(), usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => return Err(got),
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(_) => return Err(got),
        }
    }
    Ok(())
}

/// Location of one record inside a set of shard files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordLocation {
    pub shard: usize,
    pub offset: u64,
    pub label: u32,
}

/// Random-access view over shard files, built by scanning record headers.
pub struct IndexedShards {
    paths: Vec<PathBuf>,
    files: Vec<File>,
    index: Vec<RecordLocation>,
}

impl IndexedShards {
    pub fn open(paths: &[PathBuf]) -> Result<Self> {
        let mut files = Vec::with_capacity(paths.len());
        let mut index = Vec::new();
        for (shard, path) in paths.iter().enumerate() {
            let mut reader = ShardReader::open(path)?;
            let count = reader.remaining();
            for _ in 0..count {
                let offset = reader.offset();
                // headers only; skip payloads
                let mut head = [0u8; RECORD_HEADER_LEN as usize];
                read_fully(&mut reader.input, &mut head)
                    .map_err(|got| fmt_err(path, offset + got as u64, "truncated record header"))?;
                let field = |i: usize| u32::from_le_bytes(head[i * 4..i * 4 + 4].try_into().unwrap());
                let len = field(1) as u64 * field(2) as u64 * field(3) as u64;
                let payload_at = offset + RECORD_HEADER_LEN;
                if payload_at + len > reader.file_len {
                    return Err(fmt_err(path, payload_at, "record payload runs past end of file"));
                }
                reader
                    .input
                    .seek_relative(len as i64)
                    .map_err(|e| Error::io(path, e))?;
                reader.offset = payload_at + len;
                index.push(RecordLocation {
                    shard,
                    offset,
                    label: field(0),
                });
            }
            files.push(File::open(path).map_err(|e| Error::io(path, e))?);
        }
        Ok(Self {
            paths: paths.to_vec(),
            files,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn locations(&self) -> &[RecordLocation] {
        &self.index
    }

    pub fn get(&mut self, i: usize) -> Result<ExampleRecord> {
        let loc = self.index[i];
        let path = &self.paths[loc.shard];
        let file = &mut self.files[loc.shard];
        file.seek(SeekFrom::Start(loc.offset)).map_err(|e| Error::io(path, e))?;
        let mut head = [0u8; RECORD_HEADER_LEN as usize];
        file.read_exact(&mut head).map_err(|e| Error::io(path, e))?;
        let field = |i: usize| u32::from_le_bytes(head[i * 4..i * 4 + 4].try_into().unwrap());
        let (label, height, width, channels) = (field(0), field(1), field(2), field(3));
        let mut pixels = vec![0u8; height as usize * width as usize * channels as usize];
        file.read_exact(&mut pixels).map_err(|e| Error::io(path, e))?;
        Ok(ExampleRecord {
            label,
            height,
            width,
            channels,
            pixels,
        })
    }
}

//! Binary PGM (`P5`) and PPM (`P6`) with maxval 255.

use blurbench_core::Image;

use crate::error::PnmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnmFormat {
    Pgm,
    Ppm,
}

impl PnmFormat {
    pub fn magic(self) -> &'static [u8; 2] {
        match self {
            PnmFormat::Pgm => b"P5",
            PnmFormat::Ppm => b"P6",
        }
    }

    pub fn channels(self) -> usize {
        match self {
            PnmFormat::Pgm => 1,
            PnmFormat::Ppm => 3,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            PnmFormat::Pgm => "pgm",
            PnmFormat::Ppm => "ppm",
        }
    }

    pub fn for_channels(channels: usize) -> Option<Self> {
        match channels {
            1 => Some(PnmFormat::Pgm),
            3 => Some(PnmFormat::Ppm),
            _ => None,
        }
    }

    /// Format from the magic number at the start of `bytes`.
    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        match bytes.get(..2) {
            Some(b"P5") => Some(PnmFormat::Pgm),
            Some(b"P6") => Some(PnmFormat::Ppm),
            _ => None,
        }
    }
}

struct Header<'a> {
    rest: &'a [u8],
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        loop {
            match self.rest.first() {
                Some(b) if b.is_ascii_whitespace() => self.rest = &self.rest[1..],
                Some(b'#') => {
                    let end = self.rest.iter().position(|&b| b == b'\n').unwrap_or(self.rest.len());
                    self.rest = &self.rest[end..];
                }
                _ => return,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PnmError> {
        self.skip_space_and_comments();
        let len = self.rest.iter().take_while(|b| b.is_ascii_digit()).count();
        if len == 0 {
            return Err(PnmError::Header(format!("missing {what}")));
        }
        let text = std::str::from_utf8(&self.rest[..len]).expect("ascii digits");
        self.rest = &self.rest[len..];
        text.parse()
            .map_err(|_| PnmError::Header(format!("{what} out of range")))
    }
}

/// Decodes a binary PGM/PPM of the given format.
pub fn load_image(bytes: &[u8], format: PnmFormat) -> Result<Image, PnmError> {
    if bytes.get(..2) != Some(format.magic().as_slice()) {
        return Err(PnmError::BadMagic {
            expected: std::str::from_utf8(format.magic()).unwrap(),
        });
    }
    let mut h = Header { rest: &bytes[2..] };
    if !h.rest.first().is_some_and(u8::is_ascii_whitespace) {
        return Err(PnmError::Header("missing whitespace after magic".into()));
    }
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(PnmError::Maxval(maxval));
    }
    match h.rest.first() {
        Some(b) if b.is_ascii_whitespace() => h.rest = &h.rest[1..],
        _ => return Err(PnmError::Header("missing whitespace after maxval".into())),
    }
    let expected = width * height * format.channels();
    if h.rest.len() < expected {
        return Err(PnmError::Truncated {
            expected,
            found: h.rest.len(),
        });
    }
    Ok(Image::new(width, height, format.channels(), h.rest[..expected].to_vec())?)
}

/// Decodes either format, chosen by magic number.
pub fn load_any(bytes: &[u8]) -> Result<Image, PnmError> {
    let format = PnmFormat::sniff(bytes).ok_or(PnmError::BadMagic { expected: "P5 or P6" })?;
    load_image(bytes, format)
}

/// Encodes with a `P5|P6\n<w> <h>\n255\n` header.
pub fn save_image(img: &Image, format: PnmFormat) -> Result<Vec<u8>, PnmError> {
    if img.channels() != format.channels() {
        return Err(PnmError::Header(format!(
            "{}-channel image cannot be written as {}",
            img.channels(),
            format.extension()
        )));
    }
    let mut out = Vec::with_capacity(img.samples().len() + 20);
    out.extend_from_slice(format.magic());
    out.extend_from_slice(format!("\n{} {}\n255\n", img.width(), img.height()).as_bytes());
    out.extend_from_slice(img.samples());
    Ok(out)
}

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NmeaError {
    #[error("NME0 body is not ASCII")]
    NotAscii,
    #[error("NMEA sentence does not start with '$'")]
    MissingDollar,
}

/// A comma-split NMEA 0183 sentence.
///
/// `fields[0]` is the talker and sentence type (e.g. `GPGGA`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NmeaSentence {
    pub talker_and_type: String,
    pub fields: Vec<String>,
    pub checksum_valid: bool,
}

impl NmeaSentence {
    /// Builds a sentence from its fields with a freshly computed checksum.
    pub fn from_fields<S: AsRef<str>>(fields: &[S]) -> Self {
        let fields: Vec<String> = fields.iter().map(|s| s.as_ref().to_owned()).collect();
        NmeaSentence {
            talker_and_type: fields.first().cloned().unwrap_or_default(),
            fields,
            checksum_valid: true,
        }
    }

    pub fn payload(&self) -> String {
        self.fields.join(",")
    }

    /// The sentence type without its talker prefix, e.g. `GGA`.
    pub fn sentence_type(&self) -> &str {
        let t = &self.talker_and_type;
        if t.len() >= 3 {
            &t[t.len() - 3..]
        } else {
            t
        }
    }

    /// Renders `$<payload>*<HH>` with the checksum of the payload.
    pub fn to_sentence(&self) -> String {
        let payload = self.payload();
        format!("${}*{:02X}", payload, checksum(payload.as_bytes()))
    }
}

/// XOR of all bytes.
pub fn checksum(payload: &[u8]) -> u8 {
    payload.iter().fold(0, |acc, b| acc ^ b)
}

pub fn parse_nme0(body: &[u8]) -> Result<NmeaSentence, NmeaError> {
    if !body.is_ascii() {
        return Err(NmeaError::NotAscii);
    }
    // trailing CR/LF/NUL are transport framing, not sentence content
    let end = body
        .iter()
        .rposition(|b| !matches!(b, b'\r' | b'\n' | 0))
        .map_or(0, |i| i + 1);
    let text = &body[..end];
    let rest = text.strip_prefix(b"$").ok_or(NmeaError::MissingDollar)?;

    let (payload, checksum_valid) = match rest.iter().position(|&b| b == b'*') {
        Some(star) => {
            let (payload, tail) = (&rest[..star], &rest[star + 1..]);
            let valid = tail.len() >= 2
                && std::str::from_utf8(&tail[..2])
                    .ok()
                    .and_then(|h| u8::from_str_radix(h, 16).ok())
                    .is_some_and(|expected| expected == checksum(payload));
            (payload, valid)
        }
        None => (rest, false),
    };

    // ASCII was checked above
    let payload = std::str::from_utf8(payload).map_err(|_| NmeaError::NotAscii)?;
    let fields: Vec<String> = payload.split(',').map(str::to_owned).collect();
    Ok(NmeaSentence {
        talker_and_type: fields[0].clone(),
        fields,
        checksum_valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_byte_checksum() {
        let s = parse_nme0(b"$X*58").unwrap();
        assert_eq!(s.fields, vec!["X"]);
        assert!(s.checksum_valid);
        assert!(!parse_nme0(b"$X*00").unwrap().checksum_valid);
    }

    #[test]
    fn missing_star_parses_without_checksum() {
        let s = parse_nme0(b"$GPGGA,1,2").unwrap();
        assert_eq!(s.fields.len(), 3);
        assert_eq!(s.sentence_type(), "GGA");
        assert!(!s.checksum_valid);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_nme0(b"GPGGA"), Err(NmeaError::MissingDollar));
        assert_eq!(parse_nme0(&[b'$', 0xC3, 0xA9]), Err(NmeaError::NotAscii));
        assert_eq!(parse_nme0(b""), Err(NmeaError::MissingDollar));
    }

    #[test]
    fn known_gga_sentence() {
        let text = "$GPGGA,092750.000,5321.6802,N,00630.3372,W,1,8,1.03,61.7,M,55.2,M,,*76";
        let s = parse_nme0(format!("{text}\r\n").as_bytes()).unwrap();
        assert!(s.checksum_valid);
        assert_eq!(s.to_sentence(), text);
        assert_eq!(s.fields[14], "");
    }

    #[test]
    fn lowercase_hex_accepted() {
        let s = NmeaSentence::from_fields(&["GPZDA", "1"]);
        let text = s.to_sentence().to_lowercase().replacen("$gpzda", "$GPZDA", 1);
        assert!(parse_nme0(text.as_bytes()).unwrap().checksum_valid);
    }
}

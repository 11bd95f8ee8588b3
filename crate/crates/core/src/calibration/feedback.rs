//! Feedback datagram codec.
//!
//! Layout (little-endian, 26 bytes):
//!
//! | offset | size | field         |
//! |--------|------|---------------|
//! | 0      | 4    | magic `PHCF`  |
//! | 4      | 1    | version `0x01`|
//! | 5      | 1    | chain index   |
//! | 6      | 4    | cycle index   |
//! | 10     | 8    | θ̂ (binary64)  |
//! | 18     | 8    | timestamp µs  |

use thiserror::Error;

pub const FEEDBACK_MAGIC: [u8; 4] = *b"PHCF";
pub const FEEDBACK_VERSION: u8 = 0x01;
pub const FEEDBACK_LEN: usize = 26;

#[derive(Debug, Clone, Copy)]
pub struct FeedbackMessage {
    pub chain_index: u8,
    pub cycle_index: u32,
    pub theta_rad: f64,
    pub timestamp_us: u64,
}

// Bitwise equality so NaN payloads compare equal to themselves.
impl PartialEq for FeedbackMessage {
    fn eq(&self, other: &Self) -> bool {
        self.chain_index == other.chain_index
            && self.cycle_index == other.cycle_index
            && self.theta_rad.to_bits() == other.theta_rad.to_bits()
            && self.timestamp_us == other.timestamp_us
    }
}

impl Eq for FeedbackMessage {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeedbackError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),

    #[error("unknown version {0}")]
    UnsupportedVersion(u8),

    #[error("short payload: {0} bytes, need {FEEDBACK_LEN}")]
    Truncated(usize),

    #[error("payload of {0} bytes has trailing data")]
    TrailingBytes(usize),
}

pub fn encode_feedback(msg: &FeedbackMessage) -> [u8; FEEDBACK_LEN] {
    let mut buf = [0u8; FEEDBACK_LEN];
    buf[0..4].copy_from_slice(&FEEDBACK_MAGIC);
    buf[4] = FEEDBACK_VERSION;
    buf[5] = msg.chain_index;
    buf[6..10].copy_from_slice(&msg.cycle_index.to_le_bytes());
    buf[10..18].copy_from_slice(&msg.theta_rad.to_bits().to_le_bytes());
    buf[18..26].copy_from_slice(&msg.timestamp_us.to_le_bytes());
    buf
}

pub fn decode_feedback(payload: &[u8]) -> Result<FeedbackMessage, FeedbackError> {
    if payload.len() >= 4 && payload[0..4] != FEEDBACK_MAGIC {
        return Err(FeedbackError::BadMagic(payload[0..4].try_into().unwrap()));
    }
    if payload.len() < FEEDBACK_LEN {
        return Err(FeedbackError::Truncated(payload.len()));
    }
    if payload[4] != FEEDBACK_VERSION {
        return Err(FeedbackError::UnsupportedVersion(payload[4]));
    }
    if payload.len() > FEEDBACK_LEN {
        return Err(FeedbackError::TrailingBytes(payload.len()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(payload[i..i + 4].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(payload[i..i + 8].try_into().unwrap());
    Ok(FeedbackMessage {
        chain_index: payload[5],
        cycle_index: u32_at(6),
        theta_rad: f64::from_bits(u64_at(10)),
        timestamp_us: u64_at(18),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_layout_by_hand() {
        let msg = FeedbackMessage {
            chain_index: 2,
            cycle_index: 7,
            theta_rad: 0.0,
            timestamp_us: 0,
        };
        let mut want = vec![0x50, 0x48, 0x43, 0x46, 0x01, 0x02, 0x07, 0x00, 0x00, 0x00];
        want.extend([0u8; 16]);
        assert_eq!(encode_feedback(&msg).to_vec(), want);
    }

    #[test]
    fn field_endianness() {
        let msg = FeedbackMessage {
            chain_index: 0xAB,
            cycle_index: 0x0102_0304,
            theta_rad: 1.0,
            timestamp_us: 0x1122_3344_5566_7788,
        };
        let b = encode_feedback(&msg);
        assert_eq!(&b[6..10], &[0x04, 0x03, 0x02, 0x01]);
        assert_eq!(&b[10..18], &1.0f64.to_le_bytes());
        assert_eq!(b[18], 0x88);
        assert_eq!(decode_feedback(&b).unwrap(), msg);
    }

    #[test]
    fn rejects_malformed() {
        let mut b = encode_feedback(&FeedbackMessage {
            chain_index: 1,
            cycle_index: 1,
            theta_rad: 0.5,
            timestamp_us: 9,
        });
        assert_eq!(decode_feedback(&b[..10]), Err(FeedbackError::Truncated(10)));
        assert_eq!(decode_feedback(&[]), Err(FeedbackError::Truncated(0)));
        let mut long = b.to_vec();
        long.push(0);
        assert_eq!(
            decode_feedback(&long),
            Err(FeedbackError::TrailingBytes(27))
        );
        b[4] = 2;
        assert_eq!(
            decode_feedback(&b),
            Err(FeedbackError::UnsupportedVersion(2))
        );
        b[0..4].copy_from_slice(b"XXXX");
        let err = decode_feedback(&b).unwrap_err();
        assert!(matches!(err, FeedbackError::BadMagic(_)));
        assert!(err.to_string().contains("bad magic"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip_is_bit_exact(chain in any::<u8>(), cycle in any::<u32>(), bits in any::<u64>(), ts in any::<u64>()) {
                let msg = FeedbackMessage { chain_index: chain, cycle_index: cycle, theta_rad: f64::from_bits(bits), timestamp_us: ts };
                let back = decode_feedback(&encode_feedback(&msg)).unwrap();
                prop_assert_eq!(back.theta_rad.to_bits(), bits);
                prop_assert_eq!(back, msg);
            }
        }
    }
}

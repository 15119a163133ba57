//! ITU-T G.711 A-law companding.
//!
//! Linear samples are 16-bit two's complement. The magnitude is reduced to the
//! 12-bit G.711 magnitude (13-bit signed) by a 3-bit right shift, quantized in
//! sign-magnitude form, and the even bits of the codeword are inverted (XOR 0x55).

const EVEN_BIT_INVERSION: u8 = 0x55;
const SIGN_BIT: u8 = 0x80;

/// Encode a 16-bit linear sample to an A-law octet.
pub fn encode(x: i16) -> u8 {
    let sign = if x >= 0 { SIGN_BIT } else { 0 };
    let mag = ((i32::from(x).unsigned_abs()) >> 3).min(0x0FFF);
    let code = if mag < 32 {
        (mag >> 1) as u8
    } else {
        // mag in [32 << (seg - 1), 64 << (seg - 1)) for seg = 1..=7
        let seg = 31 - mag.leading_zeros() - 4;
        ((seg << 4) | ((mag >> seg) & 0x0F)) as u8
    };
    (sign | code) ^ EVEN_BIT_INVERSION
}

/// Decode an A-law octet to the midpoint of its quantization interval.
pub fn decode(c: u8) -> i16 {
    let c = c ^ EVEN_BIT_INVERSION;
    let seg = u32::from((c >> 4) & 0x07);
    let mant = i32::from(c & 0x0F);
    let mag = if seg == 0 {
        (mant << 1) + 1
    } else {
        ((mant | 0x10) << seg) + (1 << (seg - 1))
    };
    let linear = (mag << 3) as i16;
    if c & SIGN_BIT != 0 {
        linear
    } else {
        -linear
    }
}

/// Quantization step of the segment containing `x`, in 16-bit linear units.
pub fn step_size(x: i16) -> i32 {
    let mag = ((i32::from(x).unsigned_abs()) >> 3).min(0x0FFF);
    if mag < 64 {
        16
    } else {
        let seg = 31 - mag.leading_zeros() - 4;
        8 << seg
    }
}

/// Converts a normalized sample to 16-bit linear, saturating.
pub fn to_linear16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

pub fn from_linear16(x: i16) -> f64 {
    f64::from(x) / 32768.0
}

/// Passes normalized samples through an encode/decode cycle.
pub fn round_trip(samples: &[f64]) -> Vec<f64> {
    samples
        .iter()
        .map(|&s| from_linear16(decode(encode(to_linear16(s)))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_codewords() {
        assert_eq!(encode(0), 0xD5);
        assert_eq!(decode(0xD5), 8);
        assert_eq!(decode(0x55), -8);
        assert_eq!(encode(i16::MAX), 0xAA);
        assert_eq!(encode(i16::MIN), 0x2A);
        assert_eq!(decode(0xAA), 32256);
    }

    #[test]
    fn codewords_are_idempotent() {
        for c in 0..=255u8 {
            assert_eq!(encode(decode(c)), c, "codeword {c:#04x}");
        }
    }

    #[test]
    fn sign_symmetry() {
        for x in 1..=i16::MAX {
            assert_eq!(encode(-x), encode(x) ^ SIGN_BIT, "x = {x}");
        }
    }

    #[test]
    fn error_bounded_by_step() {
        for x in i16::MIN..=i16::MAX {
            let err = (i32::from(decode(encode(x))) - i32::from(x)).abs();
            assert!(err <= step_size(x), "x = {x}, err = {err}");
        }
    }
}

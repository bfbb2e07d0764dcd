//! LZW codec with a fixed, reproducible wire format.
//!
//! Contract: the dictionary starts with the 256 single-byte strings and grows
//! by greedy longest match; codes are packed LSB-first at a variable width
//! starting at 9 bits; the width increments whenever the next dictionary
//! index would exceed `2^width - 1`; the dictionary freezes at 4096 entries
//! (no clear codes). The encoded length is `ceil(total bits / 8)` bytes.

use std::collections::HashMap;

use crate::error::{Error, Result};

const DICT_CAP: usize = 4096;
const START_WIDTH: u32 = 9;

/// Greedy LZW over bytes, returning the raw code sequence.
pub fn lzw_encode(input: &[u8]) -> Result<Vec<u16>> {
    if input.is_empty() {
        return Err(Error::EmptyInput("lzw encoder input"));
    }
    let mut dict: HashMap<Vec<u8>, u16> =
        (0u16..256).map(|i| (vec![i as u8], i)).collect();
    let mut codes = Vec::new();
    let mut current = vec![input[0]];
    for &b in &input[1..] {
        current.push(b);
        if dict.contains_key(&current) {
            continue;
        }
        let prefix = &current[..current.len() - 1];
        codes.push(dict[prefix]);
        if dict.len() < DICT_CAP {
            let code = dict.len() as u16;
            dict.insert(std::mem::take(&mut current), code);
        } else {
            current.clear();
        }
        current.push(b);
    }
    codes.push(dict[&current]);
    Ok(codes)
}

/// Packs codes LSB-first with the width schedule implied by the encoder's
/// dictionary growth.
pub fn pack_codes(codes: &[u16]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut acc: u64 = 0;
    let mut acc_bits: u32 = 0;
    let mut width = START_WIDTH;
    // Before emitting code t, the largest assignable index is 255 + t
    // (capped); next_index tracks the entry assigned right after the emit.
    let mut next_index: usize = 256;
    for &code in codes {
        debug_assert!((code as u64) < (1u64 << width));
        acc |= (code as u64) << acc_bits;
        acc_bits += width;
        while acc_bits >= 8 {
            out.push((acc & 0xff) as u8);
            acc >>= 8;
            acc_bits -= 8;
        }
        if next_index < DICT_CAP {
            if next_index > (1 << width) - 1 {
                width += 1;
            }
            next_index += 1;
        }
    }
    if acc_bits > 0 {
        out.push((acc & 0xff) as u8);
    }
    out
}

/// Encoded size in bytes: `ceil(total bits / 8)`.
pub fn lzw_length(input: &[u8]) -> Result<usize> {
    let codes = lzw_encode(input)?;
    let mut bits: u64 = 0;
    let mut width = START_WIDTH as u64;
    let mut next_index: usize = 256;
    for _ in &codes {
        bits += width;
        if next_index < DICT_CAP {
            if next_index > (1 << width) - 1 {
                width += 1;
            }
            next_index += 1;
        }
    }
    debug_assert_eq!(bits.div_ceil(8) as usize, pack_codes(&codes).len());
    Ok(bits.div_ceil(8) as usize)
}

/// Unpacks an LSB-first stream produced by [`pack_codes`] and inverts the
/// encoding. The decoder mirrors the encoder's width schedule, offset by the
/// one-entry lag of its dictionary.
pub fn lzw_decode(packed: &[u8], code_count: usize) -> Result<Vec<u8>> {
    if code_count == 0 {
        return Err(Error::EmptyInput("lzw decoder input"));
    }
    let mut dict: Vec<Vec<u8>> = (0u16..256).map(|i| vec![i as u8]).collect();
    let mut out = Vec::new();

    let mut acc: u64 = 0;
    let mut acc_bits: u32 = 0;
    let mut width = START_WIDTH;
    let mut bytes = packed.iter();
    let mut read_code = |width: u32| -> Result<u16> {
        while acc_bits < width {
            let b = bytes
                .next()
                .ok_or(Error::InvalidInput("lzw stream truncated".into()))?;
            acc |= (*b as u64) << acc_bits;
            acc_bits += 8;
        }
        let code = (acc & ((1 << width) - 1)) as u16;
        acc >>= width;
        acc_bits -= width;
        Ok(code)
    };

    let first = read_code(width)? as usize;
    if first > 255 {
        return Err(Error::InvalidInput("invalid initial lzw code".into()));
    }
    out.extend_from_slice(&dict[first]);
    let mut prev = first;
    for _ in 1..code_count {
        // The entry created after this read gets index dict.len(); widen
        // the read when that index would not fit.
        if dict.len() < DICT_CAP && dict.len() > (1 << width) - 1 {
            width += 1;
        }
        let code = read_code(width)? as usize;
        let entry = if code < dict.len() {
            dict[code].clone()
        } else if code == dict.len() && dict.len() < DICT_CAP {
            // The pattern was created by the immediately preceding emit.
            let mut e = dict[prev].clone();
            e.push(dict[prev][0]);
            e
        } else {
            return Err(Error::InvalidInput(format!("invalid lzw code {code}")));
        };
        if dict.len() < DICT_CAP {
            let mut fresh = dict[prev].clone();
            fresh.push(entry[0]);
            dict.push(fresh);
        }
        out.extend_from_slice(&entry);
        prev = code;
    }
    Ok(out)
}

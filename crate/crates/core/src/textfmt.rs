//! Field encoding shared by the tab-separated model files.

/// Writes a character as itself unless it is whitespace or a control
/// character, which become `U+XXXX`.
pub(crate) fn encode_char(c: char) -> String {
    if c.is_whitespace() || c.is_control() {
        format!("U+{:04X}", c as u32)
    } else {
        c.to_string()
    }
}

pub(crate) fn decode_char(field: &str) -> Option<char> {
    let mut chars = field.chars();
    let first = chars.next()?;
    if chars.next().is_none() {
        return Some(first);
    }
    let hex = field.strip_prefix("U+")?;
    char::from_u32(u32::from_str_radix(hex, 16).ok()?)
}

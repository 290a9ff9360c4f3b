//! Code-point offset helpers. All spans in the toolkit count Unicode scalar
//! values, never bytes.

use alloc::vec::Vec;

/// Maps code-point offsets of one string to byte offsets.
pub(crate) struct CharIndex<'a> {
    text: &'a str,
    /// Byte offset of every code point plus a trailing `text.len()`;
    /// empty when the text is ASCII.
    bytes: Vec<usize>,
}

impl<'a> CharIndex<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let bytes = if text.is_ascii() {
            Vec::new()
        } else {
            text.char_indices().map(|(b, _)| b).chain(core::iter::once(text.len())).collect()
        };
        CharIndex { text, bytes }
    }

    pub(crate) fn len(&self) -> usize {
        if self.bytes.is_empty() {
            self.text.len()
        } else {
            self.bytes.len() - 1
        }
    }

    pub(crate) fn byte(&self, offset: usize) -> usize {
        if self.bytes.is_empty() {
            offset
        } else {
            self.bytes[offset]
        }
    }

    /// `text[start..end]` in code points, `None` when out of range.
    pub(crate) fn slice(&self, start: usize, end: usize) -> Option<&'a str> {
        if start > end || end > self.len() {
            return None;
        }
        Some(&self.text[self.byte(start)..self.byte(end)])
    }
}

pub(crate) fn char_len(s: &str) -> usize {
    if s.is_ascii() {
        s.len()
    } else {
        s.chars().count()
    }
}

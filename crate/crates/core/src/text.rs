//! Text normalization shared by cleaning, scoring and entailment checks.
//!
//! Chinese news text mixes full-width and half-width forms of the same
//! punctuation and digits (`，` vs `,`, `２９` vs `29`). Every comparison in
//! the toolkit goes through [`fold_width`] so those variants compare equal.

/// Maps a single character to its half-width form.
///
/// Covers the full-width ASCII block (U+FF01..=U+FF5E), the ideographic space
/// and the common CJK punctuation marks that have an ASCII counterpart.
pub fn fold_char(c: char) -> char {
    match c {
        '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
        '\u{3000}' => ' ',
        '。' | '\u{FF61}' => '.',
        '、' | '\u{FF64}' => ',',
        '“' | '”' | '「' | '」' | '『' | '』' => '"',
        '‘' | '’' => '\'',
        '【' | '〔' => '[',
        '】' | '〕' => ']',
        '《' | '〈' => '<',
        '》' | '〉' => '>',
        '—' | '–' => '-',
        '…' => '.',
        _ => c,
    }
}

/// Folds punctuation and digit width, leaving everything else untouched.
pub fn fold_width(text: &str) -> String {
    text.chars().map(fold_char).collect()
}

/// Width folding followed by removal of all whitespace.
///
/// This is the normalization used by ROUGE, the containment oracle and
/// temporal endpoint grounding.
pub fn normalize_for_matching(text: &str) -> String {
    text.chars().map(fold_char).filter(|c| !c.is_whitespace()).collect()
}

/// Collapses runs of whitespace into a single ASCII space and trims both ends.
pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

/// Whitespace collapse plus width folding; the identity used for duplicate detection.
pub fn normalize_for_dedup(text: &str) -> String {
    collapse_whitespace(&fold_width(text))
}

const TERMINALS: &[char] = &[
    '。', '！', '？', '；', '!', '?', ';', '\u{FF01}', '\u{FF1F}', '\u{FF1B}',
];
const CLOSERS: &[char] = &['”', '’', '」', '』', '"', '\'', '）', ')', '】', '》'];

/// Splits Chinese text into sentences on terminal punctuation (`。！？；`).
///
/// Closing quotes and brackets that directly follow a terminator stay with
/// the sentence they close. Line breaks also end a sentence. Sentences keep
/// their terminal punctuation, so concatenating the output restores the
/// input minus line breaks and surrounding blanks.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();

    let flush = |current: &mut String, sentences: &mut Vec<String>| {
        let trimmed = current.trim();
        if !trimmed.is_empty() {
            sentences.push(trimmed.to_string());
        }
        current.clear();
    };

    while let Some(c) = chars.next() {
        if c == '\n' || c == '\r' {
            flush(&mut current, &mut sentences);
            continue;
        }
        current.push(c);
        if TERMINALS.contains(&c) {
            // absorb repeated terminators ("！！") and closing quotes
            while let Some(&next) = chars.peek() {
                if TERMINALS.contains(&next) || CLOSERS.contains(&next) {
                    current.push(next);
                    chars.next();
                } else {
                    break;
                }
            }
            flush(&mut current, &mut sentences);
        }
    }
    flush(&mut current, &mut sentences);
    sentences
}

/// Number of Unicode scalar values; the length unit for Chinese text.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

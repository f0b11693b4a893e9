//! The built-in deliberately vulnerable target: a recursive-descent parser
//! over a JSON-like grammar with a binary header side format, seeded with
//! ten distinct bugs plus one intentional hang.
//!
//! Instrumentation points call [`Tracer::trace`] with stable location ids.
//! Several families are parametric (depth buckets, byte-class ladders,
//! per-character match chains) so that rare behavior sits behind
//! value-threshold and prefix-match guards.
//!
//! Location id layout (spans are capped, never overlapping):
//!   1          run entry
//!   2..=18     input length bucket
//!   20..=29    first byte class
//!   30..=33    magic prefix chain
//!   40..=47    document outcomes (clean eof, trailing junk, parse error, empty)
//!   48..=51    whitespace classes
//!   56..=59    block comment states
//!   64..=80    binary mode entry + header low nibble
//!   82..=89    binary version ladder
//!   90..=97    binary flag bits
//!   98..=103   binary length-field relation
//!   104..=111  binary payload tag dispatch
//!   112..=143  binary per-tag states (8 tags x 4)
//!   144..=151  binary payload byte classes
//!   152..=155  binary epilogue
//!   160..=223  value dispatch: class x depth bucket (8 x 8)
//!   224..=239  object states
//!   240..=247  object key length buckets
//!   248..=258  reserved-key match chain
//!   264..=279  array states + element count buckets
//!   288..=299  string core states
//!   300..=307  string plain char classes
//!   308..=319  escape kinds
//!   320..=327  unicode escape states
//!   328..=331  hex escape states
//!   336..=343  high-byte (utf8-style) ladder
//!   344..=347  overlong-encoding states
//!   352..=359  string length buckets
//!   368..=387  number states
//!   392..=406  literal match chains
//!   408..=431  directive match chains + spin locations
//!   432..=439  close-depth buckets

use super::{BugInfo, FuzzTarget, RunOutcome, Tracer};

pub const BUG_MAGIC: u32 = 1;
pub const BUG_DEPTH: u32 = 2;
pub const BUG_LENGTH_FIELD: u32 = 3;
pub const BUG_NUMBER_OVERFLOW: u32 = 4;
pub const BUG_RESERVED_KEY: u32 = 5;
pub const BUG_ARRAY_BLOWUP: u32 = 6;
pub const BUG_OVERLONG_UTF8: u32 = 7;
pub const BUG_BOOM: u32 = 8;
pub const BUG_VERSION_TAG: u32 = 9;
pub const BUG_SURROGATE: u32 = 10;

const MAX_DEPTH: u32 = 24;
const MAX_ARRAY_ELEMS: usize = 64;
const MAX_INT_DIGITS: usize = 17;

pub struct GoatTarget;

impl GoatTarget {
    pub fn new() -> Self {
        GoatTarget
    }
}

impl Default for GoatTarget {
    fn default() -> Self {
        Self::new()
    }
}

impl FuzzTarget for GoatTarget {
    fn name(&self) -> &str {
        "goat"
    }

    fn run(&self, input: &[u8], tracer: &mut dyn Tracer) -> RunOutcome {
        let mut p = Parser {
            input,
            pos: 0,
            tracer,
        };
        match p.document() {
            Ok(()) | Err(Bail::Error) => RunOutcome::Ok,
            Err(Bail::Bug(id)) => RunOutcome::Bug(id),
        }
    }

    fn bug_manifest(&self) -> Vec<BugInfo> {
        vec![
            BugInfo {
                bug_id: BUG_MAGIC,
                description: "magic byte sequence DE AD BE EF anywhere in the input",
                trigger: b"\xDE\xAD\xBE\xEF".to_vec(),
            },
            BugInfo {
                bug_id: BUG_DEPTH,
                description: "nesting depth above 24",
                trigger: vec![b'['; 25],
            },
            BugInfo {
                bug_id: BUG_LENGTH_FIELD,
                description: "binary header length field larger than the payload with flag bit 0 set",
                trigger: b"\xF0\x01\x01\xC8\x00".to_vec(),
            },
            BugInfo {
                bug_id: BUG_NUMBER_OVERFLOW,
                description: "integer literal with more than 17 digits",
                trigger: b"123456789012345678".to_vec(),
            },
            BugInfo {
                bug_id: BUG_RESERVED_KEY,
                description: "object key __proto__",
                trigger: b"{\"__proto__\":0}".to_vec(),
            },
            BugInfo {
                bug_id: BUG_ARRAY_BLOWUP,
                description: "array with more than 64 elements",
                trigger: {
                    let mut t = b"[".to_vec();
                    for _ in 0..65 {
                        t.extend_from_slice(b"0,");
                    }
                    t.pop();
                    t.push(b']');
                    t
                },
            },
            BugInfo {
                bug_id: BUG_OVERLONG_UTF8,
                description: "overlong 4-byte sequence F0 80..8F inside a string",
                trigger: b"\"\xF0\x80A\"".to_vec(),
            },
            BugInfo {
                bug_id: BUG_BOOM,
                description: "@boom directive",
                trigger: b"@boom".to_vec(),
            },
            BugInfo {
                bug_id: BUG_VERSION_TAG,
                description: "binary header version FF with payload tag 7",
                trigger: b"\xF0\xFF\x00\x01\x07".to_vec(),
            },
            BugInfo {
                bug_id: BUG_SURROGATE,
                description: "unicode escape in the surrogate range",
                trigger: b"\"\\uD800\"".to_vec(),
            },
        ]
    }

    fn initial_corpus(&self) -> Vec<Vec<u8>> {
        vec![
            b"{}".to_vec(),
            b"[1,2]".to_vec(),
            b"{\"a\":\"bc\"}".to_vec(),
            b"\"hi\"".to_vec(),
        ]
    }
}

enum Bail {
    Bug(u32),
    Error,
}

type PResult<T> = Result<T, Bail>;

struct Parser<'a, 'b> {
    input: &'a [u8],
    pos: usize,
    tracer: &'b mut dyn Tracer,
}

// Location bases, matching the layout comment above.
const L_ENTER: u32 = 1;
const L_LEN: u32 = 2; // span 17
const L_FIRST: u32 = 20; // span 10
const L_MAGIC: u32 = 30; // span 3 (full match is the bug)
const L_DOC_CLEAN: u32 = 40;
const L_DOC_TRAILING: u32 = 41;
const L_DOC_ERROR: u32 = 42;
const L_DOC_EMPTY: u32 = 43;
const L_TRAILING_CLASS: u32 = 44; // span 4
const L_WS: u32 = 48; // span 4
const L_COMMENT_OPEN: u32 = 56;
const L_COMMENT_BODY: u32 = 57;
const L_COMMENT_CLOSE: u32 = 58;
const L_COMMENT_EOF: u32 = 59;
const L_BIN_ENTER: u32 = 64;
const L_BIN_NIBBLE: u32 = 65; // span 16
const L_BIN_VERSION: u32 = 82; // span 8
const L_BIN_FLAG: u32 = 90; // span 8
const L_BIN_LEN_EQ: u32 = 98;
const L_BIN_LEN_SHORT: u32 = 99;
const L_BIN_LEN_LONG: u32 = 100;
const L_BIN_LEN_ZERO: u32 = 101;
const L_BIN_NO_PAYLOAD: u32 = 102;
const L_BIN_TAG: u32 = 104; // span 8
const L_BIN_TAG_STATE: u32 = 112; // span 32: tag*4 + state
const L_BIN_BYTE_CLASS: u32 = 144; // span 8
const L_BIN_DONE: u32 = 152;
const L_BIN_CHECK_HIT: u32 = 153;
const L_BIN_CHECK_MISS: u32 = 154;
const L_DISPATCH: u32 = 160; // span 64: class*8 + depth bucket
const L_OBJ_OPEN: u32 = 224;
const L_OBJ_EMPTY: u32 = 225;
const L_OBJ_KEY: u32 = 226;
const L_OBJ_COLON: u32 = 227;
const L_OBJ_VALUE: u32 = 228;
const L_OBJ_COMMA: u32 = 229;
const L_OBJ_CLOSE: u32 = 230;
const L_OBJ_TRAILING_COMMA: u32 = 231;
const L_OBJ_MISSING_COLON: u32 = 232;
const L_OBJ_BAD_KEY: u32 = 233;
const L_OBJ_EOF: u32 = 234;
const L_OBJ_KEYLEN: u32 = 240; // span 8
const L_PROTO_CHAIN: u32 = 248; // span 10 (9 chars + close quote check)
const L_ARR_OPEN: u32 = 264;
const L_ARR_EMPTY: u32 = 265;
const L_ARR_ELEM: u32 = 266;
const L_ARR_COMMA: u32 = 267;
const L_ARR_CLOSE: u32 = 268;
const L_ARR_EOF: u32 = 269;
const L_ARR_BAD_SEP: u32 = 270;
const L_ARR_COUNT: u32 = 272; // span 8
const L_STR_OPEN: u32 = 288;
const L_STR_CLOSE: u32 = 289;
const L_STR_EOF: u32 = 290;
const L_STR_RAW_CTRL: u32 = 291;
const L_STR_DEL: u32 = 292;
const L_STR_CLASS: u32 = 300; // span 8
const L_ESC: u32 = 308; // span 12
const L_UHEX: u32 = 320; // span 4 per-digit
const L_UHEX_BAD: u32 = 324;
const L_UHEX_DONE: u32 = 325;
const L_UHEX_HIGH: u32 = 326;
const L_UHEX_EOF: u32 = 327;
const L_XHEX_OK: u32 = 328;
const L_XHEX_BAD: u32 = 329;
const L_XHEX_HIGH: u32 = 330;
const L_XHEX_EOF: u32 = 331;
const L_U8_LADDER: u32 = 336; // span 8
const L_OVERLONG2: u32 = 344;
const L_OVERLONG3: u32 = 345;
const L_CONT_OK: u32 = 346;
const L_CONT_BAD: u32 = 347;
const L_STR_LEN: u32 = 352; // span 8
const L_NUM_MINUS: u32 = 368;
const L_NUM_ZERO_LEAD: u32 = 369;
const L_NUM_DIGITS: u32 = 370; // span 6 digit-count buckets
const L_NUM_FRAC_DOT: u32 = 376;
const L_NUM_FRAC_DIGITS: u32 = 377; // span 3
const L_NUM_EXP: u32 = 380;
const L_NUM_EXP_SIGN: u32 = 381;
const L_NUM_EXP_DIGITS: u32 = 382; // span 3
const L_NUM_DONE: u32 = 385;
const L_NUM_BARE_MINUS: u32 = 386;
const L_NUM_EMPTY_EXP: u32 = 387;
const L_LIT_TRUE: u32 = 392; // span 4 chars
const L_LIT_FALSE: u32 = 396; // span 5
const L_LIT_NULL: u32 = 401; // span 4
const L_LIT_MISMATCH: u32 = 405; // span 3 per kind
const L_DIR_ENTER: u32 = 408;
const L_DIR_LOOP: u32 = 409; // span 4 chars
const L_DIR_BOOM: u32 = 413; // span 4
const L_DIR_SPIN: u32 = 417; // span 4
const L_DIR_UNKNOWN: u32 = 421;
const L_DIR_EMPTY: u32 = 422;
const L_SPIN_FOREVER: u32 = 424;
const L_SPIN_BOUNDED: u32 = 425;
const L_CLOSE_DEPTH: u32 = 432; // span 8

fn log2_bucket(n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        usize::BITS - n.leading_zeros()
    }
}

impl Parser<'_, '_> {
    #[inline]
    fn hit(&mut self, loc: u32) {
        self.tracer.trace(loc);
    }

    #[inline]
    fn hit_capped(&mut self, base: u32, off: u32, span: u32) {
        self.tracer.trace(base + off.min(span - 1));
    }

    #[inline]
    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    #[inline]
    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn document(&mut self) -> PResult<()> {
        self.hit(L_ENTER);
        self.hit_capped(L_LEN, log2_bucket(self.input.len()), 17);
        self.magic_scan()?;

        let Some(first) = self.peek() else {
            self.hit(L_DOC_EMPTY);
            return Ok(());
        };
        self.hit_capped(L_FIRST, first_byte_class(first), 10);

        if first >= 0xF0 {
            return self.binary_document();
        }

        self.skip_ws();
        if self.peek().is_none() {
            self.hit(L_DOC_EMPTY);
            return Ok(());
        }
        match self.value(0) {
            Ok(()) => {}
            Err(Bail::Error) => {
                self.hit(L_DOC_ERROR);
                return Err(Bail::Error);
            }
            Err(bug) => return Err(bug),
        }
        self.skip_ws();
        if self.pos < self.input.len() {
            self.hit(L_DOC_TRAILING);
            let b = self.input[self.pos];
            self.hit_capped(L_TRAILING_CLASS, (b >> 6) as u32, 4);
        } else {
            self.hit(L_DOC_CLEAN);
        }
        Ok(())
    }

    /// Whole-input scan for the DE AD BE EF sequence; traces the deepest
    /// prefix matched anywhere.
    fn magic_scan(&mut self) -> PResult<()> {
        const MAGIC: [u8; 4] = [0xDE, 0xAD, 0xBE, 0xEF];
        let mut best = 0usize;
        for start in 0..self.input.len() {
            let mut k = 0;
            while k < 4 && start + k < self.input.len() && self.input[start + k] == MAGIC[k] {
                k += 1;
            }
            best = best.max(k);
            if best == 4 {
                break;
            }
        }
        for k in 1..=best.min(3) {
            self.hit(L_MAGIC + k as u32 - 1);
        }
        if best == 4 {
            return Err(Bail::Bug(BUG_MAGIC));
        }
        Ok(())
    }

    fn skip_ws(&mut self) {
        while let Some(b) = self.peek() {
            match b {
                b' ' => self.hit(L_WS),
                b'\t' => self.hit(L_WS + 1),
                b'\n' => self.hit(L_WS + 2),
                b'\r' => self.hit(L_WS + 3),
                b'/' if self.input.get(self.pos + 1) == Some(&b'*') => {
                    self.hit(L_COMMENT_OPEN);
                    self.pos += 2;
                    loop {
                        match self.peek() {
                            None => {
                                self.hit(L_COMMENT_EOF);
                                return;
                            }
                            Some(b'*') if self.input.get(self.pos + 1) == Some(&b'/') => {
                                self.hit(L_COMMENT_CLOSE);
                                self.pos += 2;
                                break;
                            }
                            Some(_) => {
                                self.hit(L_COMMENT_BODY);
                                self.pos += 1;
                            }
                        }
                    }
                    continue;
                }
                _ => return,
            }
            self.pos += 1;
        }
    }

    // --- binary side format: [magic>=F0][version][flags][len][payload...] ---

    fn binary_document(&mut self) -> PResult<()> {
        let b0 = self.bump().unwrap();
        self.hit(L_BIN_ENTER);
        self.hit_capped(L_BIN_NIBBLE, (b0 & 0x0F) as u32, 16);

        let Some(version) = self.bump() else {
            self.hit(L_BIN_NO_PAYLOAD);
            return Ok(());
        };
        self.hit(L_BIN_VERSION + version_class(version));

        let Some(flags) = self.bump() else {
            self.hit(L_BIN_NO_PAYLOAD);
            return Ok(());
        };
        for bit in 0..8 {
            if flags & (1 << bit) != 0 {
                self.hit(L_BIN_FLAG + bit);
            }
        }

        let Some(len_field) = self.bump() else {
            self.hit(L_BIN_NO_PAYLOAD);
            return Ok(());
        };
        let payload = &self.input[self.pos..];
        if len_field == 0 {
            self.hit(L_BIN_LEN_ZERO);
        } else if (len_field as usize) == payload.len() {
            self.hit(L_BIN_LEN_EQ);
        } else if (len_field as usize) < payload.len() {
            self.hit(L_BIN_LEN_SHORT);
        } else {
            self.hit(L_BIN_LEN_LONG);
            if flags & 0x01 != 0 {
                // Length-field confusion: the copy loop trusts len_field.
                return Err(Bail::Bug(BUG_LENGTH_FIELD));
            }
        }

        let Some(&tag_byte) = payload.first() else {
            self.hit(L_BIN_NO_PAYLOAD);
            return Ok(());
        };
        let tag = (tag_byte & 0x07) as u32;
        self.hit(L_BIN_TAG + tag);
        self.process_payload(tag, version, payload)?;

        for &b in payload.iter().take(32) {
            self.hit_capped(L_BIN_BYTE_CLASS, (b >> 5) as u32, 8);
        }
        self.hit(L_BIN_DONE);
        Ok(())
    }

    fn process_payload(&mut self, tag: u32, version: u8, payload: &[u8]) -> PResult<()> {
        let state = |s: u32| L_BIN_TAG_STATE + tag * 4 + s;
        self.hit(state(0));
        let body = &payload[1..];
        match tag {
            0 => {
                let sum: u32 = body.iter().map(|&b| b as u32).sum();
                self.hit(state(1 + (sum % 3)));
            }
            1 => {
                let x = body.iter().fold(0u8, |a, &b| a ^ b);
                self.hit(state(1 + (x % 3) as u32));
            }
            2 => {
                let high = body.iter().filter(|&&b| b >= 0x80).count();
                if high > 0 {
                    self.hit(state(1));
                }
                if high > 4 {
                    self.hit(state(2));
                }
                if high > 12 {
                    self.hit(state(3));
                }
            }
            3 => {
                if let Some(&b) = body.first() {
                    self.hit(state(1 + (b >> 6) as u32 % 3));
                }
            }
            4 => {
                let pairs = body.chunks_exact(2).filter(|c| c[0] == c[1]).count();
                if pairs > 0 {
                    self.hit(state(1));
                }
                if pairs > 3 {
                    self.hit(state(2));
                }
            }
            5 => {
                let mut runs = 0;
                let mut i = 1;
                while i < body.len() {
                    if body[i] == body[i - 1] {
                        runs += 1;
                    }
                    i += 1;
                }
                self.hit(state(1 + (runs.min(2)) as u32));
            }
            6 => {
                let check = body.iter().fold(0u8, |a, &b| a.wrapping_add(b));
                if body.first() == Some(&check.wrapping_sub(*body.first().unwrap_or(&0))) {
                    self.hit(L_BIN_CHECK_HIT);
                } else {
                    self.hit(L_BIN_CHECK_MISS);
                }
                self.hit(state(1));
            }
            7 => {
                if version == 0xFF {
                    // Dispatch table indexed past its end for the retired tag.
                    return Err(Bail::Bug(BUG_VERSION_TAG));
                }
                self.hit(state(1 + (version % 3) as u32));
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    // --- JSON-like grammar ---

    fn value(&mut self, depth: u32) -> PResult<()> {
        if depth > MAX_DEPTH {
            // Unbounded recursion: the stack guard everyone forgot.
            return Err(Bail::Bug(BUG_DEPTH));
        }
        let Some(b) = self.peek() else {
            return Err(Bail::Error);
        };
        let class: u32 = match b {
            b'{' => 0,
            b'[' => 1,
            b'"' => 2,
            b'-' | b'0'..=b'9' => 3,
            b't' | b'f' | b'n' => 4,
            b'@' => 5,
            0x80..=0xEF => 6,
            _ => 7,
        };
        self.hit(L_DISPATCH + class * 8 + depth.min(7));
        match class {
            0 => self.object(depth),
            1 => self.array(depth),
            2 => self.string().map(|_| ()),
            3 => self.number(),
            4 => self.literal(),
            5 => self.directive(),
            6 => self.high_blob(),
            _ => Err(Bail::Error),
        }
    }

    fn object(&mut self, depth: u32) -> PResult<()> {
        self.bump();
        self.hit(L_OBJ_OPEN);
        self.skip_ws();
        if self.peek() == Some(b'}') {
            self.bump();
            self.hit(L_OBJ_EMPTY);
            return Ok(());
        }
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'"') => {
                    self.hit(L_OBJ_KEY);
                    let key = self.string()?;
                    self.check_reserved_key(&key)?;
                    self.hit_capped(L_OBJ_KEYLEN, log2_bucket(key.len()), 8);
                }
                Some(b'}') => {
                    self.bump();
                    self.hit(L_OBJ_TRAILING_COMMA);
                    return Ok(());
                }
                None => {
                    self.hit(L_OBJ_EOF);
                    return Err(Bail::Error);
                }
                _ => {
                    self.hit(L_OBJ_BAD_KEY);
                    return Err(Bail::Error);
                }
            }
            self.skip_ws();
            if self.peek() == Some(b':') {
                self.bump();
                self.hit(L_OBJ_COLON);
            } else {
                self.hit(L_OBJ_MISSING_COLON);
                return Err(Bail::Error);
            }
            self.skip_ws();
            self.value(depth + 1)?;
            self.hit(L_OBJ_VALUE);
            self.skip_ws();
            match self.bump() {
                Some(b',') => self.hit(L_OBJ_COMMA),
                Some(b'}') => {
                    self.hit(L_OBJ_CLOSE);
                    self.hit_capped(L_CLOSE_DEPTH, depth, 8);
                    return Ok(());
                }
                None => {
                    self.hit(L_OBJ_EOF);
                    return Err(Bail::Error);
                }
                _ => return Err(Bail::Error),
            }
        }
    }

    fn check_reserved_key(&mut self, key: &[u8]) -> PResult<()> {
        const RESERVED: &[u8] = b"__proto__";
        let mut matched = 0;
        while matched < RESERVED.len()
            && matched < key.len()
            && key[matched] == RESERVED[matched]
        {
            self.hit(L_PROTO_CHAIN + matched as u32);
            matched += 1;
        }
        if matched == RESERVED.len() && key.len() == RESERVED.len() {
            self.hit(L_PROTO_CHAIN + 9);
            // Reserved key overwrites the parser's own dispatch slot.
            return Err(Bail::Bug(BUG_RESERVED_KEY));
        }
        Ok(())
    }

    fn array(&mut self, depth: u32) -> PResult<()> {
        self.bump();
        self.hit(L_ARR_OPEN);
        self.skip_ws();
        if self.peek() == Some(b']') {
            self.bump();
            self.hit(L_ARR_EMPTY);
            return Ok(());
        }
        let mut count = 0usize;
        loop {
            self.skip_ws();
            self.value(depth + 1)?;
            count += 1;
            self.hit(L_ARR_ELEM);
            if count > MAX_ARRAY_ELEMS {
                // Fixed-size scratch table of 64 element offsets.
                return Err(Bail::Bug(BUG_ARRAY_BLOWUP));
            }
            self.skip_ws();
            match self.bump() {
                Some(b',') => self.hit(L_ARR_COMMA),
                Some(b']') => {
                    self.hit(L_ARR_CLOSE);
                    self.hit_capped(L_ARR_COUNT, log2_bucket(count), 8);
                    self.hit_capped(L_CLOSE_DEPTH, depth, 8);
                    return Ok(());
                }
                None => {
                    self.hit(L_ARR_EOF);
                    return Err(Bail::Error);
                }
                _ => {
                    self.hit(L_ARR_BAD_SEP);
                    return Err(Bail::Error);
                }
            }
        }
    }

    fn string(&mut self) -> PResult<Vec<u8>> {
        self.bump();
        self.hit(L_STR_OPEN);
        let mut out = Vec::new();
        loop {
            let Some(b) = self.bump() else {
                self.hit(L_STR_EOF);
                return Err(Bail::Error);
            };
            match b {
                b'"' => {
                    self.hit(L_STR_CLOSE);
                    self.hit_capped(L_STR_LEN, log2_bucket(out.len()), 8);
                    return Ok(out);
                }
                b'\\' => self.escape(&mut out)?,
                0x00..=0x1F => {
                    self.hit(L_STR_RAW_CTRL);
                    out.push(b);
                }
                0x7F => {
                    self.hit(L_STR_DEL);
                    out.push(b);
                }
                0x20..=0x7E => {
                    self.hit(L_STR_CLASS + ascii_class(b));
                    out.push(b);
                }
                0x80.. => {
                    self.high_byte_sequence(b)?;
                    out.push(b);
                }
            }
        }
    }

    fn escape(&mut self, out: &mut Vec<u8>) -> PResult<()> {
        let Some(e) = self.bump() else {
            self.hit(L_STR_EOF);
            return Err(Bail::Error);
        };
        let (idx, lit): (u32, Option<u8>) = match e {
            b'"' => (0, Some(b'"')),
            b'\\' => (1, Some(b'\\')),
            b'/' => (2, Some(b'/')),
            b'b' => (3, Some(0x08)),
            b'f' => (4, Some(0x0C)),
            b'n' => (5, Some(b'\n')),
            b'r' => (6, Some(b'\r')),
            b't' => (7, Some(b'\t')),
            b'u' => (8, None),
            b'x' => (9, None),
            b'0' => (10, Some(0)),
            _ => (11, None),
        };
        self.hit(L_ESC + idx);
        match e {
            b'u' => self.unicode_escape(out),
            b'x' => self.hex_escape(out),
            _ => {
                if let Some(v) = lit {
                    out.push(v);
                    Ok(())
                } else {
                    Err(Bail::Error)
                }
            }
        }
    }

    fn unicode_escape(&mut self, out: &mut Vec<u8>) -> PResult<()> {
        let mut value: u32 = 0;
        for i in 0..4 {
            let Some(h) = self.bump() else {
                self.hit(L_UHEX_EOF);
                return Err(Bail::Error);
            };
            let Some(d) = hex_digit(h) else {
                self.hit(L_UHEX_BAD);
                return Err(Bail::Error);
            };
            self.hit(L_UHEX + i);
            value = value << 4 | d as u32;
        }
        if (0xD800..=0xDFFF).contains(&value) {
            // Unpaired surrogate re-encoded without a range check.
            return Err(Bail::Bug(BUG_SURROGATE));
        }
        if value > 0xFF {
            self.hit(L_UHEX_HIGH);
        }
        self.hit(L_UHEX_DONE);
        out.push((value & 0xFF) as u8);
        Ok(())
    }

    fn hex_escape(&mut self, out: &mut Vec<u8>) -> PResult<()> {
        let mut value: u32 = 0;
        for _ in 0..2 {
            let Some(h) = self.bump() else {
                self.hit(L_XHEX_EOF);
                return Err(Bail::Error);
            };
            let Some(d) = hex_digit(h) else {
                self.hit(L_XHEX_BAD);
                return Err(Bail::Error);
            };
            value = value << 4 | d as u32;
        }
        self.hit(L_XHEX_OK);
        if value >= 0x80 {
            self.hit(L_XHEX_HIGH);
        }
        out.push(value as u8);
        Ok(())
    }

    /// UTF-8 style lead/continuation ladder for bytes >= 0x80.
    fn high_byte_sequence(&mut self, lead: u8) -> PResult<()> {
        let rung: u32 = match lead {
            0x80..=0x8F => 0,
            0x90..=0x9F => 1,
            0xA0..=0xBF => 2,
            0xC0..=0xC1 => 3,
            0xC2..=0xDF => 4,
            0xE0..=0xEF => 5,
            0xF0..=0xF4 => 6,
            _ => 7,
        };
        self.hit(L_U8_LADDER + rung);
        match rung {
            3 => {
                self.hit(L_OVERLONG2);
                Ok(())
            }
            4 => self.continuations(1),
            5 => {
                if lead == 0xE0 && matches!(self.peek(), Some(0x80..=0x9F)) {
                    self.hit(L_OVERLONG3);
                }
                self.continuations(2)
            }
            6 => {
                if lead == 0xF0 && matches!(self.peek(), Some(0x80..=0x8F)) {
                    // Overlong form decodes below the table floor; the
                    // shortcut path reads one byte past the slot.
                    return Err(Bail::Bug(BUG_OVERLONG_UTF8));
                }
                self.continuations(3)
            }
            _ => Ok(()),
        }
    }

    fn continuations(&mut self, n: usize) -> PResult<()> {
        for _ in 0..n {
            match self.peek() {
                Some(0x80..=0xBF) => {
                    self.bump();
                    self.hit(L_CONT_OK);
                }
                _ => {
                    self.hit(L_CONT_BAD);
                    return Ok(());
                }
            }
        }
        Ok(())
    }

    /// Bare high bytes outside a string parse as an opaque blob value.
    fn high_blob(&mut self) -> PResult<()> {
        while let Some(b) = self.peek() {
            if b < 0x80 {
                break;
            }
            self.bump();
            self.high_byte_sequence(b)?;
        }
        Ok(())
    }

    fn number(&mut self) -> PResult<()> {
        if self.peek() == Some(b'-') {
            self.bump();
            self.hit(L_NUM_MINUS);
        }
        let mut digits = 0usize;
        if self.peek() == Some(b'0') {
            self.hit(L_NUM_ZERO_LEAD);
        }
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.bump();
            digits += 1;
        }
        if digits == 0 {
            self.hit(L_NUM_BARE_MINUS);
            return Err(Bail::Error);
        }
        if digits > MAX_INT_DIGITS {
            // Accumulator is a 64-bit int scaled by 10 each digit.
            return Err(Bail::Bug(BUG_NUMBER_OVERFLOW));
        }
        self.hit(L_NUM_DIGITS + digit_bucket(digits));
        if self.peek() == Some(b'.') {
            self.bump();
            self.hit(L_NUM_FRAC_DOT);
            let mut frac = 0usize;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.bump();
                frac += 1;
            }
            self.hit_capped(L_NUM_FRAC_DIGITS, log2_bucket(frac).min(2), 3);
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            self.bump();
            self.hit(L_NUM_EXP);
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.bump();
                self.hit(L_NUM_EXP_SIGN);
            }
            let mut ed = 0usize;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.bump();
                ed += 1;
            }
            if ed == 0 {
                self.hit(L_NUM_EMPTY_EXP);
                return Err(Bail::Error);
            }
            self.hit_capped(L_NUM_EXP_DIGITS, log2_bucket(ed).min(2), 3);
        }
        self.hit(L_NUM_DONE);
        Ok(())
    }

    fn literal(&mut self) -> PResult<()> {
        let (word, base, kind): (&[u8], u32, u32) = match self.peek() {
            Some(b't') => (b"true", L_LIT_TRUE, 0),
            Some(b'f') => (b"false", L_LIT_FALSE, 1),
            _ => (b"null", L_LIT_NULL, 2),
        };
        for (i, &c) in word.iter().enumerate() {
            if self.peek() == Some(c) {
                self.bump();
                self.hit(base + i as u32);
            } else {
                self.hit(L_LIT_MISMATCH + kind);
                return Err(Bail::Error);
            }
        }
        Ok(())
    }

    fn directive(&mut self) -> PResult<()> {
        self.bump();
        self.hit(L_DIR_ENTER);
        let start = self.pos;
        while matches!(self.peek(), Some(b'a'..=b'z')) {
            self.bump();
        }
        let name = &self.input[start..self.pos];
        if name.is_empty() {
            self.hit(L_DIR_EMPTY);
            return Err(Bail::Error);
        }
        let chains: [(&[u8], u32); 3] = [
            (b"loop", L_DIR_LOOP),
            (b"boom", L_DIR_BOOM),
            (b"spin", L_DIR_SPIN),
        ];
        for (word, base) in chains {
            let mut matched = 0;
            while matched < word.len() && matched < name.len() && name[matched] == word[matched] {
                matched += 1;
            }
            for k in 0..matched {
                self.hit(base + k as u32);
            }
            if matched == word.len() && name.len() == word.len() {
                match word {
                    b"loop" => loop {
                        // Seeded hang: only the harness deadline ends this.
                        self.hit(L_SPIN_FOREVER);
                    },
                    b"boom" => return Err(Bail::Bug(BUG_BOOM)),
                    _ => {
                        for _ in 0..1000 {
                            self.hit(L_SPIN_BOUNDED);
                        }
                        return Ok(());
                    }
                }
            }
        }
        self.hit(L_DIR_UNKNOWN);
        Ok(())
    }
}

fn first_byte_class(b: u8) -> u32 {
    match b {
        b' ' | b'\t' | b'\n' | b'\r' => 0,
        b'{' => 1,
        b'[' => 2,
        b'"' => 3,
        b'-' | b'0'..=b'9' => 4,
        b'a'..=b'z' => 5,
        b'@' => 6,
        0x80..=0xEF => 7,
        0xF0.. => 8,
        _ => 9,
    }
}

fn ascii_class(b: u8) -> u32 {
    match b {
        b'a'..=b'z' => 0,
        b'A'..=b'Z' => 1,
        b'0'..=b'9' => 2,
        b' ' => 3,
        0x21..=0x2F => 4,
        0x3A..=0x40 => 5,
        0x5B..=0x60 => 6,
        _ => 7,
    }
}

fn hex_digit(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

fn digit_bucket(d: usize) -> u32 {
    match d {
        1 => 0,
        2..=3 => 1,
        4..=7 => 2,
        8..=12 => 3,
        13..=17 => 4,
        _ => 5,
    }
}

fn version_class(v: u8) -> u32 {
    match v {
        0 => 0,
        1..=9 => 1,
        10..=31 => 2,
        32..=63 => 3,
        64..=127 => 4,
        128..=191 => 5,
        192..=254 => 6,
        255 => 7,
    }
}

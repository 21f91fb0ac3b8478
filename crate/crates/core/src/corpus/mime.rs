//! Original-header recovery from (possibly repeatedly) forwarded messages.
//!
//! The recovery walks the raw message recursively: depth-first into MIME
//! parts (multipart containers and attached `message/rfc822` messages), then
//! a quoted-text scan for `From:/Date:/Subject:` label patterns inside each
//! text body. Label names come from a configurable lexicon because the
//! corpus language is not fixed. The deepest candidate that carries all four
//! of From, To, Date and Subject wins; a deeper candidate missing one of
//! them (e.g. a forward whose inner part lacks Date) is passed over in
//! favour of the next-outer complete one.
//!
//! Deliberately not a full MIME implementation: attachments other than
//! nested messages are dropped, and bodies are decoded for the common
//! transfer encodings (quoted-printable, base64) only.

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Email, RawMessage};

#[derive(Debug, Error)]
pub enum RecoverError {
    #[error("message {id}: no recoverable original headers")]
    Unparseable { id: String },
}

/// Header-label lexicon for the corpus language(s). Defaults cover English
/// and Dutch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeaderLexicon {
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub date: Vec<String>,
    pub subject: Vec<String>,
}

impl Default for HeaderLexicon {
    fn default() -> Self {
        HeaderLexicon {
            from: vec!["From".into(), "Van".into()],
            to: vec!["To".into(), "Aan".into()],
            date: vec!["Date".into(), "Sent".into(), "Datum".into(), "Verzonden".into()],
            subject: vec!["Subject".into(), "Onderwerp".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HeaderKind {
    From,
    To,
    Date,
    Subject,
}

impl HeaderLexicon {
    /// Load from a flat key-value file with comma-separated label lists,
    /// e.g. `from = From,Van`.
    pub fn from_file(path: &std::path::Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lex = HeaderLexicon::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let labels: Vec<String> =
                    value.split(',').map(|s| s.trim().to_string()).collect();
                match key.trim() {
                    "from" => lex.from = labels,
                    "to" => lex.to = labels,
                    "date" => lex.date = labels,
                    "subject" => lex.subject = labels,
                    _ => {}
                }
            }
        }
        Ok(lex)
    }

    fn kind_of(&self, line: &str) -> Option<(HeaderKind, String)> {
        let (name, value) = line.split_once(':')?;
        let name = name.trim();
        if name.is_empty() || name.len() > 24 {
            return None;
        }
        let matches = |labels: &[String]| labels.iter().any(|l| l.eq_ignore_ascii_case(name));
        let kind = if matches(&self.from) {
            HeaderKind::From
        } else if matches(&self.to) {
            HeaderKind::To
        } else if matches(&self.date) {
            HeaderKind::Date
        } else if matches(&self.subject) {
            HeaderKind::Subject
        } else {
            return None;
        };
        Some((kind, value.trim().to_string()))
    }

    /// Whether `text` contains something that looks like a quoted header
    /// block: a From-label line with a second distinct label nearby. Used by
    /// the SMS-forward heuristic.
    pub fn has_header_block(&self, text: &str) -> bool {
        let lines: Vec<&str> = text.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            let stripped = strip_quote_prefix(line);
            if let Some((HeaderKind::From, _)) = self.kind_of(stripped) {
                for other in lines.iter().skip(i + 1).take(6) {
                    match self.kind_of(strip_quote_prefix(other)) {
                        Some((HeaderKind::From, _)) | None => {}
                        Some(_) => return true,
                    }
                }
            }
        }
        false
    }
}

fn strip_quote_prefix(line: &str) -> &str {
    let mut s = line;
    loop {
        let t = s.trim_start();
        if let Some(rest) = t.strip_prefix('>') {
            s = rest;
        } else {
            return t;
        }
    }
}

// ---------------------------------------------------------------------------
// Raw message parsing (headers + MIME tree)
// ---------------------------------------------------------------------------

#[derive(Debug, Default)]
struct ParsedMessage {
    headers: Vec<(String, String)>,
    body_text: String,
    children: Vec<ParsedMessage>,
}

impl ParsedMessage {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

fn split_header_block(raw: &str) -> (Vec<(String, String)>, &str) {
    let mut headers: Vec<(String, String)> = Vec::new();
    let mut rest = raw;
    let mut consumed = 0usize;
    for line in raw.split_inclusive('\n') {
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            consumed += line.len();
            rest = &raw[consumed..];
            break;
        }
        if (line.starts_with(' ') || line.starts_with('\t')) && !headers.is_empty() {
            // folded continuation
            let last = headers.last_mut().unwrap();
            last.1.push(' ');
            last.1.push_str(trimmed.trim());
        } else if let Some((name, value)) = trimmed.split_once(':') {
            headers.push((name.trim().to_string(), value.trim().to_string()));
        } else {
            // Not header-shaped: the "header block" ends here and this line
            // belongs to the body.
            rest = &raw[consumed..];
            return (headers, rest);
        }
        consumed += line.len();
        rest = &raw[consumed..];
    }
    (headers, rest)
}

fn content_type(headers: &[(String, String)]) -> (String, Option<String>) {
    let raw = headers
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case("Content-Type"))
        .map(|(_, v)| v.as_str())
        .unwrap_or("text/plain");
    let mut parts = raw.split(';');
    let mime = parts.next().unwrap_or("text/plain").trim().to_lowercase();
    let mut boundary = None;
    for param in parts {
        let param = param.trim();
        if let Some(value) = param
            .strip_prefix("boundary=")
            .or_else(|| param.strip_prefix("BOUNDARY="))
            .or_else(|| param.strip_prefix("Boundary="))
        {
            boundary = Some(value.trim_matches('"').to_string());
        }
    }
    (mime, boundary)
}

fn decode_transfer_encoding(headers: &[(String, String)], body: &str) -> String {
    let enc = headers
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case("Content-Transfer-Encoding"))
        .map(|(_, v)| v.trim().to_lowercase())
        .unwrap_or_default();
    match enc.as_str() {
        "quoted-printable" => decode_quoted_printable(body),
        "base64" => {
            let compact: String = body.chars().filter(|c| !c.is_whitespace()).collect();
            match decode_base64(&compact) {
                Some(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
                None => body.to_string(),
            }
        }
        _ => body.to_string(),
    }
}

fn decode_quoted_printable(text: &str) -> String {
    let mut out = Vec::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'=' {
            if i + 2 < bytes.len() && bytes[i + 1] == b'\r' && bytes[i + 2] == b'\n' {
                i += 3; // soft break
                continue;
            }
            if i + 1 < bytes.len() && bytes[i + 1] == b'\n' {
                i += 2; // soft break
                continue;
            }
            if i + 2 < bytes.len() {
                let hex = |b: u8| (b as char).to_digit(16);
                if let (Some(hi), Some(lo)) = (hex(bytes[i + 1]), hex(bytes[i + 2])) {
                    out.push((hi * 16 + lo) as u8);
                    i += 3;
                    continue;
                }
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

fn decode_base64(s: &str) -> Option<Vec<u8>> {
    fn val(c: u8) -> Option<u32> {
        match c {
            b'A'..=b'Z' => Some((c - b'A') as u32),
            b'a'..=b'z' => Some((c - b'a' + 26) as u32),
            b'0'..=b'9' => Some((c - b'0' + 52) as u32),
            b'+' => Some(62),
            b'/' => Some(63),
            _ => None,
        }
    }
    let data: Vec<u8> = s.bytes().filter(|b| *b != b'=').collect();
    let mut out = Vec::with_capacity(data.len() * 3 / 4);
    for chunk in data.chunks(4) {
        let mut acc: u32 = 0;
        for (k, b) in chunk.iter().enumerate() {
            acc |= val(*b)? << (18 - 6 * k);
        }
        let n_bytes = match chunk.len() {
            4 => 3,
            3 => 2,
            2 => 1,
            _ => 0,
        };
        for k in 0..n_bytes {
            out.push(((acc >> (16 - 8 * k)) & 0xff) as u8);
        }
    }
    Some(out)
}

/// Minimal RFC 2047 encoded-word decoding for Subject/From values.
fn decode_rfc2047(value: &str) -> String {
    // Whitespace between adjacent encoded words is not significant.
    let joined = regex::Regex::new(r"\?=\s+=\?")
        .unwrap()
        .replace_all(value, "?==?");
    let value = joined.as_ref();
    let re = regex::Regex::new(r"=\?[^?]+\?([BbQq])\?([^?]*)\?=").unwrap();
    re.replace_all(value, |caps: &regex::Captures| {
        let kind = caps.get(1).unwrap().as_str();
        let data = caps.get(2).unwrap().as_str();
        match kind {
            "B" | "b" => decode_base64(data)
                .map(|b| String::from_utf8_lossy(&b).into_owned())
                .unwrap_or_else(|| data.to_string()),
            _ => decode_quoted_printable(&data.replace('_', " ")),
        }
    })
    .into_owned()
}

fn strip_html(text: &str) -> String {
    let tag_re = regex::Regex::new(r"(?s)<[^>]*>").unwrap();
    let stripped = tag_re.replace_all(text, " ");
    stripped
        .replace("&nbsp;", " ")
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
}

fn parse_message(raw: &str, depth_budget: usize) -> ParsedMessage {
    let (headers, body) = split_header_block(raw);
    let (mime, boundary) = content_type(&headers);
    let mut msg = ParsedMessage {
        headers,
        ..Default::default()
    };
    if depth_budget == 0 {
        msg.body_text = body.trim().to_string();
        return msg;
    }

    if mime.starts_with("multipart/") {
        if let Some(boundary) = boundary {
            let delim = format!("--{boundary}");
            let mut plain = String::new();
            let mut html = String::new();
            for section in body.split(&delim).skip(1) {
                let section = section.trim_start_matches(['\r', '\n']);
                if section.starts_with("--") || section.trim().is_empty() {
                    continue; // closing delimiter
                }
                let (part_headers, part_body) = split_header_block(section);
                let (part_mime, _) = content_type(&part_headers);
                if part_mime == "message/rfc822" {
                    msg.children
                        .push(parse_message(part_body, depth_budget - 1));
                } else if part_mime.starts_with("multipart/") {
                    let mut rendered = String::new();
                    for (n, v) in &part_headers {
                        rendered.push_str(&format!("{n}: {v}\r\n"));
                    }
                    rendered.push_str("\r\n");
                    rendered.push_str(part_body);
                    let nested = parse_message(&rendered, depth_budget - 1);
                    if !nested.body_text.is_empty() {
                        if !plain.is_empty() {
                            plain.push('\n');
                        }
                        plain.push_str(&nested.body_text);
                    }
                    msg.children.extend(nested.children);
                } else if part_mime.starts_with("text/") {
                    let decoded = decode_transfer_encoding(&part_headers, part_body);
                    if part_mime == "text/html" {
                        html.push_str(&strip_html(&decoded));
                    } else {
                        if !plain.is_empty() {
                            plain.push('\n');
                        }
                        plain.push_str(&decoded);
                    }
                }
                // other parts (attachments) dropped
            }
            msg.body_text = if plain.trim().is_empty() { html } else { plain }
                .trim()
                .to_string();
            return msg;
        }
    } else if mime == "message/rfc822" {
        msg.children.push(parse_message(body, depth_budget - 1));
        return msg;
    }

    let decoded = decode_transfer_encoding(&msg.headers, body);
    msg.body_text = if mime == "text/html" {
        strip_html(&decoded).trim().to_string()
    } else {
        decoded.trim().to_string()
    };
    msg
}

// ---------------------------------------------------------------------------
// Candidate collection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Candidate {
    depth: usize,
    order: usize,
    from: Option<String>,
    to: Option<String>,
    date: Option<String>,
    subject: Option<String>,
    body: String,
}

impl Candidate {
    fn complete(&self) -> bool {
        self.from.is_some() && self.to.is_some() && self.date.is_some() && self.subject.is_some()
    }
}

fn collect_candidates(
    msg: &ParsedMessage,
    depth: usize,
    lexicon: &HeaderLexicon,
    order: &mut usize,
    out: &mut Vec<Candidate>,
) {
    let get = |names: &[String]| -> Option<String> {
        names
            .iter()
            .filter_map(|n| msg.header(n))
            .map(|v| decode_rfc2047(v))
            .next()
    };

    let lines: Vec<&str> = msg.body_text.lines().map(strip_quote_prefix).collect();
    let blocks = find_quoted_blocks(&lines, lexicon);

    // The node's own headers; its body runs to the first quoted block.
    let own_body_end = blocks.first().map(|b| b.start).unwrap_or(lines.len());
    out.push(Candidate {
        depth,
        order: bump(order),
        from: get(&lexicon.from),
        to: get(&lexicon.to),
        date: get(&lexicon.date),
        subject: get(&lexicon.subject),
        body: join_body(&lines[..own_body_end]),
    });

    // Quoted forwarded blocks nest one level deeper each.
    for (i, block) in blocks.iter().enumerate() {
        let body_start = block.end;
        let body_end = blocks.get(i + 1).map(|b| b.start).unwrap_or(lines.len());
        out.push(Candidate {
            depth: depth + 1 + i,
            order: bump(order),
            from: block.from.clone(),
            to: block.to.clone(),
            date: block.date.clone(),
            subject: block.subject.clone(),
            body: join_body(&lines[body_start..body_end]),
        });
    }

    for child in &msg.children {
        collect_candidates(child, depth + 1, lexicon, order, out);
    }
}

fn bump(order: &mut usize) -> usize {
    let v = *order;
    *order += 1;
    v
}

/// Drop leading/trailing blank and "---------- Forwarded message ----------"
/// style separator lines from a candidate body slice.
fn join_body(lines: &[&str]) -> String {
    let is_separator = |l: &str| {
        let t = l.trim();
        t.is_empty() || (t.len() >= 4 && t.chars().all(|c| "-_= ".contains(c)))
            || (t.starts_with('-') && t.ends_with('-') && t.len() >= 8)
    };
    let mut start = 0;
    let mut end = lines.len();
    while start < end && is_separator(lines[start]) {
        start += 1;
    }
    while end > start && is_separator(lines[end - 1]) {
        end -= 1;
    }
    lines[start..end].join("\n").trim().to_string()
}

#[derive(Debug)]
struct QuotedBlock {
    start: usize,
    end: usize, // line index just past the header lines
    from: Option<String>,
    to: Option<String>,
    date: Option<String>,
    subject: Option<String>,
}

fn find_quoted_blocks(lines: &[&str], lexicon: &HeaderLexicon) -> Vec<QuotedBlock> {
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if let Some((HeaderKind::From, from_value)) = lexicon.kind_of(lines[i]) {
            let mut block = QuotedBlock {
                start: i,
                end: i + 1,
                from: Some(decode_rfc2047(&from_value)),
                to: None,
                date: None,
                subject: None,
            };
            let mut j = i + 1;
            let mut distinct = 1;
            while j < lines.len() && j <= i + 8 {
                if lines[j].trim().is_empty() {
                    j += 1;
                    block.end = j;
                    break;
                }
                match lexicon.kind_of(lines[j]) {
                    Some((kind, value)) => {
                        let slot = match kind {
                            HeaderKind::From => None,
                            HeaderKind::To => Some(&mut block.to),
                            HeaderKind::Date => Some(&mut block.date),
                            HeaderKind::Subject => Some(&mut block.subject),
                        };
                        if let Some(slot) = slot {
                            if slot.is_none() {
                                *slot = Some(decode_rfc2047(&value));
                                distinct += 1;
                            }
                        }
                        j += 1;
                        block.end = j;
                    }
                    None => break,
                }
            }
            if distinct >= 2 {
                blocks.push(block);
                i = j;
                continue;
            }
        }
        i += 1;
    }
    blocks
}

// ---------------------------------------------------------------------------
// Field parsing
// ---------------------------------------------------------------------------

fn parse_addr(value: &str) -> String {
    if let (Some(lt), Some(gt)) = (value.find('<'), value.rfind('>')) {
        if lt < gt {
            return value[lt + 1..gt].trim().to_string();
        }
    }
    value
        .split_whitespace()
        .find(|w| w.contains('@'))
        .unwrap_or(value.trim())
        .trim_matches(|c| c == '"' || c == ',' || c == ';')
        .to_string()
}

fn addr_domain(addr: &str) -> String {
    addr.rsplit_once('@')
        .map(|(_, d)| d.trim().trim_end_matches('.').to_lowercase())
        .unwrap_or_default()
}

/// Accepts RFC 2822/3339 plus a few localized formats; unparseable dates
/// come back as `None` and the email is retained.
pub(crate) fn parse_date(value: &str) -> Option<DateTime<Utc>> {
    let cleaned = {
        // drop trailing "(CET)"-style comments
        let v = value.trim();
        match v.find('(') {
            Some(pos) => v[..pos].trim().to_string(),
            None => v.to_string(),
        }
    };
    if let Ok(dt) = DateTime::parse_from_rfc2822(&cleaned) {
        return Some(dt.with_timezone(&Utc));
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(&cleaned) {
        return Some(dt.with_timezone(&Utc));
    }
    const NAIVE_FORMATS: [&str; 6] = [
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
        "%d-%m-%Y %H:%M:%S",
        "%d-%m-%Y %H:%M",
        "%d/%m/%Y %H:%M",
        "%A, %B %d, %Y %H:%M %p",
    ];
    for fmt in NAIVE_FORMATS {
        if let Ok(naive) = NaiveDateTime::parse_from_str(&cleaned, fmt) {
            return Some(Utc.from_utc_datetime(&naive));
        }
    }
    None
}

/// Recover the From/To/Date/Subject of the innermost forwarded original and
/// its body with transport headers stripped.
pub fn recover_original_headers(
    msg: &RawMessage,
    lexicon: &HeaderLexicon,
) -> Result<Email, RecoverError> {
    let raw = String::from_utf8_lossy(&msg.raw_bytes);
    let parsed = parse_message(&raw, 16);
    let mut candidates = Vec::new();
    let mut order = 0usize;
    collect_candidates(&parsed, 0, lexicon, &mut order, &mut candidates);

    let best = candidates
        .iter()
        .filter(|c| c.complete())
        .max_by(|a, b| a.depth.cmp(&b.depth).then(b.order.cmp(&a.order)))
        .ok_or_else(|| RecoverError::Unparseable {
            id: msg.id.clone(),
        })?;

    let from_addr = parse_addr(best.from.as_deref().unwrap_or(""));
    let body_text = best.body.clone();
    Ok(Email {
        id: msg.id.clone(),
        from_domain: addr_domain(&from_addr),
        from_addr,
        to_addr: parse_addr(best.to.as_deref().unwrap_or("")),
        date: best.date.as_deref().and_then(parse_date),
        subject: best.subject.clone().unwrap_or_default(),
        body_length: body_text.chars().count(),
        body_text,
        suspicious: false,
        duplicate_id: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(id: &str, text: &str) -> RawMessage {
        RawMessage {
            id: id.into(),
            source_path: String::new(),
            raw_bytes: text.as_bytes().to_vec(),
            received_at: None,
        }
    }

    const DOUBLE_FORWARD: &str = "\
From: Employee <employee@examplebank.com>\r\n\
To: phishing-inbox@examplebank.com\r\n\
Date: Thu, 15 Mar 2018 10:12:00 +0100\r\n\
Subject: FW: FW: Important notice\r\n\
\r\n\
Forwarding a customer report.\r\n\
\r\n\
---------- Forwarded message ----------\r\n\
From: Customer <customer@mail.example>\r\n\
To: employee@examplebank.com\r\n\
Date: Thu, 15 Mar 2018 09:55:00 +0100\r\n\
Subject: FW: Important notice\r\n\
\r\n\
I got this, looks fake.\r\n\
\r\n\
---------- Forwarded message ----------\r\n\
From: ExampleBank Security <security@examp1ebank.com>\r\n\
To: customer@mail.example\r\n\
Date: Thu, 15 Mar 2018 08:03:00 +0100\r\n\
Subject: Important notice\r\n\
\r\n\
Dear customer, verify your account at http://evil.example/verify now.\r\n";

    #[test]
    fn double_forward_recovers_innermost_headers() {
        let email = recover_original_headers(&raw("m1", DOUBLE_FORWARD), &HeaderLexicon::default())
            .unwrap();
        assert_eq!(email.from_addr, "security@examp1ebank.com");
        assert_eq!(email.from_domain, "examp1ebank.com");
        assert_eq!(email.to_addr, "customer@mail.example");
        assert_eq!(email.subject, "Important notice");
        assert_eq!(
            email.date.unwrap(),
            Utc.with_ymd_and_hms(2018, 3, 15, 7, 3, 0).unwrap()
        );
        assert!(email.body_text.contains("verify your account"));
        assert!(!email.body_text.contains("Forwarded message"));
        assert_eq!(email.body_length, email.measured_body_length());
    }

    #[test]
    fn direct_message_returns_its_own_headers() {
        let text = "From: a@x.com\r\nTo: b@y.com\r\nDate: Mon, 5 Feb 2018 12:00:00 +0000\r\n\
                    Subject: Hi\r\n\r\nJust a direct message.";
        let email =
            recover_original_headers(&raw("m2", text), &HeaderLexicon::default()).unwrap();
        assert_eq!(email.from_addr, "a@x.com");
        assert_eq!(email.subject, "Hi");
        assert_eq!(email.body_text, "Just a direct message.");
    }

    // Inner block lacks Date: the recovery must fall back to the next-outer
    // candidate that has all four headers. Expectation hand-parsed from the
    // fixture below: the middle (customer) block wins.
    #[test]
    fn incomplete_inner_block_falls_back_to_next_outer() {
        let text = "\
From: Employee <employee@examplebank.com>\r\n\
To: phishing-inbox@examplebank.com\r\n\
Date: Thu, 15 Mar 2018 10:12:00 +0100\r\n\
Subject: FW: notice\r\n\
\r\n\
---------- Forwarded message ----------\r\n\
From: Customer <customer@mail.example>\r\n\
To: employee@examplebank.com\r\n\
Date: Thu, 15 Mar 2018 09:55:00 +0100\r\n\
Subject: FW: notice\r\n\
\r\n\
see below\r\n\
\r\n\
---------- Forwarded message ----------\r\n\
From: attacker@evil.example\r\n\
To: customer@mail.example\r\n\
Subject: notice\r\n\
\r\n\
Click http://evil.example quick.\r\n";
        let email =
            recover_original_headers(&raw("m3", text), &HeaderLexicon::default()).unwrap();
        assert_eq!(email.from_addr, "customer@mail.example");
        assert!(email.body_text.contains("see below"));
    }

    #[test]
    fn message_rfc822_attachment_is_searched() {
        let text = "\
From: fwd@examplebank.com\r\n\
To: inbox@examplebank.com\r\n\
Date: Mon, 5 Feb 2018 12:00:00 +0000\r\n\
Subject: report\r\n\
Content-Type: multipart/mixed; boundary=\"XYZ\"\r\n\
\r\n\
--XYZ\r\n\
Content-Type: text/plain\r\n\
\r\n\
see attached\r\n\
--XYZ\r\n\
Content-Type: message/rfc822\r\n\
\r\n\
From: scam@evil.example\r\n\
To: victim@mail.example\r\n\
Date: Sun, 4 Feb 2018 08:00:00 +0000\r\n\
Subject: Act now\r\n\
\r\n\
Visit http://evil.example today.\r\n\
--XYZ--\r\n";
        let email =
            recover_original_headers(&raw("m4", text), &HeaderLexicon::default()).unwrap();
        assert_eq!(email.from_addr, "scam@evil.example");
        assert_eq!(email.subject, "Act now");
        assert!(email.body_text.contains("Visit"));
    }

    #[test]
    fn quoted_printable_body_is_decoded() {
        let text = "From: a@x.com\r\nTo: b@y.com\r\nDate: Mon, 5 Feb 2018 12:00:00 +0000\r\n\
                    Subject: qp\r\nContent-Transfer-Encoding: quoted-printable\r\n\r\n\
                    caf=C3=A9 renewal=\r\n required";
        let email =
            recover_original_headers(&raw("m5", text), &HeaderLexicon::default()).unwrap();
        assert_eq!(email.body_text, "café renewal required");
    }

    #[test]
    fn rfc2047_subject_is_decoded() {
        let text = "From: a@x.com\r\nTo: b@y.com\r\nDate: Mon, 5 Feb 2018 12:00:00 +0000\r\n\
                    Subject: =?UTF-8?B?QWN0aWU=?= =?UTF-8?Q?_n=C3=BA?=\r\n\r\nbody here";
        let email =
            recover_original_headers(&raw("m6", text), &HeaderLexicon::default()).unwrap();
        assert_eq!(email.subject, "Actie nú");
    }

    #[test]
    fn headerless_text_is_unparseable() {
        let err = recover_original_headers(&raw("m7", "just some text"), &HeaderLexicon::default())
            .unwrap_err();
        assert!(matches!(err, RecoverError::Unparseable { .. }));
    }

    #[test]
    fn recovery_is_idempotent_on_its_own_output() {
        let first =
            recover_original_headers(&raw("m1", DOUBLE_FORWARD), &HeaderLexicon::default())
                .unwrap();
        let rendered = format!(
            "From: {}\r\nTo: {}\r\nDate: {}\r\nSubject: {}\r\n\r\n{}",
            first.from_addr,
            first.to_addr,
            first.date.unwrap().to_rfc2822(),
            first.subject,
            first.body_text
        );
        let second =
            recover_original_headers(&raw("m1", &rendered), &HeaderLexicon::default()).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn dutch_labels_are_recognized() {
        let text = "\
From: fwd@examplebank.com\r\n\
To: inbox@examplebank.com\r\n\
Date: Mon, 5 Feb 2018 12:00:00 +0000\r\n\
Subject: doorsturen\r\n\
\r\n\
Van: oplichter@evil.example\r\n\
Aan: klant@mail.example\r\n\
Datum: 04-02-2018 08:00\r\n\
Onderwerp: Belangrijk bericht\r\n\
\r\n\
Geachte klant, klik op http://evil.example.\r\n";
        let email =
            recover_original_headers(&raw("m8", text), &HeaderLexicon::default()).unwrap();
        assert_eq!(email.from_addr, "oplichter@evil.example");
        assert_eq!(email.subject, "Belangrijk bericht");
        assert!(email.date.is_some());
    }
}

//! Pulling structured payloads out of free-form completions.

/// The SQL statement in a completion: the first fenced code block, else the
/// first line starting with `SELECT` (an optional `SQL:` tag is allowed)
/// up to the next blank line. A trailing `;` is removed.
pub fn extract_sql(text: &str) -> Option<String> {
    if let Some(start) = text.find("```") {
        let after = &text[start + 3..];
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
        let body = &after[body_start..];
        let body = body.find("```").map(|end| &body[..end]).unwrap_or(body);
        let sql = clean(body);
        if !sql.is_empty() {
            return Some(sql);
        }
    }
    let lines: Vec<&str> = text.lines().collect();
    let first = lines.iter().position(|l| starts_with_select(strip_tag(l)))?;
    let mut parts = vec![strip_tag(lines[first])];
    parts.extend(
        lines[first + 1..]
            .iter()
            .take_while(|l| !l.trim().is_empty())
            .copied(),
    );
    let sql = clean(&parts.join("\n"));
    (!sql.is_empty()).then_some(sql)
}

fn strip_tag(line: &str) -> &str {
    let t = line.trim_start();
    match t.get(..4) {
        Some(tag) if tag.eq_ignore_ascii_case("sql:") => t[4..].trim_start(),
        _ => t,
    }
}

fn starts_with_select(s: &str) -> bool {
    s.get(..6).is_some_and(|w| w.eq_ignore_ascii_case("select"))
        && s[6..].chars().next().is_none_or(|c| !c.is_alphanumeric() && c != '_')
}

fn clean(sql: &str) -> String {
    let t = sql.trim();
    let t = t.trim_end_matches(|c: char| c == ';' || c.is_whitespace());
    t.to_string()
}

/// Items of the last `<key>: [...]` line, e.g. `columns: ['a', 'b']`.
/// Items may be quoted with either quote character or left bare.
pub fn parse_list_line(text: &str, key: &str) -> Option<Vec<String>> {
    text.lines().rev().find_map(|line| {
        let t = line.trim();
        let head = t.get(..key.len())?;
        if !head.eq_ignore_ascii_case(key) {
            return None;
        }
        let rest = t[key.len()..].trim_start().strip_prefix(':')?.trim();
        parse_list(rest)
    })
}

fn parse_list(s: &str) -> Option<Vec<String>> {
    let inner = s.strip_prefix('[')?;
    let mut chars = inner.chars().peekable();
    let mut items = Vec::new();
    loop {
        while chars.next_if(|c| c.is_whitespace() || *c == ',').is_some() {}
        match chars.peek().copied() {
            None => return None,
            Some(']') => return Some(items),
            Some(q @ ('\'' | '"')) => {
                chars.next();
                let mut item = String::new();
                loop {
                    match chars.next()? {
                        '\\' => item.push(chars.next()?),
                        c if c == q => break,
                        c => item.push(c),
                    }
                }
                items.push(item);
            }
            Some(_) => {
                let mut item = String::new();
                while let Some(c) = chars.next_if(|c| *c != ',' && *c != ']') {
                    item.push(c);
                }
                items.push(item.trim().to_string());
            }
        }
    }
}

/// A row reference such as `18`, `'18'` or `row 18`.
pub fn parse_row_ref(item: &str) -> Option<u32> {
    let t = item.trim();
    let t = match t.get(..3) {
        Some(p) if p.eq_ignore_ascii_case("row") => t[3..].trim_start(),
        _ => t,
    };
    t.parse().ok().filter(|&id| id > 0)
}

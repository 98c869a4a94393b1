//! Text formats for instances and solutions.
//!
//! Instance (`.cpmp`):
//!
//! ```text
//! CPMP v1
//! S T
//! h g_1 ... g_h      # one line per stack, bottom to top
//! ```
//!
//! Solution (`.sol`), stack indices one-based:
//!
//! ```text
//! CPMPSOL v1
//! <instance id>
//! n
//! f t                # n lines
//! ```
//!
//! Instance files carry no id or class: the id is the file stem and the
//! class is inferred from group multiplicities.

use std::fs;
use std::path::Path;

use super::{Bay, Group, Instance, Move, Solution};
use crate::error::{Error, Result};

pub const INSTANCE_EXT: &str = "cpmp";
pub const SOLUTION_EXT: &str = "sol";

const INSTANCE_HEADER: &str = "CPMP v1";
const SOLUTION_HEADER: &str = "CPMPSOL v1";

pub fn render_instance(bay: &Bay) -> String {
    let mut out = format!("{INSTANCE_HEADER}\n{} {}\n", bay.stacks(), bay.tiers());
    for s in 0..bay.stacks() {
        out.push_str(&bay.height(s).to_string());
        for g in bay.stack(s) {
            out.push(' ');
            out.push_str(&g.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_instance(&instance.bay))?;
    Ok(())
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let bay = parse_instance(&text).map_err(|e| e.with_path(path))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Instance::new(id, bay))
}

/// Numbered, non-blank lines.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} '{tok}'")))
}

pub fn parse_instance(text: &str) -> Result<Bay> {
    let mut lines = content_lines(text);
    match lines.next() {
        None => return Err(Error::parse(1, "empty file")),
        Some((_, INSTANCE_HEADER)) => {}
        Some((n, other)) => {
            return Err(Error::parse(
                n,
                format!("expected header '{INSTANCE_HEADER}', found '{other}'"),
            ))
        }
    }
    let (n, dims) = lines
        .next()
        .ok_or_else(|| Error::parse(2, "missing 'S T' line"))?;
    let dims: Vec<&str> = dims.split_whitespace().collect();
    let [s, t] = dims[..] else {
        return Err(Error::parse(n, "expected two numbers 'S T'"));
    };
    let stacks: usize = parse_num(s, n, "stack count")?;
    let tiers: usize = parse_num(t, n, "tier count")?;
    if stacks == 0 || tiers == 0 {
        return Err(Error::parse(n, "stack and tier counts must be positive"));
    }

    let mut columns: Vec<Vec<Group>> = Vec::with_capacity(stacks);
    let mut last_line = n;
    for (n, line) in lines {
        last_line = n;
        if columns.len() == stacks {
            return Err(Error::parse(
                n,
                format!("more stack lines than the declared {stacks}"),
            ));
        }
        let mut toks = line.split_whitespace();
        let h: usize = parse_num(toks.next().unwrap_or_default(), n, "stack height")?;
        let groups: Vec<Group> = toks
            .map(|tok| parse_num(tok, n, "group value"))
            .collect::<Result<_>>()?;
        if groups.len() != h {
            return Err(Error::parse(
                n,
                format!("declared height {h} but {} group values", groups.len()),
            ));
        }
        if h > tiers {
            return Err(Error::parse(n, format!("height {h} exceeds {tiers} tiers")));
        }
        if groups.contains(&0) {
            return Err(Error::parse(n, "group value 0 is reserved for empty slots"));
        }
        columns.push(groups);
    }
    if columns.len() != stacks {
        return Err(Error::parse(
            last_line + 1,
            format!("declared {stacks} stacks but found {}", columns.len()),
        ));
    }
    Bay::from_stacks(tiers, &columns).map_err(|e| Error::parse(n, e.to_string()))
}

pub fn render_solution(id: &str, solution: &Solution) -> String {
    let mut out = format!("{SOLUTION_HEADER}\n{id}\n{}\n", solution.len());
    for mv in &solution.moves {
        out.push_str(&format!("{} {}\n", mv.from + 1, mv.to + 1));
    }
    out
}

pub fn write_solution(id: &str, solution: &Solution, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_solution(id, solution))?;
    Ok(())
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<(String, Solution)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_solution(&text).map_err(|e| e.with_path(path))
}

pub fn parse_solution(text: &str) -> Result<(String, Solution)> {
    let mut lines = content_lines(text);
    match lines.next() {
        None => return Err(Error::parse(1, "empty file")),
        Some((_, SOLUTION_HEADER)) => {}
        Some((n, other)) => {
            return Err(Error::parse(
                n,
                format!("expected header '{SOLUTION_HEADER}', found '{other}'"),
            ))
        }
    }
    let (_, id) = lines
        .next()
        .ok_or_else(|| Error::parse(2, "missing instance id"))?;
    let (n, len) = lines
        .next()
        .ok_or_else(|| Error::parse(3, "missing move count"))?;
    let len: usize = parse_num(len, n, "move count")?;
    let mut moves = Vec::with_capacity(len);
    let mut last_line = n;
    for (n, line) in lines {
        last_line = n;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [f, t] = toks[..] else {
            return Err(Error::parse(n, "expected 'f t'"));
        };
        let f: usize = parse_num(f, n, "source stack")?;
        let t: usize = parse_num(t, n, "target stack")?;
        if f == 0 || t == 0 {
            return Err(Error::parse(n, "stack indices are one-based"));
        }
        moves.push(Move::new(f - 1, t - 1));
    }
    if moves.len() != len {
        return Err(Error::parse(
            last_line,
            format!("declared {len} moves but found {}", moves.len()),
        ));
    }
    Ok((id.to_string(), Solution::new(moves)))
}

//! Line-oriented instance files.
//!
//! ```text
//! domain salp
//! width 5
//! height 3
//! agents 1
//! seed 7
//! grid
//! A...L
//! ..C..
//! .....
//! end
//! agent 0 0 2 A
//! penalty sample A 5 1 coral=yes
//! ```
//!
//! `agent <id> <x> <y> <assignment...>`; `penalty <feature> <value> <beta>
//! <alpha> [<feature>=<value> ...]`. Blank lines outside the grid block are
//! ignored. [`serialize_instance`] writes exactly this layout, so parsing
//! and re-serialising a canonical file is the identity.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{
    AgentSpec, Assignment, DomainInstance, DomainKind, Ingredient, PenaltyLine, SampleType,
    ShelfSize,
};
use crate::error::{Error, Result};

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

struct Tokens<'a> {
    line: usize,
    text: &'a str,
    parts: Vec<(usize, &'a str)>,
}

impl<'a> Tokens<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        let mut parts = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (c.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    parts.push((s + 1, &text[s..i]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            parts.push((s + 1, &text[s..]));
        }
        Tokens { line, text, parts }
    }

    fn get(&self, i: usize, what: &str) -> Result<(usize, &'a str)> {
        self.parts
            .get(i)
            .copied()
            .ok_or_else(|| perr(self.line, self.text.len() + 1, format!("expected {what}")))
    }

    fn parse<T: std::str::FromStr>(&self, i: usize, what: &str) -> Result<T> {
        let (col, tok) = self.get(i, what)?;
        tok.parse()
            .map_err(|_| perr(self.line, col, format!("invalid {what} '{tok}'")))
    }
}

fn parse_assignment(domain: DomainKind, tokens: &Tokens<'_>, from: usize) -> Result<Assignment> {
    let (col, first) = tokens.get(from, "assignment")?;
    let bad = |msg: &str| perr(tokens.line, col, msg.to_string());
    let extra = tokens.parts.len();
    let assignment = match domain {
        DomainKind::Salp => {
            if extra != from + 1 {
                return Err(bad("salp assignment is a single sample type"));
            }
            match first {
                "A" => Assignment::Sample(SampleType::A),
                "B" => Assignment::Sample(SampleType::B),
                _ => return Err(bad("sample type must be A or B")),
            }
        }
        DomainKind::Warehouse => {
            let shelf = tokens.parse::<usize>(from, "shelf id")?;
            let (scol, size) = tokens.get(from + 1, "shelf size")?;
            if extra != from + 2 {
                return Err(bad("warehouse assignment is '<shelf> <size>'"));
            }
            let size = match size {
                "big" => ShelfSize::Big,
                "small" => ShelfSize::Small,
                _ => return Err(perr(tokens.line, scol, "shelf size must be big or small")),
            };
            Assignment::Shelf { shelf, size }
        }
        DomainKind::Overcooked => {
            match (first, tokens.parts.get(from + 1).map(|p| p.1), extra - from) {
                ("clean", None, 1) => Assignment::Clean,
                ("cook", Some("tomato"), 2) => Assignment::Cook(Ingredient::Tomato),
                ("cook", Some("onion"), 2) => Assignment::Cook(Ingredient::Onion),
                _ => return Err(bad("expected 'clean', 'cook tomato' or 'cook onion'")),
            }
        }
    };
    Ok(assignment)
}

/// Parse and validate an instance file.
pub fn parse_instance(text: &str) -> Result<DomainInstance> {
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    let mut header: [Option<String>; 5] = Default::default();
    const KEYS: [&str; 5] = ["domain", "width", "height", "agents", "seed"];
    let mut grid: Option<Vec<Vec<char>>> = None;
    let mut grid_line = 0;
    let mut agents: Vec<(usize, AgentSpec)> = Vec::new();
    let mut penalties = Vec::new();
    let mut domain: Option<DomainKind> = None;

    while i < lines.len() {
        let lineno = i + 1;
        let raw = lines[i];
        i += 1;
        let tokens = Tokens::new(lineno, raw);
        let Some(&(col, keyword)) = tokens.parts.first() else {
            continue;
        };
        if let Some(k) = KEYS.iter().position(|&key| key == keyword) {
            if header[k].is_some() {
                return Err(perr(lineno, col, format!("duplicate '{keyword}' line")));
            }
            let (vcol, value) = tokens.get(1, keyword)?;
            if tokens.parts.len() != 2 {
                return Err(perr(lineno, vcol, format!("'{keyword}' takes one value")));
            }
            if keyword == "domain" {
                domain = Some(
                    value
                        .parse()
                        .map_err(|_| perr(lineno, vcol, format!("unknown domain '{value}'")))?,
                );
            }
            header[k] = Some(value.to_string());
            continue;
        }
        match keyword {
            "grid" => {
                if grid.is_some() {
                    return Err(perr(lineno, col, "duplicate grid block"));
                }
                let d =
                    domain.ok_or_else(|| perr(lineno, col, "'domain' must precede the grid"))?;
                grid_line = lineno;
                let mut rows = Vec::new();
                loop {
                    if i >= lines.len() {
                        return Err(perr(lineno, col, "grid block is missing 'end'"));
                    }
                    let row = lines[i];
                    i += 1;
                    if row.trim() == "end" {
                        break;
                    }
                    let mut cells = Vec::new();
                    for (c, ch) in row.chars().enumerate() {
                        if ch != '.' && ch != '#' && !d.special_glyphs().contains(&ch) {
                            return Err(perr(
                                i,
                                c + 1,
                                format!("unknown cell glyph '{ch}' for {d}"),
                            ));
                        }
                        cells.push(ch);
                    }
                    rows.push(cells);
                }
                grid = Some(rows);
            }
            "agent" => {
                let d = domain.ok_or_else(|| perr(lineno, col, "'domain' must precede agents"))?;
                let id = tokens.parse::<usize>(1, "agent id")?;
                let x = tokens.parse::<usize>(2, "x")?;
                let y = tokens.parse::<usize>(3, "y")?;
                let assignment = parse_assignment(d, &tokens, 4)?;
                agents.push((
                    lineno,
                    AgentSpec {
                        id,
                        start: (x, y),
                        assignment,
                    },
                ));
            }
            "penalty" => {
                let feature = tokens.get(1, "feature")?.1.to_string();
                let value = tokens.get(2, "value")?.1.to_string();
                let beta = tokens.parse::<f64>(3, "beta")?;
                let alpha = tokens.parse::<f64>(4, "alpha")?;
                let mut context = Vec::new();
                for &(ccol, tok) in &tokens.parts[5..] {
                    let (f, v) = tok
                        .split_once('=')
                        .ok_or_else(|| perr(lineno, ccol, "context must be feature=value"))?;
                    context.push((f.to_string(), v.to_string()));
                }
                penalties.push(PenaltyLine {
                    feature,
                    value,
                    beta,
                    alpha,
                    context,
                });
            }
            other => return Err(perr(lineno, col, format!("unknown keyword '{other}'"))),
        }
    }

    let get = |k: usize| {
        header[k]
            .clone()
            .ok_or_else(|| perr(lines.len().max(1), 1, format!("missing '{}' line", KEYS[k])))
    };
    let domain = domain.ok_or_else(|| perr(lines.len().max(1), 1, "missing 'domain' line"))?;
    let num = |k: usize| -> Result<u64> {
        get(k)?
            .parse::<u64>()
            .map_err(|_| perr(1, 1, format!("'{}' must be a nonnegative integer", KEYS[k])))
    };
    let width = num(1)? as usize;
    let height = num(2)? as usize;
    let declared_agents = num(3)? as usize;
    let seed = num(4)?;
    let grid = grid.ok_or_else(|| perr(lines.len().max(1), 1, "missing grid block"))?;
    if grid.len() != height {
        return Err(perr(
            grid_line,
            1,
            format!("grid has {} rows, height is {height}", grid.len()),
        ));
    }
    for (r, row) in grid.iter().enumerate() {
        if row.len() != width {
            return Err(perr(
                grid_line + 1 + r,
                1,
                format!("row has {} cells, width is {width}", row.len()),
            ));
        }
    }
    let mut ids = HashSet::new();
    for (lineno, a) in &agents {
        if !ids.insert(a.id) {
            return Err(perr(*lineno, 1, format!("duplicate agent id {}", a.id)));
        }
    }
    if agents.len() != declared_agents {
        return Err(Error::Instance(format!(
            "header declares {declared_agents} agents, file lists {}",
            agents.len()
        )));
    }
    let mut agents: Vec<AgentSpec> = agents.into_iter().map(|(_, a)| a).collect();
    agents.sort_by_key(|a| a.id);
    if agents.iter().enumerate().any(|(i, a)| a.id != i) {
        return Err(Error::Instance("agent ids must be 0..agents-1".into()));
    }
    let instance = DomainInstance {
        domain,
        width,
        height,
        seed,
        grid,
        agents,
        penalties,
    };
    super::build::validate(&instance)?;
    Ok(instance)
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that parses back to the same value
    format!("{v}")
}

pub fn serialize_instance(instance: &DomainInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "domain {}", instance.domain);
    let _ = writeln!(out, "width {}", instance.width);
    let _ = writeln!(out, "height {}", instance.height);
    let _ = writeln!(out, "agents {}", instance.agents.len());
    let _ = writeln!(out, "seed {}", instance.seed);
    out.push_str("grid\n");
    for row in &instance.grid {
        out.extend(row.iter());
        out.push('\n');
    }
    out.push_str("end\n");
    for a in &instance.agents {
        let _ = writeln!(
            out,
            "agent {} {} {} {}",
            a.id, a.start.0, a.start.1, a.assignment
        );
    }
    for p in &instance.penalties {
        let _ = write!(
            out,
            "penalty {} {} {} {}",
            p.feature,
            p.value,
            fmt_f64(p.beta),
            fmt_f64(p.alpha)
        );
        for (f, v) in &p.context {
            let _ = write!(out, " {f}={v}");
        }
        out.push('\n');
    }
    out
}

//! Adaptive net traversal, certificates and the certificate verifier.
//!
//! Levels are processed one at a time in canonical `(a₁, a₂, a₃)` order. The
//! base level is a box of net points; each later level is the deduplicated set
//! of children of the previous level's unresolved boxes. Because every level
//! is generated in sorted order, records can be streamed to the certificate
//! as they are produced and the file is canonical regardless of worker count.
//!
//! Certificate layout (UTF-8, LF):
//!
//! ```text
//! #constants-hash <hex>
//! #domain <lo1> <hi1> <lo2> <hi2> <lo3> <hi3> <depth>
//! <depth> <a1> <a2> <a3> <CASE> <detail>
//! ...
//! #end <max-depth> <record-count>
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constraints::{classify, constants_hash, Case, EliminationOutcome, SearchBox};
use crate::rigor::{grid_denominator, MAX_DEPTH};

pub const DEFAULT_DEPTH_CAP: u32 = 8;
pub const DEFAULT_CHECKPOINT_INTERVAL: Duration = Duration::from_secs(300);
const CHUNK: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum TraversalError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("depth cap {depth} reached with {} unresolved boxes", survivors.len())]
    DepthCap { depth: u32, survivors: Vec<SearchBox>, levels: Vec<LevelStats> },
    #[error("interrupted after {classified} boxes; state saved to {}", checkpoint.display())]
    Interrupted { classified: u64, checkpoint: PathBuf },
    #[error("cannot resume: {0}")]
    Resume(String),
    #[error("constants hash mismatch: expected {expected}, found {found}")]
    ConstantsMismatch { expected: String, found: String },
}

pub type Result<T> = std::result::Result<T, TraversalError>;

fn parse_err(line: usize, msg: impl Into<String>) -> TraversalError {
    TraversalError::Parse { line, msg: msg.into() }
}

/// Integer numerator ranges (inclusive) at a base depth. `lo > hi` on any
/// axis makes the domain empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Domain {
    pub depth: u32,
    pub ranges: [(i64, i64); 3],
}

impl Domain {
    /// The whole cube `[0, π]³` at `depth`.
    pub fn full(depth: u32) -> Self {
        let n = grid_denominator(depth);
        Domain { depth, ranges: [(0, n); 3] }
    }

    pub fn new(depth: u32, ranges: [(i64, i64); 3]) -> Result<Self> {
        let d = Domain { depth, ranges };
        d.validate()?;
        Ok(d)
    }

    /// Net points whose coordinates lie in `[lo_k, hi_k]` radians.
    pub fn centers_within(lo: [f64; 3], hi: [f64; 3], depth: u32) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(TraversalError::Config(format!("depth {depth} exceeds {MAX_DEPTH}")));
        }
        let n = grid_denominator(depth);
        let value = |a: i64| SearchBox::new(depth, [a, 0, 0]).map(|b| b.center_values()[0]).unwrap_or(f64::NAN);
        let mut ranges = [(0, -1); 3];
        for k in 0..3 {
            let guess = |t: f64| ((t / std::f64::consts::PI) * n as f64).clamp(0.0, n as f64) as i64;
            let mut a = guess(lo[k]).saturating_sub(1).max(0);
            while a <= n && value(a) < lo[k] {
                a += 1;
            }
            let mut b = (guess(hi[k]) + 1).min(n);
            while b >= 0 && value(b) > hi[k] {
                b -= 1;
            }
            ranges[k] = (a, b);
        }
        Domain::new(depth, ranges)
    }

    /// A cube of `2r + 1` cells per axis around the net point nearest `theta`.
    pub fn around_point(theta: [f64; 3], radius_cells: i64, depth: u32) -> Result<Self> {
        if depth > MAX_DEPTH || radius_cells < 0 {
            return Err(TraversalError::Config("invalid point neighbourhood".into()));
        }
        let n = grid_denominator(depth);
        let mut ranges = [(0, 0); 3];
        for k in 0..3 {
            if !(0.0..=std::f64::consts::PI).contains(&theta[k]) {
                return Err(TraversalError::Config(format!("coordinate {} outside [0, π]", theta[k])));
            }
            let a = crate::constraints::snap_to_grid(theta[k], depth);
            ranges[k] = ((a - radius_cells).max(0), (a + radius_cells).min(n));
        }
        Domain::new(depth, ranges)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth > MAX_DEPTH {
            return Err(TraversalError::Config(format!("depth {} exceeds {MAX_DEPTH}", self.depth)));
        }
        let n = grid_denominator(self.depth);
        if self.is_empty() {
            return Ok(());
        }
        for (lo, hi) in self.ranges {
            if lo < 0 || hi > n {
                return Err(TraversalError::Config(format!("range {lo}:{hi} outside [0, {n}]")));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.iter().any(|(lo, hi)| lo > hi)
    }

    pub fn cell_count(&self) -> u64 {
        if self.is_empty() {
            return 0;
        }
        self.ranges.iter().map(|(lo, hi)| (hi - lo + 1) as u64).product()
    }

    fn header_line(&self) -> String {
        let r = self.ranges;
        format!(
            "#domain {} {} {} {} {} {} {}",
            r[0].0, r[0].1, r[1].0, r[1].1, r[2].0, r[2].1, self.depth
        )
    }

    fn parse_fields(fields: &[&str], line: usize) -> Result<Self> {
        if fields.len() != 7 {
            return Err(parse_err(line, "domain needs six bounds and a depth"));
        }
        let v: Vec<i64> = fields
            .iter()
            .map(|f| f.parse::<i64>().map_err(|_| parse_err(line, format!("bad integer {f:?}"))))
            .collect::<Result<_>>()?;
        let depth = u32::try_from(v[6]).map_err(|_| parse_err(line, "bad depth"))?;
        Domain::new(depth, [(v[0], v[1]), (v[2], v[3]), (v[4], v[5])])
            .map_err(|e| parse_err(line, e.to_string()))
    }

    fn cells(&self) -> Box<dyn Iterator<Item = SearchBox> + Send> {
        if self.is_empty() {
            return Box::new(std::iter::empty());
        }
        let d = *self;
        Box::new((d.ranges[0].0..=d.ranges[0].1).flat_map(move |a| {
            (d.ranges[1].0..=d.ranges[1].1).flat_map(move |b| {
                (d.ranges[2].0..=d.ranges[2].1)
                    .map(move |c| SearchBox::new(d.depth, [a, b, c]).expect("validated domain"))
            })
        }))
    }
}

/// Initial net: all `101³` depth-0 points.
pub fn seed_grid() -> Vec<SearchBox> {
    Domain::full(0).cells().collect()
}

/// Children of `parents` (all at one depth), deduplicated, in canonical order.
pub fn children_of(parents: &[SearchBox]) -> Box<dyn Iterator<Item = SearchBox> + Send> {
    let Some(first) = parents.first() else {
        return Box::new(std::iter::empty());
    };
    let depth = first.depth() + 1;
    if depth > MAX_DEPTH {
        return Box::new(std::iter::empty());
    }
    let n = grid_denominator(depth);
    let mut groups: BTreeMap<i64, Vec<[i64; 2]>> = BTreeMap::new();
    for p in parents {
        let a = p.numerators();
        groups.entry(a[0]).or_default().push([a[1], a[2]]);
    }
    let mut firsts: Vec<i64> = groups
        .keys()
        .flat_map(|&a| (10 * a - 5).max(0)..=(10 * a + 5).min(n))
        .collect();
    firsts.sort_unstable();
    firsts.dedup();
    let groups = Arc::new(groups);
    let window = move |a: i64| (10 * a - 5).max(0)..=(10 * a + 5).min(n);
    Box::new(firsts.into_iter().flat_map(move |b1| {
        let lo = (b1 - 5 + 9).div_euclid(10);
        let hi = (b1 + 5).div_euclid(10);
        let mut slab: Vec<[i64; 2]> = Vec::new();
        for (_, tails) in groups.range(lo..=hi) {
            for t in tails {
                for b2 in window(t[0]) {
                    for b3 in window(t[1]) {
                        slab.push([b2, b3]);
                    }
                }
            }
        }
        slab.sort_unstable();
        slab.dedup();
        slab.into_iter().map(move |[b2, b3]| SearchBox::new(depth, [b1, b2, b3]).expect("window in domain"))
    }))
}

/// Depth-`j+1` net points within `δ_j` of some survivor, deduplicated and sorted.
pub fn refine(survivors: &[SearchBox]) -> Vec<SearchBox> {
    let mut s = survivors.to_vec();
    s.sort_unstable();
    s.dedup();
    children_of(&s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Record {
    pub search_box: SearchBox,
    pub outcome: EliminationOutcome,
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.search_box, self.outcome.case, self.outcome.detail)
    }
}

fn parse_box(fields: &[&str], line: usize) -> Result<SearchBox> {
    if fields.len() != 4 {
        return Err(parse_err(line, "expected `depth a1 a2 a3`"));
    }
    let depth: u32 = fields[0].parse().map_err(|_| parse_err(line, "bad depth"))?;
    let mut a = [0i64; 3];
    for k in 0..3 {
        a[k] = fields[k + 1].parse().map_err(|_| parse_err(line, format!("bad numerator {:?}", fields[k + 1])))?;
    }
    SearchBox::new(depth, a).map_err(|e| parse_err(line, e.to_string()))
}

fn parse_record(s: &str, line: usize) -> Result<Record> {
    let fields: Vec<&str> = s.split_ascii_whitespace().collect();
    if fields.len() != 6 {
        return Err(parse_err(line, "expected `depth a1 a2 a3 CASE detail`"));
    }
    let search_box = parse_box(&fields[..4], line)?;
    let case = match Case::parse(fields[4]) {
        Some(Case::Unresolved) | None => return Err(parse_err(line, format!("bad case {:?}", fields[4]))),
        Some(c) => c,
    };
    let detail = fields[5].parse().map_err(|_| parse_err(line, "bad detail"))?;
    Ok(Record { search_box, outcome: EliminationOutcome { case, detail } })
}

/// A fully loaded certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub constants_hash: String,
    pub domain: Domain,
    pub max_depth: u32,
    pub records: Vec<Record>,
}

impl Certificate {
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = CertificateReader::new(text.as_bytes())?;
        let mut records = Vec::new();
        while let Some(r) = reader.next_record()? {
            records.push(r);
        }
        let (max_depth, _) = reader.trailer.expect("reader ends at trailer");
        Ok(Certificate { constants_hash: reader.constants_hash, domain: reader.domain, max_depth, records })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("#constants-hash {}\n{}\n", self.constants_hash, self.domain.header_line());
        for r in &self.records {
            s.push_str(&format!("{r}\n"));
        }
        s.push_str(&format!("#end {} {}\n", self.max_depth, self.records.len()));
        s
    }
}

/// Streaming certificate parser.
pub struct CertificateReader<R: BufRead> {
    lines: io::Lines<R>,
    line_no: usize,
    pub constants_hash: String,
    pub domain: Domain,
    count: u64,
    trailer: Option<(u32, u64)>,
}

impl<R: BufRead> CertificateReader<R> {
    pub fn new(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = |no: usize| -> Result<String> {
            lines.next().ok_or_else(|| parse_err(no, "unexpected end of file"))?.map_err(Into::into)
        };
        let first = next(1)?;
        let hash = first
            .strip_prefix("#constants-hash ")
            .map(str::trim)
            .filter(|h| h.len() == 64 && h.chars().all(|c| c.is_ascii_hexdigit()))
            .ok_or_else(|| parse_err(1, "expected `#constants-hash <hex>`"))?
            .to_string();
        let second = next(2)?;
        let fields: Vec<&str> = second
            .strip_prefix("#domain ")
            .ok_or_else(|| parse_err(2, "expected `#domain ...`"))?
            .split_ascii_whitespace()
            .collect();
        let domain = Domain::parse_fields(&fields, 2)?;
        Ok(CertificateReader { lines, line_no: 2, constants_hash: hash, domain, count: 0, trailer: None })
    }

    /// Next record, or `None` after a well-formed trailer.
    pub fn next_record(&mut self) -> Result<Option<Record>> {
        if self.trailer.is_some() {
            return Ok(None);
        }
        self.line_no += 1;
        let line = match self.lines.next() {
            None => return Err(parse_err(self.line_no, "missing `#end` trailer (truncated file?)")),
            Some(l) => l?,
        };
        if let Some(rest) = line.strip_prefix("#end ") {
            let f: Vec<&str> = rest.split_ascii_whitespace().collect();
            let parsed = (f.len() == 2)
                .then(|| Some((f[0].parse::<u32>().ok()?, f[1].parse::<u64>().ok()?)))
                .flatten()
                .ok_or_else(|| parse_err(self.line_no, "expected `#end <max-depth> <count>`"))?;
            if parsed.1 != self.count {
                return Err(parse_err(
                    self.line_no,
                    format!("trailer counts {} records, file has {}", parsed.1, self.count),
                ));
            }
            if let Some(extra) = self.lines.next() {
                extra?;
                return Err(parse_err(self.line_no + 1, "content after `#end` trailer"));
            }
            self.trailer = Some(parsed);
            return Ok(None);
        }
        let r = parse_record(&line, self.line_no)?;
        self.count += 1;
        Ok(Some(r))
    }

    pub fn max_depth(&self) -> Option<u32> {
        self.trailer.map(|t| t.0)
    }

    pub fn line_no(&self) -> usize {
        self.line_no
    }
}

/// Per-level accounting: `survivors + records = classified`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LevelStats {
    pub depth: u32,
    pub classified: u64,
    pub survivors: u64,
    /// Records by case I..IV.
    pub by_case: [u64; 4],
}

impl LevelStats {
    pub fn records(&self) -> u64 {
        self.by_case.iter().sum()
    }
}

fn case_index(c: Case) -> usize {
    match c {
        Case::I => 0,
        Case::II => 1,
        Case::III => 2,
        Case::IV => 3,
        Case::Unresolved => unreachable!("unresolved boxes are not records"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub depth: u32,
    pub level: LevelStats,
    pub total_classified: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Domain,
    pub depth_cap: u32,
    pub workers: usize,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_interval: Duration,
    /// Stop (after writing a checkpoint) once this many boxes were classified
    /// by this invocation.
    pub stop_after: Option<u64>,
}

impl RunConfig {
    pub fn new(domain: Domain, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            domain,
            depth_cap: DEFAULT_DEPTH_CAP.max(domain.depth),
            workers: 1,
            out: out.into(),
            checkpoint: None,
            checkpoint_interval: DEFAULT_CHECKPOINT_INTERVAL,
            stop_after: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.workers == 0 {
            return Err(TraversalError::Config("worker count must be at least 1".into()));
        }
        if self.depth_cap < self.domain.depth || self.depth_cap > MAX_DEPTH {
            return Err(TraversalError::Config(format!(
                "depth cap {} must lie in [{}, {MAX_DEPTH}]",
                self.depth_cap, self.domain.depth
            )));
        }
        if self.stop_after.is_some() && self.checkpoint.is_none() {
            return Err(TraversalError::Config("stop-after needs a checkpoint path".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub certificate: PathBuf,
    pub records: u64,
    pub max_depth: u32,
    pub levels: Vec<LevelStats>,
}

fn partial_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Appends to the in-progress certificate while hashing every byte.
struct Sink {
    file: BufWriter<File>,
    hasher: Sha256,
    bytes: u64,
    records: u64,
}

impl Sink {
    fn write_line(&mut self, line: &str) -> io::Result<()> {
        self.file.write_all(line.as_bytes())?;
        self.file.write_all(b"\n")?;
        self.hasher.update(line.as_bytes());
        self.hasher.update(b"\n");
        self.bytes += line.len() as u64 + 1;
        Ok(())
    }

    fn prefix_hash(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }
}

/// Traversal state between chunks; exactly what a checkpoint stores.
struct State {
    config: RunConfig,
    depth: u32,
    cursor: u64,
    parents: Vec<SearchBox>,
    survivors: Vec<SearchBox>,
    levels: Vec<LevelStats>,
    complete: bool,
}

impl State {
    fn level_cells(&self) -> Box<dyn Iterator<Item = SearchBox> + Send> {
        if self.depth == self.config.domain.depth {
            self.config.domain.cells()
        } else {
            children_of(&self.parents)
        }
    }

    fn current_stats(&mut self) -> &mut LevelStats {
        let depth = self.depth;
        if self.levels.last().map(|l| l.depth) != Some(depth) {
            self.levels.push(LevelStats { depth, ..Default::default() });
        }
        self.levels.last_mut().expect("just pushed")
    }

    fn max_depth(&self) -> u32 {
        self.levels.last().map(|l| l.depth).unwrap_or(self.config.domain.depth)
    }
}

fn write_boxes(out: &mut impl Write, boxes: &[SearchBox]) -> io::Result<()> {
    for b in boxes {
        writeln!(out, "{b}")?;
    }
    Ok(())
}

fn save_checkpoint(path: &Path, state: &State, sink: &Sink) -> Result<()> {
    save_checkpoint_parts(path, state, sink.records, sink.bytes, &sink.prefix_hash())
}

fn save_checkpoint_parts(path: &Path, state: &State, records: u64, bytes: u64, hash: &str) -> Result<()> {
    let tmp = {
        let mut s = path.as_os_str().to_owned();
        s.push(".tmp");
        PathBuf::from(s)
    };
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        let c = &state.config;
        writeln!(w, "#checkpoint 1")?;
        writeln!(w, "#constants-hash {}", constants_hash())?;
        writeln!(w, "{}", c.domain.header_line())?;
        writeln!(w, "#depth-cap {}", c.depth_cap)?;
        writeln!(w, "#interval-secs {}", c.checkpoint_interval.as_secs())?;
        writeln!(w, "#out {}", c.out.display())?;
        writeln!(w, "#records {records} {bytes} {hash}")?;
        writeln!(w, "#level {} {}", state.depth, state.cursor)?;
        writeln!(w, "#complete {}", u8::from(state.complete))?;
        for l in &state.levels {
            let b = l.by_case;
            writeln!(w, "#stats {} {} {} {} {} {} {}", l.depth, l.classified, l.survivors, b[0], b[1], b[2], b[3])?;
        }
        writeln!(w, "#parents")?;
        write_boxes(&mut w, &state.parents)?;
        writeln!(w, "#survivors")?;
        write_boxes(&mut w, &state.survivors)?;
        w.flush()?;
        w.get_ref().sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Certificate path recorded in a checkpoint.
pub fn checkpoint_out(path: &Path) -> Result<PathBuf> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .find_map(|l| l.strip_prefix("#out "))
        .map(PathBuf::from)
        .ok_or_else(|| TraversalError::Resume("checkpoint lacks #out".into()))
}

struct Loaded {
    state: State,
    records: u64,
    bytes: u64,
    prefix_hash: String,
}

fn load_checkpoint(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = BTreeMap::new();
    let mut stats = Vec::new();
    let mut section: Option<&str> = None;
    let mut parents = Vec::new();
    let mut survivors = Vec::new();
    for (no, line) in &mut lines {
        if line == "#parents" || line == "#survivors" {
            section = Some(line);
            continue;
        }
        match section {
            None => {
                let (key, rest) = line.split_once(' ').ok_or_else(|| parse_err(no, "bad checkpoint header"))?;
                if key == "#stats" {
                    let v: Vec<u64> = rest
                        .split_ascii_whitespace()
                        .map(|f| f.parse().map_err(|_| parse_err(no, "bad stats")))
                        .collect::<Result<_>>()?;
                    if v.len() != 7 {
                        return Err(parse_err(no, "bad stats"));
                    }
                    stats.push(LevelStats {
                        depth: v[0] as u32,
                        classified: v[1],
                        survivors: v[2],
                        by_case: [v[3], v[4], v[5], v[6]],
                    });
                } else {
                    header.insert(key.to_string(), (no, rest.to_string()));
                }
            }
            Some(s) => {
                let f: Vec<&str> = line.split_ascii_whitespace().collect();
                let b = parse_box(&f, no)?;
                if s == "#parents" {
                    parents.push(b);
                } else {
                    survivors.push(b);
                }
            }
        }
    }
    let get = |k: &str| header.get(k).ok_or_else(|| TraversalError::Resume(format!("checkpoint lacks {k}")));
    if get("#checkpoint")?.1 != "1" {
        return Err(TraversalError::Resume("unknown checkpoint version".into()));
    }
    let found = get("#constants-hash")?.1.trim().to_string();
    let expected = constants_hash();
    if found != expected {
        return Err(TraversalError::ConstantsMismatch { expected, found });
    }
    let (no, dom) = get("#domain")?;
    let domain = Domain::parse_fields(&dom.split_ascii_whitespace().collect::<Vec<_>>(), *no)?;
    let num = |k: &str| -> Result<u64> {
        let (no, v) = get(k)?;
        v.trim().parse().map_err(|_| parse_err(*no, format!("bad {k}")))
    };
    let depth_cap = num("#depth-cap")? as u32;
    let interval = Duration::from_secs(num("#interval-secs")?);
    let out = PathBuf::from(&get("#out")?.1);
    let (no, rec) = get("#records")?;
    let rec: Vec<&str> = rec.split_ascii_whitespace().collect();
    if rec.len() != 3 {
        return Err(parse_err(*no, "bad #records"));
    }
    let records = rec[0].parse().map_err(|_| parse_err(*no, "bad record count"))?;
    let bytes = rec[1].parse().map_err(|_| parse_err(*no, "bad byte count"))?;
    let (no, lvl) = get("#level")?;
    let lvl: Vec<&str> = lvl.split_ascii_whitespace().collect();
    let parse_lvl = || -> Option<(u32, u64)> { Some((lvl.first()?.parse().ok()?, lvl.get(1)?.parse().ok()?)) };
    let (depth, cursor) = parse_lvl().ok_or_else(|| parse_err(*no, "bad #level"))?;
    let complete = num("#complete")? == 1;
    let mut config = RunConfig::new(domain, out);
    config.depth_cap = depth_cap;
    config.checkpoint = Some(path.to_path_buf());
    config.checkpoint_interval = interval;
    Ok(Loaded {
        state: State { config, depth, cursor, parents, survivors, levels: stats, complete },
        records,
        bytes,
        prefix_hash: rec[2].to_string(),
    })
}

/// Classifies every box of the configured domain, refining unresolved boxes
/// until none remain or the depth cap is reached.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    run_with_progress(config, &mut |_| {})
}

pub fn run_with_progress(config: &RunConfig, progress: &mut dyn FnMut(&Progress)) -> Result<RunReport> {
    config.validate()?;
    let partial = partial_path(&config.out);
    let file = File::create(&partial)?;
    let mut sink = Sink { file: BufWriter::new(file), hasher: Sha256::new(), bytes: 0, records: 0 };
    sink.write_line(&format!("#constants-hash {}", constants_hash()))?;
    sink.write_line(&config.domain.header_line())?;
    let state = State {
        config: config.clone(),
        depth: config.domain.depth,
        cursor: 0,
        parents: Vec::new(),
        survivors: Vec::new(),
        levels: Vec::new(),
        complete: false,
    };
    drive(state, sink, progress)
}

/// Continues a checkpointed run. `workers` and `stop_after` apply to this
/// invocation only.
pub fn resume(
    checkpoint: &Path,
    workers: usize,
    stop_after: Option<u64>,
    progress: &mut dyn FnMut(&Progress),
) -> Result<RunReport> {
    let Loaded { mut state, records, bytes, prefix_hash } = load_checkpoint(checkpoint)?;
    state.config.workers = workers;
    state.config.stop_after = stop_after;
    state.config.validate()?;
    let out = state.config.out.clone();
    if state.complete && out.exists() {
        let s = &state;
        return Ok(RunReport { certificate: out, records, max_depth: s.max_depth(), levels: s.levels.clone() });
    }
    let partial = partial_path(&out);
    let mut file = OpenOptions::new().read(true).write(true).open(&partial).map_err(|e| {
        TraversalError::Resume(format!("cannot open {}: {e}", partial.display()))
    })?;
    let mut hasher = Sha256::new();
    let mut remaining = bytes;
    let mut buf = vec![0u8; 1 << 20];
    while remaining > 0 {
        let want = remaining.min(buf.len() as u64) as usize;
        let got = file.read(&mut buf[..want])?;
        if got == 0 {
            return Err(TraversalError::Resume("partial certificate is shorter than recorded".into()));
        }
        hasher.update(&buf[..got]);
        remaining -= got as u64;
    }
    if hex::encode(hasher.clone().finalize()) != prefix_hash {
        return Err(TraversalError::Resume("partial certificate does not match checkpoint".into()));
    }
    file.set_len(bytes)?;
    file.seek(SeekFrom::Start(bytes))?;
    let sink = Sink { file: BufWriter::new(file), hasher, bytes, records };
    drive(state, sink, progress)
}

fn drive(mut state: State, mut sink: Sink, progress: &mut dyn FnMut(&Progress)) -> Result<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(state.config.workers)
        .build()
        .map_err(|e| TraversalError::Config(e.to_string()))?;
    let mut last_checkpoint = Instant::now();
    let mut classified_here = 0u64;
    let mut total: u64 = state.levels.iter().map(|l| l.classified).sum();

    while !state.complete {
        let mut cells = state.level_cells().skip(state.cursor as usize).peekable();
        state.current_stats();
        let mut buf: Vec<SearchBox> = Vec::with_capacity(CHUNK);
        loop {
            buf.clear();
            let limit = match state.config.stop_after {
                Some(s) => (s.saturating_sub(classified_here) as usize).min(CHUNK),
                None => CHUNK,
            };
            buf.extend(cells.by_ref().take(limit));
            if !buf.is_empty() {
                let outcomes: Vec<EliminationOutcome> =
                    pool.install(|| buf.par_iter().with_min_len(256).map(classify).collect());
                let mut stats = *state.current_stats();
                for (b, o) in buf.iter().zip(&outcomes) {
                    stats.classified += 1;
                    if o.is_eliminated() {
                        stats.by_case[case_index(o.case)] += 1;
                        sink.write_line(&Record { search_box: *b, outcome: *o }.to_string())?;
                        sink.records += 1;
                    } else {
                        stats.survivors += 1;
                        state.survivors.push(*b);
                    }
                }
                *state.current_stats() = stats;
                state.cursor += buf.len() as u64;
                classified_here += buf.len() as u64;
                total += buf.len() as u64;
                progress(&Progress { depth: state.depth, level: stats, total_classified: total });
            }
            let level_done = cells.peek().is_none();
            if level_done {
                break;
            }
            if let Some(path) = state.config.checkpoint.clone() {
                let stop = state.config.stop_after.is_some_and(|s| classified_here >= s);
                if stop || last_checkpoint.elapsed() >= state.config.checkpoint_interval {
                    sink.file.flush()?;
                    save_checkpoint(&path, &state, &sink)?;
                    last_checkpoint = Instant::now();
                }
                if stop {
                    return Err(TraversalError::Interrupted { classified: classified_here, checkpoint: path });
                }
            }
        }
        // Level complete.
        if state.survivors.is_empty() {
            state.complete = true;
        } else if state.depth >= state.config.depth_cap {
            sink.file.flush()?;
            return Err(TraversalError::DepthCap {
                depth: state.depth,
                survivors: std::mem::take(&mut state.survivors),
                levels: state.levels.clone(),
            });
        } else {
            state.parents = std::mem::take(&mut state.survivors);
            state.depth += 1;
            state.cursor = 0;
        }
        if !state.complete {
            if let Some(path) = state.config.checkpoint.clone() {
                sink.file.flush()?;
                save_checkpoint(&path, &state, &sink)?;
                last_checkpoint = Instant::now();
                if state.config.stop_after.is_some_and(|s| classified_here >= s) {
                    return Err(TraversalError::Interrupted { classified: classified_here, checkpoint: path });
                }
            }
        }
    }

    let max_depth = state.max_depth();
    sink.write_line(&format!("#end {} {}", max_depth, sink.records))?;
    sink.file.flush()?;
    sink.file.get_ref().sync_all()?;
    let (records, bytes, hash) = (sink.records, sink.bytes, sink.prefix_hash());
    drop(sink);
    let out = state.config.out.clone();
    fs::rename(partial_path(&out), &out)?;
    if let Some(path) = state.config.checkpoint.clone() {
        save_checkpoint_parts(&path, &state, records, bytes, &hash)?;
    }
    Ok(RunReport { certificate: out, records, max_depth, levels: state.levels })
}

/// First problem found by the verifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyFailure {
    ConstantsMismatch { expected: String, found: String },
    /// Replaying the record at `index` (0-based) gave a different outcome.
    Replay { index: u64, record: String, replayed: String },
    /// A record that is not a cell of its level, or out of canonical order.
    Misplaced { index: u64, record: String },
    /// A cell with no record that the traversal should have eliminated.
    Uncovered { cell: String, replayed: String },
    /// Unresolved cells remain at the deepest level.
    Incomplete { cell: String, remaining: u64 },
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyFailure::ConstantsMismatch { expected, found } => {
                write!(f, "constants hash {found} does not match {expected}")
            }
            VerifyFailure::Replay { index, record, replayed } => {
                write!(f, "record {index} ({record}) replays as {replayed}")
            }
            VerifyFailure::Misplaced { index, record } => {
                write!(f, "record {index} ({record}) is not a cell of its level or is out of order")
            }
            VerifyFailure::Uncovered { cell, replayed } => {
                write!(f, "cell {cell} is not covered (no record; classifies as {replayed})")
            }
            VerifyFailure::Incomplete { cell, remaining } => {
                write!(f, "{remaining} cells remain unresolved at the deepest level, first {cell}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifySummary {
    pub records: u64,
    pub max_depth: u32,
    pub open_cells: u64,
}

pub type VerifyResult = std::result::Result<VerifySummary, VerifyFailure>;

/// Checks a certificate: constants hash, replay of every record, and exact
/// coverage (every cell of every level is either recorded or unresolved, and
/// no unresolved cell remains at the deepest level).
pub fn verify_certificate(cert: &Certificate) -> VerifyResult {
    let mut it = cert.records.iter().copied();
    let out = verify_stream(
        &cert.constants_hash,
        cert.domain,
        &mut || Ok(it.next()),
        1,
    )
    .expect("in-memory records cannot fail to parse")?;
    if out.max_depth != cert.max_depth {
        return Err(VerifyFailure::Incomplete { cell: format!("level {}", out.max_depth), remaining: 0 });
    }
    Ok(out)
}

/// Streaming verification of a certificate file. `Err` on unreadable or
/// malformed input, `Ok(Err)` on a verification failure.
pub fn verify_certificate_file(path: &Path, workers: usize) -> Result<VerifyResult> {
    let mut reader = CertificateReader::new(BufReader::new(File::open(path)?))?;
    let hash = reader.constants_hash.clone();
    let domain = reader.domain;
    let res = verify_stream(&hash, domain, &mut || reader.next_record(), workers)?;
    let res = match res {
        Ok(summary) => {
            // Drain to validate the rest of the file and read the trailer.
            if let Some(r) = reader.next_record()? {
                return Ok(Err(VerifyFailure::Misplaced { index: summary.records, record: r.to_string() }));
            }
            let declared = reader.max_depth().expect("trailer read");
            if declared != summary.max_depth {
                Err(VerifyFailure::Incomplete {
                    cell: format!("level {declared} declared, {} reached", summary.max_depth),
                    remaining: 0,
                })
            } else {
                Ok(summary)
            }
        }
        Err(f) => {
            Err(f)
        }
    };
    Ok(res)
}

enum Pending {
    Recorded(u64, Record),
    Open(SearchBox),
}

fn verify_stream(
    hash: &str,
    domain: Domain,
    next: &mut dyn FnMut() -> Result<Option<Record>>,
    workers: usize,
) -> Result<VerifyResult> {
    let expected = constants_hash();
    if hash != expected {
        return Ok(Err(VerifyFailure::ConstantsMismatch { expected, found: hash.to_string() }));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| TraversalError::Config(e.to_string()))?;
    let mut index = 0u64;
    let mut pending_record = next()?;
    let mut depth = domain.depth;
    let mut open: Vec<SearchBox> = Vec::new();
    let mut max_depth = domain.depth;

    loop {
        let cells: Box<dyn Iterator<Item = SearchBox> + Send> =
            if depth == domain.depth { domain.cells() } else { children_of(&open) };
        let mut next_open = Vec::new();
        let mut batch: Vec<Pending> = Vec::with_capacity(CHUNK);
        let mut any_cell = false;
        let flush = |batch: &mut Vec<Pending>, next_open: &mut Vec<SearchBox>| -> Option<VerifyFailure> {
            let replays: Vec<EliminationOutcome> = pool.install(|| {
                batch
                    .par_iter()
                    .with_min_len(256)
                    .map(|p| match p {
                        Pending::Recorded(_, r) => classify(&r.search_box),
                        Pending::Open(b) => classify(b),
                    })
                    .collect()
            });
            for (p, o) in batch.iter().zip(replays) {
                match p {
                    Pending::Recorded(i, r) => {
                        if o != r.outcome {
                            return Some(VerifyFailure::Replay {
                                index: *i,
                                record: r.to_string(),
                                replayed: format!("{} {}", o.case, o.detail),
                            });
                        }
                    }
                    Pending::Open(b) => {
                        if o.is_eliminated() {
                            return Some(VerifyFailure::Uncovered {
                                cell: b.to_string(),
                                replayed: format!("{} {}", o.case, o.detail),
                            });
                        }
                        next_open.push(*b);
                    }
                }
            }
            batch.clear();
            None
        };
        for cell in cells {
            any_cell = true;
            match pending_record {
                Some(r) if r.search_box.depth() == depth && r.search_box < cell => {
                    return Ok(Err(VerifyFailure::Misplaced { index, record: r.to_string() }));
                }
                Some(r) if r.search_box == cell => {
                    batch.push(Pending::Recorded(index, r));
                    index += 1;
                    pending_record = next()?;
                }
                _ => batch.push(Pending::Open(cell)),
            }
            if batch.len() >= CHUNK {
                if let Some(f) = flush(&mut batch, &mut next_open) {
                    return Ok(Err(f));
                }
            }
        }
        if let Some(f) = flush(&mut batch, &mut next_open) {
            return Ok(Err(f));
        }
        if any_cell {
            max_depth = depth;
        }
        // Records left at this depth did not match any cell.
        if let Some(r) = pending_record {
            if r.search_box.depth() <= depth {
                return Ok(Err(VerifyFailure::Misplaced { index, record: r.to_string() }));
            }
        }
        if next_open.is_empty() {
            if let Some(r) = pending_record {
                return Ok(Err(VerifyFailure::Misplaced { index, record: r.to_string() }));
            }
            return Ok(Ok(VerifySummary { records: index, max_depth, open_cells: 0 }));
        }
        if pending_record.is_none() || depth >= MAX_DEPTH {
            return Ok(Err(VerifyFailure::Incomplete {
                cell: next_open[0].to_string(),
                remaining: next_open.len() as u64,
            }));
        }
        open = next_open;
        depth += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_grid_shape() {
        let g = seed_grid();
        assert_eq!(g.len(), 1_030_301);
        assert_eq!(g[0].numerators(), [0, 0, 0]);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn refine_counts() {
        let one = SearchBox::new(0, [50, 50, 50]).unwrap();
        assert_eq!(refine(&[one]).len(), 1331);
        let corner = SearchBox::new(0, [0, 0, 0]).unwrap();
        assert_eq!(refine(&[corner]).len(), 216);
        let next = SearchBox::new(0, [51, 50, 50]).unwrap();
        // Windows share the plane b1 = 505.
        assert_eq!(refine(&[one, next]).len(), 2 * 1331 - 121);
        let kids = refine(&[next, one, one]);
        assert!(kids.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn refine_matches_naive_union() {
        let parents: Vec<SearchBox> = [[3, 4, 5], [4, 4, 5], [3, 6, 5], [10, 0, 100], [11, 1, 99]]
            .iter()
            .map(|a| SearchBox::new(0, *a).unwrap())
            .collect();
        let mut naive: Vec<SearchBox> = parents.iter().flat_map(|p| p.children()).collect();
        naive.sort();
        naive.dedup();
        assert_eq!(refine(&parents), naive);
    }

    #[test]
    fn domain_helpers() {
        let d = Domain::centers_within([1.88; 3], [1.95; 3], 2).unwrap();
        assert_eq!(d.ranges, [(5985, 6207); 3]);
        let d = Domain::centers_within([0.0; 3], [0.09; 3], 0).unwrap();
        assert_eq!(d.ranges, [(0, 2); 3]);
        assert_eq!(d.cell_count(), 27);
        let d = Domain::around_point([1.9106332362; 3], 2, 3).unwrap();
        assert_eq!(d.ranges, [(60815, 60819); 3]);
        assert!(Domain::new(0, [(0, 101), (0, 1), (0, 1)]).is_err());
        assert!(Domain::new(0, [(5, 1), (0, 1), (0, 1)]).unwrap().is_empty());
    }

    #[test]
    fn reader_rejects_truncation() {
        let text = format!("#constants-hash {}\n#domain 0 0 0 0 0 0 0\n0 0 0 0 I 50\n", constants_hash());
        assert!(matches!(Certificate::parse(&text), Err(TraversalError::Parse { line: 4, .. })));
        let full = format!("{text}#end 0 1\n");
        let c = Certificate::parse(&full).unwrap();
        assert_eq!(c.records.len(), 1);
        assert_eq!(c.to_text(), full);
        let wrong = format!("{text}#end 0 2\n");
        assert!(Certificate::parse(&wrong).is_err());
        let bad_case = full.replace("I 50", "V 50");
        assert!(Certificate::parse(&bad_case).is_err());
    }
}

//! Line-oriented text files for instances and solutions.
//!
//! Reals are written with 17 significant digits, which is enough for every
//! `f64` to read back bit for bit. Blank lines are ignored on input.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::Path;

use crowdship_core::{
    BehaviorCoefficients, Bundle, DepotSpec, DriverSpec, Instance, ModelError, Offer, Point, Solution, SolveStatus,
    TaskSpec,
};

pub const INSTANCE_HEADER: &str = "CROWDSHIP-INSTANCE v1";
pub const SOLUTION_HEADER: &str = "CROWDSHIP-SOLUTION v1";

#[derive(Debug)]
pub enum FormatError {
    Io(io::Error),
    Parse { line: usize, message: String },
    Invalid(ModelError),
    /// The instance uses features the file format cannot express.
    Unsupported(&'static str),
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Io(e) => write!(f, "{e}"),
            FormatError::Parse { line, message } => write!(f, "line {line}: {message}"),
            FormatError::Invalid(e) => write!(f, "invalid instance: {e}"),
            FormatError::Unsupported(what) => write!(f, "cannot be written to a file: {what}"),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<io::Error> for FormatError {
    fn from(e: io::Error) -> Self {
        FormatError::Io(e)
    }
}

/// Formats a real with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map_or_else(|| String::from("none"), real)
}

/// Numbered non-blank lines.
pub(crate) struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)>> = Box::new(
            text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()),
        );
        Lines { inner: it.peekable(), last: 0 }
    }

    pub(crate) fn next(&mut self, what: &str) -> Result<(usize, &'a str), FormatError> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(FormatError::Parse { line: self.last + 1, message: format!("unexpected end of file, expected {what}") }),
        }
    }

    pub(crate) fn has_more(&mut self) -> bool {
        self.inner.peek().is_some()
    }

    /// The value after `key` on the next line.
    pub(crate) fn keyed(&mut self, key: &str) -> Result<(usize, &'a str), FormatError> {
        let (n, l) = self.next(key)?;
        match l.split_once(char::is_whitespace) {
            Some((k, v)) if k == key => Ok((n, v.trim())),
            _ if l == key => Ok((n, "")),
            _ => Err(err(n, format!("expected `{key} ...`, found {l:?}"))),
        }
    }
}

pub(crate) fn err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

pub(crate) fn parse_real(line: usize, field: &str, s: &str) -> Result<f64, FormatError> {
    s.parse::<f64>().map_err(|_| err(line, format!("{field}: not a number: {s:?}")))
}

pub(crate) fn parse_opt_real(line: usize, field: &str, s: &str) -> Result<Option<f64>, FormatError> {
    if s == "none" {
        Ok(None)
    } else {
        parse_real(line, field, s).map(Some)
    }
}

pub(crate) fn parse_int<T: std::str::FromStr>(line: usize, field: &str, s: &str) -> Result<T, FormatError> {
    s.parse::<T>().map_err(|_| err(line, format!("{field}: not a non-negative integer: {s:?}")))
}

fn fields<'a>(line: usize, l: &'a str, min: usize, max: usize, what: &str) -> Result<Vec<&'a str>, FormatError> {
    let f: Vec<&str> = l.split_whitespace().collect();
    if f.len() < min || f.len() > max {
        let expected = if min == max { format!("{min}") } else { format!("{min} to {max}") };
        return Err(err(line, format!("{what}: expected {expected} fields, found {}", f.len())));
    }
    Ok(f)
}

fn section(lines: &mut Lines<'_>, key: &str) -> Result<usize, FormatError> {
    let (n, v) = lines.keyed(key)?;
    parse_int(n, key, v)
}

fn id_list(line: usize, s: &str) -> Result<Vec<u32>, FormatError> {
    s.split(',').map(|x| parse_int(line, "task id", x)).collect()
}

pub fn write_instance(instance: &Instance) -> Result<String, FormatError> {
    if !instance.extra_predictors().is_empty() {
        return Err(FormatError::Unsupported("extra bundle predictors"));
    }
    if instance.drivers().iter().any(|w| !w.behavior.driver_coeffs.is_empty()) {
        return Err(FormatError::Unsupported("driver-specific predictors"));
    }
    let name = instance.name();
    if name.contains(['\n', '\r']) || name.trim() != name {
        return Err(FormatError::Unsupported("names with line breaks or surrounding whitespace"));
    }
    let mut s = String::new();
    let all: BTreeSet<u32> = instance.tasks().iter().map(|t| t.id).collect();
    let _ = writeln!(s, "{INSTANCE_HEADER}");
    let _ = writeln!(s, "NAME {name}");
    let _ = writeln!(s, "SEED {}", instance.seed().map_or_else(|| String::from("none"), |v| v.to_string()));
    let _ = writeln!(s, "DEPOTS {}", instance.depots().len());
    for d in instance.depots() {
        let servable = if d.servable_tasks == all {
            String::from("ALL")
        } else if d.servable_tasks.is_empty() {
            String::from("NONE")
        } else {
            d.servable_tasks.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
        };
        let _ = writeln!(s, "{} {} {} {}", d.id, real(d.location.x), real(d.location.y), servable);
    }
    let _ = writeln!(s, "TASKS {}", instance.tasks().len());
    for t in instance.tasks() {
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            t.id,
            real(t.location.x),
            real(t.location.y),
            real(t.load),
            real(t.outsource_cost)
        );
    }
    let _ = writeln!(s, "DRIVERS {}", instance.drivers().len());
    for w in instance.drivers() {
        let b = &w.behavior;
        let _ = write!(
            s,
            "{} {} {} {} {} {} {} {} {} {}",
            w.id,
            real(w.origin.x),
            real(w.origin.y),
            real(w.destination.x),
            real(w.destination.y),
            real(w.capacity),
            real(b.intercept),
            real(b.detour_coeff),
            real(b.size_coeff),
            real(b.compensation_coeff)
        );
        if let Some(c) = w.class_tag {
            let _ = write!(s, " {c}");
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut lines = Lines::new(text);
    let (n, head) = lines.next("header")?;
    if head != INSTANCE_HEADER {
        return Err(err(n, format!("expected header {INSTANCE_HEADER:?}")));
    }
    let (_, name) = lines.keyed("NAME")?;
    let (n, seed) = lines.keyed("SEED")?;
    let seed = if seed == "none" { None } else { Some(parse_int(n, "SEED", seed)?) };

    let depot_count = section(&mut lines, "DEPOTS")?;
    // servable lists are resolved once the task ids are known
    let mut raw_depots = Vec::with_capacity(depot_count);
    for _ in 0..depot_count {
        let (n, l) = lines.next("depot line")?;
        let f = fields(n, l, 4, 4, "depot")?;
        let id = parse_int(n, "depot id", f[0])?;
        let loc = Point::new(parse_real(n, "x", f[1])?, parse_real(n, "y", f[2])?);
        let servable = match f[3] {
            "ALL" => None,
            "NONE" => Some(Vec::new()),
            list => Some(id_list(n, list)?),
        };
        raw_depots.push((id, loc, servable));
    }

    let task_count = section(&mut lines, "TASKS")?;
    let mut tasks = Vec::with_capacity(task_count);
    for _ in 0..task_count {
        let (n, l) = lines.next("task line")?;
        let f = fields(n, l, 5, 5, "task")?;
        tasks.push(TaskSpec::new(
            parse_int(n, "task id", f[0])?,
            Point::new(parse_real(n, "x", f[1])?, parse_real(n, "y", f[2])?),
            parse_real(n, "load", f[3])?,
            parse_real(n, "cost", f[4])?,
        ));
    }

    let driver_count = section(&mut lines, "DRIVERS")?;
    let mut drivers = Vec::with_capacity(driver_count);
    for _ in 0..driver_count {
        let (n, l) = lines.next("driver line")?;
        let f = fields(n, l, 10, 11, "driver")?;
        let r = |i: usize, what: &str| parse_real(n, what, f[i]);
        let behavior = BehaviorCoefficients::new(r(6, "alpha")?, r(7, "beta1")?, r(8, "beta2")?, r(9, "gamma")?);
        let mut w = DriverSpec::new(
            parse_int(n, "driver id", f[0])?,
            Point::new(r(1, "sx")?, r(2, "sy")?),
            Point::new(r(3, "ex")?, r(4, "ey")?),
            r(5, "capacity")?,
            behavior,
        );
        if let Some(c) = f.get(10) {
            w = w.with_class(parse_int(n, "class tag", c)?);
        }
        drivers.push(w);
    }
    if let Some((n, l)) = lines.has_more().then(|| lines.next("")).transpose()? {
        return Err(err(n, format!("unexpected trailing content {l:?}")));
    }

    let all: Vec<u32> = tasks.iter().map(|t| t.id).collect();
    let depots = raw_depots
        .into_iter()
        .map(|(id, loc, servable)| DepotSpec::new(id, loc, servable.unwrap_or_else(|| all.clone())))
        .collect();
    Instance::new(name, seed, tasks, depots, drivers).map_err(FormatError::Invalid)
}

pub fn save_instance(instance: &Instance, path: &Path) -> Result<(), FormatError> {
    fs::write(path, write_instance(instance)?)?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<Instance, FormatError> {
    parse_instance(&fs::read_to_string(path)?)
}

/// `<driver_id> <depot_id> <task_id,...> <compensation> <acceptance> <savings> <detour>`
pub fn offer_line(o: &Offer) -> String {
    let tasks = o.bundle.task_order.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",");
    format!(
        "{} {} {} {} {} {} {}",
        o.driver_id,
        o.bundle.depot_id,
        tasks,
        real(o.compensation),
        real(o.acceptance_probability),
        real(o.expected_savings),
        real(o.detour)
    )
}

pub(crate) fn parse_offer(line: usize, l: &str) -> Result<Offer, FormatError> {
    let f = fields(line, l, 7, 7, "offer")?;
    Ok(Offer {
        driver_id: parse_int(line, "driver id", f[0])?,
        bundle: Bundle::new(parse_int(line, "depot id", f[1])?, id_list(line, f[2])?),
        compensation: parse_real(line, "compensation", f[3])?,
        acceptance_probability: parse_real(line, "acceptance probability", f[4])?,
        expected_savings: parse_real(line, "expected savings", f[5])?,
        detour: parse_real(line, "detour", f[6])?,
    })
}

pub(crate) fn parse_status(line: usize, s: &str) -> Result<SolveStatus, FormatError> {
    SolveStatus::parse(s).ok_or_else(|| err(line, format!("unknown status {s:?}")))
}

pub fn write_solution(solution: &Solution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{SOLUTION_HEADER}");
    let _ = writeln!(s, "OBJECTIVE {}", real(solution.objective));
    let _ = writeln!(s, "BOUND {}", opt_real(solution.bound));
    let _ = writeln!(s, "STATUS {}", solution.status.as_str());
    for o in &solution.offers {
        let _ = writeln!(s, "{}", offer_line(o));
    }
    s
}

pub fn parse_solution(text: &str) -> Result<Solution, FormatError> {
    let mut lines = Lines::new(text);
    let (n, head) = lines.next("header")?;
    if head != SOLUTION_HEADER {
        return Err(err(n, format!("expected header {SOLUTION_HEADER:?}")));
    }
    let (n, v) = lines.keyed("OBJECTIVE")?;
    let objective = parse_real(n, "OBJECTIVE", v)?;
    let (n, v) = lines.keyed("BOUND")?;
    let bound = parse_opt_real(n, "BOUND", v)?;
    let (n, v) = lines.keyed("STATUS")?;
    let status = parse_status(n, v)?;
    let mut offers = Vec::new();
    while lines.has_more() {
        let (n, l) = lines.next("offer")?;
        offers.push(parse_offer(n, l)?);
    }
    Ok(Solution { offers, objective, bound, status })
}

pub fn save_solution(solution: &Solution, path: &Path) -> Result<(), FormatError> {
    fs::write(path, write_solution(solution))?;
    Ok(())
}

pub fn load_solution(path: &Path) -> Result<Solution, FormatError> {
    parse_solution(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, -3.0, 4.95, 1e-300, 123456789.123456789, f64::MIN_POSITIVE, -0.0] {
            let y: f64 = real(x).parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{x}");
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "CROWDSHIP-INSTANCE v1\nNAME x\nSEED none\nDEPOTS 1\n0 0 0 ALL\nTASKS 1\n0 1 1 ten 4.95\n";
        match parse_instance(text) {
            Err(FormatError::Parse { line: 7, message }) => assert!(message.contains("load")),
            other => panic!("{other:?}"),
        }
    }
}

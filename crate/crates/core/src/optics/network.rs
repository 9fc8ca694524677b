use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::qmath::{ComplexMatrix, Complex64, ZERO};

use super::jones::{jones, WaveplateKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

impl FromStr for Pol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "H" | "h" => Ok(Pol::H),
            "V" | "v" => Ok(Pol::V),
            other => Err(format!("expected polarization H or V, got `{other}`")),
        }
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pol::H => "H",
            Pol::V => "V",
        })
    }
}

/// A wave-plate angle in degrees, or an open slot to be solved for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Fixed(f64),
    Free(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveplateElement {
    pub kind: WaveplateKind,
    pub angle: Angle,
    pub path: usize,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    Waveplate(WaveplateElement),
    /// Beam displacer: H is transmitted, V moves `from → to`; all moves act at once.
    Displace(Vec<(usize, usize)>),
    /// Polarizing beam splitter on `path`: H exits to `h_out`, V to `v_out`.
    Split { path: usize, h_out: usize, v_out: usize },
    /// Discards a path, or one polarization of it.
    Block { path: usize, pol: Option<Pol> },
    /// Coherent recombination of `from` into `into`.
    Merge { into: usize, from: Vec<usize> },
}

/// What a verified network should realize.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// Computational (`0`) or Fourier (`1`) basis measurement on a qudit.
    Mub { d: usize, setting: usize },
    /// Success outcome `0` proportional to `|Φ_d⟩⟨Φ_d|` on Bob ⊗ Charlie.
    Bell { d: usize },
}

/// Amplitudes over `(path, polarization)` modes, index `2·path + pol`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPolState {
    paths: Vec<String>,
    amps: Vec<Complex64>,
}

impl PathPolState {
    pub fn vacuum(paths: &[String]) -> Self {
        Self {
            paths: paths.to_vec(),
            amps: vec![ZERO; 2 * paths.len()],
        }
    }

    pub fn from_amplitudes(paths: &[String], amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 2 * paths.len() {
            return Err(Error::Network(format!(
                "{} amplitudes for {} paths",
                amps.len(),
                paths.len()
            )));
        }
        Ok(Self {
            paths: paths.to_vec(),
            amps,
        })
    }

    pub fn paths(&self) -> &[String] {
        &self.paths
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, path: &str, pol: Pol) -> Option<Complex64> {
        let k = self.paths.iter().position(|p| p == path)?;
        Some(self.amps[2 * k + pol.index()])
    }

    pub fn set(&mut self, path: &str, pol: Pol, value: Complex64) -> Result<()> {
        let k = self
            .paths
            .iter()
            .position(|p| p == path)
            .ok_or_else(|| Error::Network(format!("undeclared path `{path}`")))?;
        self.amps[2 * k + pol.index()] = value;
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// An ordered list of optical elements acting on named paths, together with
/// the logical encoding, detector assignment and verification target.
#[derive(Clone, Debug, PartialEq)]
pub struct OpticalNetwork {
    pub name: String,
    pub paths: Vec<String>,
    /// Mode carrying logical level `i`.
    pub encoding: Vec<(usize, Pol)>,
    pub elements: Vec<Element>,
    /// Modes recorded as outcome `o`; `None` means both polarizations.
    pub detectors: Vec<Vec<(usize, Option<Pol>)>>,
    pub target: Option<Target>,
    pub tolerance: f64,
    free_slots: usize,
}

impl OpticalNetwork {
    pub fn dim(&self) -> usize {
        self.encoding.len()
    }

    pub fn outcomes(&self) -> usize {
        self.detectors.len()
    }

    pub fn free_slots(&self) -> usize {
        self.free_slots
    }

    pub fn path_index(&self, name: &str) -> Option<usize> {
        self.paths.iter().position(|p| p == name)
    }

    /// Wave plates in file order.
    pub fn waveplates(&self) -> impl Iterator<Item = &WaveplateElement> {
        self.elements.iter().filter_map(|e| match e {
            Element::Waveplate(w) => Some(w),
            _ => None,
        })
    }

    pub fn waveplate_mut(&mut self, label: &str) -> Option<&mut WaveplateElement> {
        self.elements.iter_mut().find_map(|e| match e {
            Element::Waveplate(w) if w.label.as_deref() == Some(label) => Some(w),
            _ => None,
        })
    }

    /// Fills every `?` slot, in order of appearance.
    pub fn with_angles(&self, angles: &[f64]) -> Result<OpticalNetwork> {
        if angles.len() != self.free_slots {
            return Err(Error::Network(format!(
                "{} angles supplied for {} open slots",
                angles.len(),
                self.free_slots
            )));
        }
        let mut out = self.clone();
        for e in &mut out.elements {
            if let Element::Waveplate(w) = e {
                if let Angle::Free(k) = w.angle {
                    w.angle = Angle::Fixed(angles[k]);
                }
            }
        }
        out.free_slots = 0;
        Ok(out)
    }

    /// State with logical level `level` occupied.
    pub fn encoded(&self, level: usize) -> Result<PathPolState> {
        let &(path, pol) = self
            .encoding
            .get(level)
            .ok_or_else(|| Error::Network(format!("logical level {level} is not encoded")))?;
        let mut s = PathPolState::vacuum(&self.paths);
        s.amps[2 * path + pol.index()] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        let n = self.paths.len();
        let bad = |k: usize| k >= n;
        for e in &self.elements {
            let ok = match e {
                Element::Waveplate(w) => !bad(w.path),
                Element::Displace(moves) => moves.iter().all(|&(a, b)| !bad(a) && !bad(b)),
                Element::Split { path, h_out, v_out } => !bad(*path) && !bad(*h_out) && !bad(*v_out),
                Element::Block { path, .. } => !bad(*path),
                Element::Merge { into, from } => !bad(*into) && from.iter().all(|&f| !bad(f)),
            };
            if !ok {
                return Err(Error::Network("element refers to an undeclared path".into()));
            }
        }
        Ok(())
    }
}

fn apply_element(e: &Element, amps: &mut [Complex64]) -> Result<()> {
    match e {
        Element::Waveplate(w) => {
            let theta = match w.angle {
                Angle::Fixed(t) => t,
                Angle::Free(_) => return Err(Error::Network("wave plate angle is unset".into())),
            };
            let j = jones(w.kind, theta);
            let (h, v) = (amps[2 * w.path], amps[2 * w.path + 1]);
            amps[2 * w.path] = j[(0, 0)] * h + j[(0, 1)] * v;
            amps[2 * w.path + 1] = j[(1, 0)] * h + j[(1, 1)] * v;
        }
        Element::Displace(moves) => {
            let moved: Vec<Complex64> = moves.iter().map(|&(from, _)| amps[2 * from + 1]).collect();
            for &(from, _) in moves {
                amps[2 * from + 1] = ZERO;
            }
            for (&(_, to), a) in moves.iter().zip(moved) {
                amps[2 * to + 1] += a;
            }
        }
        Element::Split { path, h_out, v_out } => {
            let (h, v) = (amps[2 * path], amps[2 * path + 1]);
            amps[2 * path] = ZERO;
            amps[2 * path + 1] = ZERO;
            amps[2 * h_out] += h;
            amps[2 * v_out + 1] += v;
        }
        Element::Block { path, pol } => match pol {
            Some(p) => amps[2 * path + p.index()] = ZERO,
            None => {
                amps[2 * path] = ZERO;
                amps[2 * path + 1] = ZERO;
            }
        },
        Element::Merge { into, from } => {
            for &f in from {
                if f != *into {
                    for q in 0..2 {
                        let a = amps[2 * f + q];
                        amps[2 * f + q] = ZERO;
                        amps[2 * into + q] += a;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Propagates `input` through every element in order.
pub fn apply_network(net: &OpticalNetwork, input: &PathPolState) -> Result<PathPolState> {
    net.check()?;
    if let Some(p) = input.paths.iter().find(|p| !net.paths.contains(p)) {
        return Err(Error::Network(format!("input uses undeclared path `{p}`")));
    }
    let mut out = PathPolState::vacuum(&net.paths);
    for (k, p) in input.paths.iter().enumerate() {
        let j = net.path_index(p).expect("checked above");
        out.amps[2 * j] += input.amps[2 * k];
        out.amps[2 * j + 1] += input.amps[2 * k + 1];
    }
    for e in &net.elements {
        apply_element(e, &mut out.amps)?;
    }
    Ok(out)
}

/// Output mode amplitudes for each logical input level: column `i` is the
/// propagated `encoded(i)`.
pub fn transfer_matrix(net: &OpticalNetwork) -> Result<ComplexMatrix> {
    let modes = 2 * net.paths.len();
    let mut t = ComplexMatrix::zeros(modes, net.dim());
    for i in 0..net.dim() {
        let out = apply_network(net, &net.encoded(i)?)?;
        for (m, a) in out.amps.iter().enumerate() {
            t[(m, i)] = *a;
        }
    }
    Ok(t)
}

/// Detector click operators on the logical space, `E_o = Σ_{m ∈ o} t_m† t_m`
/// with `t_m` the transfer-matrix row of mode `m`.
pub fn effective_operators(net: &OpticalNetwork) -> Result<Vec<ComplexMatrix>> {
    let t = transfer_matrix(net)?;
    let d = net.dim();
    let ops = net
        .detectors
        .iter()
        .map(|modes| {
            let mut e = ComplexMatrix::zeros(d, d);
            for &(path, pol) in modes {
                let pols: &[usize] = match pol {
                    Some(Pol::H) => &[0],
                    Some(Pol::V) => &[1],
                    None => &[0, 1],
                };
                for &q in pols {
                    let m = 2 * path + q;
                    for i in 0..d {
                        for j in 0..d {
                            e[(i, j)] += t[(m, i)].conj() * t[(m, j)];
                        }
                    }
                }
            }
            e
        })
        .collect();
    Ok(ops)
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

impl FromStr for OpticalNetwork {
    type Err = Error;

    /// Parses the line-oriented network description. Blank lines and text after
    /// `#` are ignored. Directives:
    ///
    /// ```text
    /// name <text>
    /// paths <p> <p> ...
    /// encode <path> <H|V>                 logical levels in order
    /// hwp|qwp <path> <degrees|?> [label]
    /// bd <from>><to> ...                  V displaced, H transmitted
    /// pbs <path> <h_out> <v_out>
    /// block <path> [H|V]
    /// merge <into> <from> ...
    /// detect <outcome> <path> [H|V]
    /// target mub <d> computational|fourier
    /// target bell <d>
    /// tolerance <value>
    /// ```
    fn from_str(text: &str) -> Result<Self> {
        let mut name = String::new();
        let mut paths: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut encoding = Vec::new();
        let mut elements = Vec::new();
        let mut detectors: Vec<Vec<(usize, Option<Pol>)>> = Vec::new();
        let mut target = None;
        let mut tolerance = 1e-6;
        let mut free_slots = 0;
        let mut saw_directive = false;

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            saw_directive = true;
            let tok: Vec<&str> = content.split_whitespace().collect();
            let path = |s: &str| {
                index
                    .get(s)
                    .copied()
                    .ok_or_else(|| perr(line, format!("undeclared path `{s}`")))
            };
            let pol = |s: &str| s.parse::<Pol>().map_err(|m| perr(line, m));
            let count = |lo: usize, hi: usize| {
                if tok.len() < lo || tok.len() > hi {
                    Err(perr(line, format!("`{}` takes {} to {} arguments", tok[0], lo - 1, hi - 1)))
                } else {
                    Ok(())
                }
            };
            match tok[0] {
                "name" => name = tok[1..].join(" "),
                "paths" => {
                    count(2, usize::MAX)?;
                    for p in &tok[1..] {
                        if index.insert(p.to_string(), paths.len()).is_some() {
                            return Err(perr(line, format!("path `{p}` declared twice")));
                        }
                        paths.push(p.to_string());
                    }
                }
                "encode" => {
                    count(3, 3)?;
                    encoding.push((path(tok[1])?, pol(tok[2])?));
                }
                "hwp" | "qwp" => {
                    count(3, 4)?;
                    let kind = if tok[0] == "hwp" { WaveplateKind::Hwp } else { WaveplateKind::Qwp };
                    let angle = if tok[2] == "?" {
                        free_slots += 1;
                        Angle::Free(free_slots - 1)
                    } else {
                        let t: f64 = tok[2]
                            .parse()
                            .map_err(|_| perr(line, format!("bad angle `{}`", tok[2])))?;
                        if !t.is_finite() {
                            return Err(perr(line, "angle must be finite"));
                        }
                        Angle::Fixed(t)
                    };
                    elements.push(Element::Waveplate(WaveplateElement {
                        kind,
                        angle,
                        path: path(tok[1])?,
                        label: tok.get(3).map(|s| s.to_string()),
                    }));
                }
                "bd" => {
                    count(2, usize::MAX)?;
                    let mut moves = Vec::new();
                    for m in &tok[1..] {
                        let (a, b) = m
                            .split_once('>')
                            .ok_or_else(|| perr(line, format!("expected <from>><to>, got `{m}`")))?;
                        moves.push((path(a)?, path(b)?));
                    }
                    let mut sources: Vec<usize> = moves.iter().map(|m| m.0).collect();
                    let mut sinks: Vec<usize> = moves.iter().map(|m| m.1).collect();
                    sources.sort_unstable();
                    sinks.sort_unstable();
                    if sources.windows(2).any(|w| w[0] == w[1]) || sinks.windows(2).any(|w| w[0] == w[1]) {
                        return Err(perr(line, "a displacer moves each path at most once"));
                    }
                    elements.push(Element::Displace(moves));
                }
                "pbs" => {
                    count(4, 4)?;
                    elements.push(Element::Split {
                        path: path(tok[1])?,
                        h_out: path(tok[2])?,
                        v_out: path(tok[3])?,
                    });
                }
                "block" => {
                    count(2, 3)?;
                    elements.push(Element::Block {
                        path: path(tok[1])?,
                        pol: tok.get(2).map(|s| pol(s)).transpose()?,
                    });
                }
                "merge" => {
                    count(3, usize::MAX)?;
                    elements.push(Element::Merge {
                        into: path(tok[1])?,
                        from: tok[2..].iter().map(|s| path(s)).collect::<Result<_>>()?,
                    });
                }
                "detect" => {
                    count(3, 4)?;
                    let o: usize = tok[1]
                        .parse()
                        .map_err(|_| perr(line, format!("bad outcome `{}`", tok[1])))?;
                    if detectors.len() <= o {
                        detectors.resize(o + 1, Vec::new());
                    }
                    detectors[o].push((path(tok[2])?, tok.get(3).map(|s| pol(s)).transpose()?));
                }
                "target" => {
                    count(3, 4)?;
                    let d: usize = tok[2]
                        .parse()
                        .map_err(|_| perr(line, format!("bad dimension `{}`", tok[2])))?;
                    target = Some(match (tok[1], tok.get(3).copied()) {
                        ("bell", None) => Target::Bell { d },
                        ("mub", Some("computational")) => Target::Mub { d, setting: 0 },
                        ("mub", Some("fourier")) => Target::Mub { d, setting: 1 },
                        _ => return Err(perr(line, format!("unknown target `{}`", tok[1..].join(" ")))),
                    });
                }
                "tolerance" => {
                    count(2, 2)?;
                    tolerance = tok[1]
                        .parse()
                        .ok()
                        .filter(|t: &f64| *t > 0.0)
                        .ok_or_else(|| perr(line, format!("bad tolerance `{}`", tok[1])))?;
                }
                other => return Err(perr(line, format!("unknown directive `{other}`"))),
            }
        }
        let last = text.lines().count().max(1);
        if !saw_directive {
            return Err(perr(last, "empty network description"));
        }
        if paths.is_empty() {
            return Err(perr(last, "no paths declared"));
        }
        if encoding.is_empty() {
            return Err(perr(last, "no logical encoding"));
        }
        if detectors.is_empty() || detectors.iter().any(|d| d.is_empty()) {
            return Err(perr(last, "every outcome from 0 up needs a detector"));
        }
        let mut seen = encoding.clone();
        seen.sort_by_key(|&(p, q): &(usize, Pol)| (p, q.index()));
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(perr(last, "two logical levels share a mode"));
        }
        Ok(OpticalNetwork {
            name,
            paths,
            encoding,
            elements,
            detectors,
            target,
            tolerance,
            free_slots,
        })
    }
}

impl fmt::Display for OpticalNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = |k: usize| &self.paths[k];
        if !self.name.is_empty() {
            writeln!(f, "name {}", self.name)?;
        }
        writeln!(f, "paths {}", self.paths.join(" "))?;
        for &(path, pol) in &self.encoding {
            writeln!(f, "encode {} {pol}", p(path))?;
        }
        for e in &self.elements {
            match e {
                Element::Waveplate(w) => {
                    let angle = match w.angle {
                        Angle::Fixed(t) => format!("{t}"),
                        Angle::Free(_) => "?".into(),
                    };
                    write!(f, "{} {} {angle}", w.kind, p(w.path))?;
                    match &w.label {
                        Some(l) => writeln!(f, " {l}")?,
                        None => writeln!(f)?,
                    }
                }
                Element::Displace(moves) => {
                    let m: Vec<String> = moves.iter().map(|&(a, b)| format!("{}>{}", p(a), p(b))).collect();
                    writeln!(f, "bd {}", m.join(" "))?;
                }
                Element::Split { path, h_out, v_out } => writeln!(f, "pbs {} {} {}", p(*path), p(*h_out), p(*v_out))?,
                Element::Block { path, pol } => match pol {
                    Some(q) => writeln!(f, "block {} {q}", p(*path))?,
                    None => writeln!(f, "block {}", p(*path))?,
                },
                Element::Merge { into, from } => {
                    let src: Vec<&str> = from.iter().map(|&k| p(k).as_str()).collect();
                    writeln!(f, "merge {} {}", p(*into), src.join(" "))?;
                }
            }
        }
        for (o, modes) in self.detectors.iter().enumerate() {
            for &(path, pol) in modes {
                match pol {
                    Some(q) => writeln!(f, "detect {o} {} {q}", p(path))?,
                    None => writeln!(f, "detect {o} {}", p(path))?,
                }
            }
        }
        match self.target {
            Some(Target::Bell { d }) => writeln!(f, "target bell {d}")?,
            Some(Target::Mub { d, setting }) => {
                writeln!(f, "target mub {d} {}", if setting == 0 { "computational" } else { "fourier" })?
            }
            None => {}
        }
        writeln!(f, "tolerance {:e}", self.tolerance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::random::random_ket;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SMALL: &str = "
        name demo
        paths a b c
        encode a V
        encode b H
        encode b V
        hwp a 45 first
        bd b>a a>c   # swap V upwards
        detect 0 a
        detect 1 b
        detect 2 c
    ";

    fn random_unitary_net(rng: &mut ChaCha8Rng) -> OpticalNetwork {
        let mut text = String::from("paths a b c\nencode a H\nencode a V\nencode b H\nencode b V\nencode c H\n");
        for _ in 0..12 {
            let p = ["a", "b", "c"][rng.random_range(0..3)];
            let kind = ["hwp", "qwp"][rng.random_range(0..2)];
            text.push_str(&format!("{kind} {p} {}\n", rng.random_range(0.0..180.0)));
            text.push_str("bd a>b b>c c>a\n");
        }
        text.push_str("detect 0 a\ndetect 1 b\ndetect 2 c\n");
        text.parse().unwrap()
    }

    #[test]
    fn parses_and_round_trips() {
        let net: OpticalNetwork = SMALL.parse().unwrap();
        assert_eq!(net.dim(), 3);
        assert_eq!(net.outcomes(), 3);
        assert_eq!(net.waveplates().count(), 1);
        let again: OpticalNetwork = net.to_string().parse().unwrap();
        assert_eq!(again, net);
    }

    #[test]
    fn empty_network_is_identity() {
        let net: OpticalNetwork = "paths a b\nencode a H\nencode b V\ndetect 0 a\ndetect 1 b".parse().unwrap();
        let t = transfer_matrix(&net).unwrap();
        assert_eq!(t[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(t[(3, 1)], Complex64::new(1.0, 0.0));
        assert!(t.as_slice().iter().filter(|a| a.norm() > 0.0).count() == 2);
    }

    #[test]
    fn block_on_occupied_path_empties_it() {
        let net: OpticalNetwork = "paths a b\nencode a H\nencode a V\nblock a\ndetect 0 b".parse().unwrap();
        let mut s = PathPolState::vacuum(&net.paths);
        s.set("a", Pol::H, Complex64::new(0.6, 0.0)).unwrap();
        s.set("a", Pol::V, Complex64::new(0.0, 0.8)).unwrap();
        assert_eq!(apply_network(&net, &s).unwrap().norm_sqr(), 0.0);
        let half: OpticalNetwork = "paths a\nencode a H\nencode a V\nblock a V\ndetect 0 a".parse().unwrap();
        let mut s = PathPolState::vacuum(&half.paths);
        s.set("a", Pol::H, Complex64::new(0.6, 0.0)).unwrap();
        s.set("a", Pol::V, Complex64::new(0.0, 0.8)).unwrap();
        assert!((apply_network(&half, &s).unwrap().norm_sqr() - 0.36).abs() < 1e-15);
    }

    #[test]
    fn unitary_networks_preserve_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let net = random_unitary_net(&mut rng);
            let amps = random_ket(&mut rng, 6).amplitudes().to_vec();
            let input = PathPolState::from_amplitudes(&net.paths, amps).unwrap();
            let out = apply_network(&net, &input).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
            let total = effective_operators(&net)
                .unwrap()
                .iter()
                .fold(ComplexMatrix::zeros(5, 5), |acc, e| &acc + e);
            assert!(total.max_abs_diff(&ComplexMatrix::identity(5)) < 1e-12);
        }
    }

    #[test]
    fn displacer_moves_vertical_only() {
        let net: OpticalNetwork = SMALL.parse().unwrap();
        let out = apply_network(&net, &net.encoded(2).unwrap()).unwrap();
        assert_eq!(out.amplitude("a", Pol::V), Some(Complex64::new(1.0, 0.0)));
        let out = apply_network(&net, &net.encoded(1).unwrap()).unwrap();
        assert_eq!(out.amplitude("b", Pol::H), Some(Complex64::new(1.0, 0.0)));
        // level 0 is turned to H by the plate and stays in `a`
        let out = apply_network(&net, &net.encoded(0).unwrap()).unwrap();
        assert!((out.amplitude("a", Pol::H).unwrap().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn free_slots_are_filled_in_order() {
        let net: OpticalNetwork = "paths a\nencode a H\nencode a V\nhwp a ?\nqwp a ?\ndetect 0 a H\ndetect 1 a V"
            .parse()
            .unwrap();
        assert_eq!(net.free_slots(), 2);
        assert!(transfer_matrix(&net).is_err());
        let filled = net.with_angles(&[45.0, 0.0]).unwrap();
        let t = transfer_matrix(&filled).unwrap();
        assert!((t[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(net.with_angles(&[1.0]).is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("", 1),
            ("# only a comment\n\n", 2),
            ("paths a\nencode a H\nhwp b 10\ndetect 0 a", 3),
            ("paths a\nencode a X", 2),
            ("paths a a", 1),
            ("paths a\nencode a H\nfrobnicate a\n", 3),
            ("paths a\nencode a H\nhwp a nan\n", 3),
            ("paths a b\nencode a H\nbd a>b a>b\n", 3),
            ("paths a\nencode a H\n", 2),
            ("paths a\nencode a H\nencode a H\ndetect 0 a", 4),
        ];
        for (text, want) in cases {
            match text.parse::<OpticalNetwork>() {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn undeclared_input_path_is_rejected() {
        let net: OpticalNetwork = SMALL.parse().unwrap();
        let stray = PathPolState::vacuum(&["zzz".to_string()]);
        assert!(matches!(apply_network(&net, &stray), Err(Error::Network(_))));
    }
}

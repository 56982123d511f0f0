use super::CircuitSpec;
use crate::error::{invalid, Error, Result};
use crate::fock::{herald_with, FockDensity, FockPattern, OutputSpace};
use crate::gaussian::GaussianState;
use crate::linalg::{kron, CMat, C64};
use crate::sources::{filter_heralds, obb_distinguishability_unitary, enumerate_firings, SourceFiring, SourceModel, FIRING_CAP};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detector {
    /// Photon-number resolving.
    Pnrd,
    /// Click / no-click.
    Threshold,
}

#[derive(Clone, Debug, PartialEq)]
pub enum HeraldSelection {
    /// The circuit's first (fixed) pattern.
    Fixed,
    All,
    Indices(Vec<usize>),
}

/// Output space over the logical positions `(pair, rail, label)`.
#[derive(Clone, Debug, PartialEq)]
pub enum OutputKind {
    /// Exactly one photon in each dual-rail pair.
    Logical,
    /// Exactly `total` photons on the logical modes.
    Photons { total: usize, cutoff: usize },
    PerMode { cutoff: usize },
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub detector: Detector,
    /// Transmission before the source herald detectors.
    pub eta_s: f64,
    /// Transmission before the state herald detectors.
    pub eta_h: f64,
    pub kappa: f64,
    pub heralds: HeraldSelection,
    pub output: OutputKind,
    pub apply_corrections: bool,
    /// Per-qubit unitaries applied after the corrections (measurement settings).
    pub rotations: Option<Vec<CMat>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            detector: Detector::Pnrd,
            eta_s: 1.0,
            eta_h: 1.0,
            kappa: 0.1,
            heralds: HeraldSelection::Fixed,
            output: OutputKind::Logical,
            apply_corrections: true,
            rotations: None,
        }
    }
}

/// A circuit acting identically on `d` internal labels, of which only the
/// labels in `blocks` are populated.
#[derive(Clone, Debug)]
pub struct DilatedCircuit {
    pub base: CircuitSpec,
    pub d: usize,
    pub blocks: Vec<usize>,
    /// Internal label of each photon at the source.
    pub photon_label: Vec<usize>,
    /// Internal-state preparation per photon over the full `d` labels.
    pub preparations: Vec<Option<CMat>>,
    pub firing: Option<SourceFiring>,
}

pub fn dilate(circuit: &CircuitSpec, model: &SourceModel, firing: Option<&SourceFiring>) -> Result<DilatedCircuit> {
    model.validate()?;
    let n = circuit.n_photons();
    match (model, firing) {
        (SourceModel::Rs { q }, Some(f)) => {
            if f.assignment.len() != n {
                return invalid(format!("firing covers {} photons, circuit has {n}", f.assignment.len()));
            }
            if f.assignment.iter().any(|&a| a >= q.len()) {
                return invalid("firing label exceeds the Schmidt mode count");
            }
            let mut blocks = f.assignment.clone();
            blocks.sort_unstable();
            blocks.dedup();
            Ok(DilatedCircuit {
                base: circuit.clone(),
                d: q.len(),
                blocks,
                photon_label: f.assignment.clone(),
                preparations: vec![None; n],
                firing: Some(f.clone()),
            })
        }
        (SourceModel::Rs { .. }, None) => invalid("RS dilation needs a source firing"),
        (_, Some(_)) => invalid("only RS dilation takes a source firing"),
        (SourceModel::Ideal, None) => Ok(DilatedCircuit {
            base: circuit.clone(),
            d: 1,
            blocks: vec![0],
            photon_label: vec![0; n],
            preparations: vec![None; n],
            firing: None,
        }),
        (SourceModel::Obb { visibility }, None) => {
            let d = n + 1;
            let preparations = (0..n)
                .map(|j| obb_distinguishability_unitary(j + 1, *visibility, d).map(Some))
                .collect::<Result<_>>()?;
            Ok(DilatedCircuit {
                base: circuit.clone(),
                d,
                blocks: (0..d).collect(),
                photon_label: vec![0; n],
                preparations,
                firing: None,
            })
        }
    }
}

impl DilatedCircuit {
    fn nb(&self) -> usize {
        self.blocks.len()
    }

    fn block_index(&self, label: usize) -> usize {
        self.blocks.iter().position(|&b| b == label).expect("label is simulated")
    }

    /// Gaussian mode of spatial mode `s` with the `b`-th simulated label.
    pub fn composite(&self, s: usize, b: usize) -> usize {
        s * self.nb() + b
    }

    pub fn signal(&self, j: usize) -> usize {
        self.base.modes * self.nb() + j
    }

    pub fn num_gaussian_modes(&self) -> usize {
        self.base.modes * self.nb() + self.base.n_photons()
    }

    /// `U (x) I` over the simulated labels.
    pub fn composite_unitary(&self) -> CMat {
        kron(&self.base.unitary, &CMat::identity(self.nb(), self.nb()))
    }

    /// Logical positions `(pair, rail, label)` in full-`d` order.
    pub fn logical_positions(&self) -> usize {
        self.base.n_qubits() * 2 * self.d
    }

    fn full_position(&self, q: usize, rail: usize, label: usize) -> usize {
        (2 * q + rail) * self.d + label
    }

    /// Source state after squeezers, source-side loss and internal preparation.
    fn prepared(&self, opts: &RunOptions) -> Result<GaussianState> {
        let n = self.base.n_photons();
        let mut st = GaussianState::vacuum(self.num_gaussian_modes())?;
        for j in 0..n {
            let idler = self.composite(self.base.inputs[j], self.block_index(self.photon_label[j]));
            st = st.two_mode_squeeze(self.signal(j), idler, opts.kappa)?;
        }
        if opts.eta_s < 1.0 {
            for j in 0..n {
                st = st.loss_channel(self.signal(j), opts.eta_s)?;
            }
        }
        for (j, prep) in self.preparations.iter().enumerate() {
            if let Some(p) = prep {
                let idx: Vec<usize> = self.blocks.clone();
                let sub = crate::linalg::select(p, &idx, &idx);
                let modes: Vec<usize> = (0..self.nb()).map(|b| self.composite(self.base.inputs[j], b)).collect();
                st = st.interfere(&sub, &modes)?;
            }
        }
        let all: Vec<usize> = (0..self.base.modes * self.nb()).collect();
        st = st.interfere(&self.composite_unitary(), &all)?;
        if opts.eta_h < 1.0 {
            for &h in &self.base.herald_modes {
                for b in 0..self.nb() {
                    st = st.loss_channel(self.composite(h, b), opts.eta_h)?;
                }
            }
        }
        Ok(st)
    }

    /// Applies the pattern's corrections and the optional rotations.
    fn corrected(&self, st: &GaussianState, hi: usize, opts: &RunOptions) -> Result<GaussianState> {
        let h = &self.base.heralds[hi];
        let mut st = st.clone();
        for q in 0..self.base.n_qubits() {
            let mut v = CMat::identity(2, 2);
            if opts.apply_corrections {
                v = &h.correction[q] * v;
            }
            if let Some(r) = &opts.rotations {
                v = &r[q] * v;
            }
            if v != CMat::identity(2, 2) {
                let w = kron(&v, &CMat::identity(self.nb(), self.nb()));
                st = st.interfere(&w, &self.pair_modes(q))?;
            }
        }
        Ok(st)
    }

    /// Click groups (one per signal and per clicking herald mode) and the
    /// no-click modes of a spatial herald pattern.
    fn herald_groups(&self, pattern: &[usize]) -> (Vec<Vec<usize>>, Vec<usize>) {
        let mut groups: Vec<Vec<usize>> = (0..self.base.n_photons()).map(|j| vec![self.signal(j)]).collect();
        let mut zero = Vec::new();
        for (&s, &k) in self.base.herald_modes.iter().zip(pattern) {
            let g: Vec<usize> = (0..self.nb()).map(|b| self.composite(s, b)).collect();
            if k == 0 {
                zero.extend(g);
            } else {
                groups.push(g);
            }
        }
        (groups, zero)
    }

    fn pair_modes(&self, q: usize) -> Vec<usize> {
        let (a, b) = self.base.logical_pairs[q];
        (0..self.nb()).map(|k| self.composite(a, k)).chain((0..self.nb()).map(|k| self.composite(b, k))).collect()
    }

    fn out_modes(&self) -> Vec<usize> {
        let mut v = Vec::new();
        for &(a, b) in &self.base.logical_pairs {
            for s in [a, b] {
                for k in 0..self.nb() {
                    v.push(self.composite(s, k));
                }
            }
        }
        v
    }

    fn space(&self, kind: &OutputKind, labels: usize) -> OutputSpace {
        match kind {
            OutputKind::Logical => OutputSpace::OnePerGroup {
                groups: (0..self.base.n_qubits()).map(|q| (2 * q * labels..2 * (q + 1) * labels).collect()).collect(),
            },
            OutputKind::Photons { total, cutoff } => OutputSpace::Total { total: *total, cutoff: *cutoff },
            OutputKind::PerMode { cutoff } => OutputSpace::PerMode { cutoff: *cutoff },
        }
    }

    /// Herald patterns over `(herald mode, label)` for one spatial pattern.
    fn internal_patterns(&self, pattern: &[usize]) -> Vec<FockPattern> {
        let nb = self.nb();
        let mut out = vec![Vec::new()];
        for &k in pattern {
            let dists = FockPattern::with_total(nb, k, k);
            let mut next = Vec::with_capacity(out.len() * dists.len());
            for p in &out {
                for dpat in &dists {
                    let mut q = p.clone();
                    q.extend_from_slice(&dpat.0);
                    next.push(q);
                }
            }
            out = next;
        }
        let pats: Vec<FockPattern> = out.into_iter().map(FockPattern).collect();
        match (&self.firing, self.d) {
            (Some(f), d) if d > 1 => {
                let label_of: Vec<usize> =
                    (0..pattern.len()).flat_map(|_| self.blocks.iter().copied()).collect();
                filter_heralds(f, d, &label_of, &pats)
            }
            _ => pats,
        }
    }

    fn embed(&self, p: &FockPattern) -> FockPattern {
        let nb = self.nb();
        let mut full = vec![0; self.logical_positions()];
        for (i, &k) in p.0.iter().enumerate() {
            let b = i % nb;
            let sr = i / nb;
            full[self.full_position(sr / 2, sr % 2, self.blocks[b])] = k;
        }
        FockPattern(full)
    }

    fn selected(&self, sel: &HeraldSelection) -> Result<Vec<usize>> {
        let n = self.base.heralds.len();
        let idx = match sel {
            HeraldSelection::Fixed => vec![0],
            HeraldSelection::All => (0..n).collect(),
            HeraldSelection::Indices(v) => v.clone(),
        };
        if idx.iter().any(|&i| i >= n) {
            return invalid("herald pattern index out of range");
        }
        Ok(idx)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// Normalised density on the logical positions `(pair, rail, label)`;
    /// its `herald_probability` is the rate-normalised success probability.
    pub density: FockDensity,
    /// Herald-and-output probability divided by the ideal single-pair rate.
    pub success_probability: f64,
    /// Raw probability of the herald event with the output in the chosen space.
    pub herald_probability: f64,
    /// Raw probability of the herald event alone (threshold detection only).
    pub click_probability: Option<f64>,
    pub d: usize,
}

/// Rate-normalised success probabilities below this count as zero.
pub const MIN_SUCCESS: f64 = 1e-13;

fn single_pair_rate(kappa: f64) -> f64 {
    kappa * kappa * (1.0 - kappa * kappa)
}

/// Runs one dilated circuit.
pub fn run(dc: &DilatedCircuit, opts: &RunOptions) -> Result<RunOutput> {
    if !(0.0..=1.0).contains(&opts.eta_s) || !(0.0..=1.0).contains(&opts.eta_h) {
        return invalid("transmissions must lie in [0,1]");
    }
    if !(opts.kappa > 0.0 && opts.kappa < 1.0) {
        return invalid("kappa must lie in (0,1)");
    }
    if let Some(r) = &opts.rotations {
        if r.len() != dc.base.n_qubits() {
            return invalid("one rotation per logical qubit expected");
        }
    }
    let base_state = dc.prepared(opts)?;
    let out_modes = dc.out_modes();
    let space = dc.space(&opts.output, dc.nb());
    let basis = space.basis(out_modes.len())?;
    let mut acc = CMat::zeros(basis.len(), basis.len());
    let mut clicks = None;
    for hi in dc.selected(&opts.heralds)? {
        let h = &dc.base.heralds[hi];
        let st = dc.corrected(&base_state, hi, opts)?;
        match opts.detector {
            Detector::Pnrd => {
                let mut hmodes: Vec<usize> = (0..dc.base.n_photons()).map(|j| dc.signal(j)).collect();
                for &s in &dc.base.herald_modes {
                    for b in 0..dc.nb() {
                        hmodes.push(dc.composite(s, b));
                    }
                }
                let ones = FockPattern(vec![1; dc.base.n_photons()]);
                let pats: Vec<FockPattern> = dc.internal_patterns(&h.pattern).iter().map(|p| ones.concat(p)).collect();
                let dens = herald_with(&st, &hmodes, &pats, &out_modes, &OutputSpace::Explicit(basis.clone()))?;
                acc += dens.unnormalized();
            }
            Detector::Threshold => {
                let (m, click) = threshold_herald(dc, &st, &h.pattern, &out_modes, &basis)?;
                acc += m;
                *clicks.get_or_insert(0.0) += click;
            }
        }
    }
    // scatter into the full-label basis
    let full_space = dc.space(&opts.output, dc.d);
    let full_basis = full_space.basis(dc.logical_positions())?;
    let index: std::collections::HashMap<FockPattern, usize> =
        full_basis.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
    let pos: Vec<usize> = basis
        .iter()
        .map(|p| index.get(&dc.embed(p)).copied().ok_or_else(|| Error::Numerical("pattern outside full basis".into())))
        .collect::<Result<_>>()?;
    let mut full = CMat::zeros(full_basis.len(), full_basis.len());
    for (i, &pi) in pos.iter().enumerate() {
        for (j, &pj) in pos.iter().enumerate() {
            full[(pi, pj)] = acc[(i, j)];
        }
    }
    let norm = single_pair_rate(opts.kappa).powi(dc.base.n_photons() as i32);
    let mut full = full.unscale(norm);
    if crate::linalg::trace(&full).re < MIN_SUCCESS {
        full.fill(C64::new(0.0, 0.0));
    }
    let density = FockDensity::from_unnormalized((0..dc.logical_positions()).collect(), full_basis, full);
    let success = density.herald_probability;
    Ok(RunOutput {
        density,
        success_probability: success,
        herald_probability: success * norm,
        click_probability: clicks,
        d: dc.d,
    })
}

/// Click/no-click heralding by inclusion-exclusion over vacuum projections:
/// `P(clicks C, none on Z) = sum_{T in C} (-1)^|T| P(vacuum on Z u T)`.
/// Returns the unnormalised output matrix and the herald probability.
fn threshold_herald(
    dc: &DilatedCircuit,
    st: &GaussianState,
    pattern: &[usize],
    out_modes: &[usize],
    basis: &[FockPattern],
) -> Result<(CMat, f64)> {
    let (groups, zero) = dc.herald_groups(pattern);
    if groups.len() > MAX_CLICK_GROUPS {
        return Err(Error::Resource(format!("{} click groups exceed the inclusion-exclusion limit", groups.len())));
    }
    // keep only herald and output modes, in the order clicks, zeros, outputs
    let mut keep: Vec<usize> = groups.iter().flatten().copied().collect();
    let n_click = keep.len();
    keep.extend(&zero);
    let n_herald = keep.len();
    keep.extend_from_slice(out_modes);
    let red = st.reduced(&keep)?;
    let mut offsets = Vec::new();
    let mut o = 0;
    for g in &groups {
        offsets.push((o, g.len()));
        o += g.len();
    }
    let zero_local: Vec<usize> = (n_click..n_herald).collect();
    let out_local: Vec<usize> = (n_herald..keep.len()).collect();
    let subsets: Vec<usize> = (0..1usize << groups.len()).collect();
    let parts: Vec<Result<(f64, CMat, f64)>> = subsets
        .par_iter()
        .map(|&t| {
            let mut vac = zero_local.clone();
            for (gi, &(start, len)) in offsets.iter().enumerate() {
                if t >> gi & 1 == 1 {
                    vac.extend(start..start + len);
                }
            }
            let sign = if t.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let (p, cond) = if vac.is_empty() { (1.0, red.clone()) } else { red.condition_on_vacuum(&vac)? };
            // positions of the output modes after removing `vac`
            let remaining: Vec<usize> = (0..keep.len()).filter(|i| !vac.contains(i)).collect();
            let outs: Vec<usize> = out_local.iter().map(|o| remaining.iter().position(|r| r == o).unwrap()).collect();
            let sub = cond.reduced(&outs)?;
            let all: Vec<usize> = (0..outs.len()).collect();
            let dens = herald_with(&sub, &[], &[FockPattern(vec![])], &all, &OutputSpace::Explicit(basis.to_vec()))?;
            Ok((sign, dens.unnormalized().scale(p), sign * p))
        })
        .collect();
    let mut m = CMat::zeros(basis.len(), basis.len());
    let mut click = 0.0;
    for part in parts {
        let (sign, mat, pc) = part?;
        m += mat.scale(sign);
        click += pc;
    }
    Ok((m, click))
}

/// Inclusion-exclusion is exponential in the number of clicking groups.
pub const MAX_CLICK_GROUPS: usize = 20;

/// Probability of a click on every group and none on `zero`.
pub fn click_probability(st: &GaussianState, groups: &[Vec<usize>], zero: &[usize]) -> Result<f64> {
    if groups.len() > MAX_CLICK_GROUPS {
        return Err(Error::Resource(format!("{} click groups exceed the inclusion-exclusion limit", groups.len())));
    }
    let terms: Vec<Result<f64>> = (0..1usize << groups.len())
        .into_par_iter()
        .map(|t| {
            let mut vac = zero.to_vec();
            for (gi, g) in groups.iter().enumerate() {
                if t >> gi & 1 == 1 {
                    vac.extend(g);
                }
            }
            let sign = if t.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            Ok(sign * if vac.is_empty() { 1.0 } else { st.vacuum_probability(&vac)? })
        })
        .collect();
    let mut p = 0.0;
    for t in terms {
        p += t?;
    }
    Ok(p)
}

/// Threshold detection on heralds and logical rails: rate-normalised
/// probability of each computational outcome (qubit 0 most significant),
/// a click on the outcome rail and none on the other rail of every pair.
pub fn threshold_outcomes(dc: &DilatedCircuit, opts: &RunOptions) -> Result<Vec<f64>> {
    let n = dc.base.n_qubits();
    let base_state = dc.prepared(opts)?;
    let norm = single_pair_rate(opts.kappa).powi(dc.base.n_photons() as i32);
    let mut probs = vec![0.0; 1 << n];
    for hi in dc.selected(&opts.heralds)? {
        let st = dc.corrected(&base_state, hi, opts)?;
        let (groups, zero) = dc.herald_groups(&dc.base.heralds[hi].pattern);
        for (bits, p) in probs.iter_mut().enumerate() {
            let mut g = groups.clone();
            let mut z = zero.clone();
            for q in 0..n {
                let bit = bits >> (n - 1 - q) & 1;
                let modes = dc.pair_modes(q);
                let (on, off) = modes.split_at(dc.nb());
                let (on, off) = if bit == 0 { (on, off) } else { (off, on) };
                g.push(on.to_vec());
                z.extend_from_slice(off);
            }
            *p += click_probability(&st, &g, &z)? / norm;
        }
    }
    Ok(probs)
}

/// `threshold_outcomes` summed over RS firings.
pub fn threshold_outcomes_model(circuit: &CircuitSpec, model: &SourceModel, opts: &RunOptions) -> Result<Vec<f64>> {
    match model {
        SourceModel::Rs { q } if q.len() > 1 => {
            let firings = enumerate_firings(q, circuit.n_photons(), FIRING_CAP)?;
            let parts: Vec<Result<(f64, Vec<f64>)>> = firings
                .par_iter()
                .map(|f| Ok((f.weight, threshold_outcomes(&dilate(circuit, model, Some(f))?, opts)?)))
                .collect();
            let mut acc = vec![0.0; 1 << circuit.n_qubits()];
            for part in parts {
                let (w, p) = part?;
                for (a, x) in acc.iter_mut().zip(p) {
                    *a += w * x;
                }
            }
            Ok(acc)
        }
        SourceModel::Rs { .. } => {
            let f = SourceFiring { assignment: vec![0; circuit.n_photons()], weight: 1.0 };
            threshold_outcomes(&dilate(circuit, model, Some(&f))?, opts)
        }
        _ => threshold_outcomes(&dilate(circuit, model, None)?, opts),
    }
}

/// Runs a circuit under a source model, summing RS firings incoherently.
pub fn run_model(circuit: &CircuitSpec, model: &SourceModel, opts: &RunOptions) -> Result<RunOutput> {
    match model {
        SourceModel::Rs { q } if q.len() > 1 => {
            let firings = enumerate_firings(q, circuit.n_photons(), FIRING_CAP)?;
            let outs: Vec<Result<(f64, RunOutput)>> = firings
                .par_iter()
                .map(|f| Ok((f.weight, run(&dilate(circuit, model, Some(f))?, opts)?)))
                .collect();
            let mut parts = Vec::with_capacity(outs.len());
            for o in outs {
                parts.push(o?);
            }
            let first = &parts[0].1;
            let mut acc = CMat::zeros(first.density.dim(), first.density.dim());
            let (mut sp, mut hp) = (0.0, 0.0);
            let mut click: Option<f64> = None;
            for (w, o) in &parts {
                acc += o.density.unnormalized().scale(*w);
                sp += w * o.success_probability;
                hp += w * o.herald_probability;
                if let Some(c) = o.click_probability {
                    *click.get_or_insert(0.0) += w * c;
                }
            }
            if crate::linalg::trace(&acc).re < MIN_SUCCESS {
                acc.fill(C64::new(0.0, 0.0));
            }
            let density = FockDensity::from_unnormalized(
                first.density.modes.clone(),
                first.density.basis().to_vec(),
                acc,
            );
            Ok(RunOutput { density, success_probability: sp, herald_probability: hp, click_probability: click, d: q.len() })
        }
        SourceModel::Rs { .. } => {
            let f = SourceFiring { assignment: vec![0; circuit.n_photons()], weight: 1.0 };
            run(&dilate(circuit, model, Some(&f))?, opts)
        }
        _ => run(&dilate(circuit, model, None)?, opts),
    }
}

"""Distributed-aperture spatiotemporal synchronization.

Simulates pairwise bidirectional measurements between networked apertures,
builds the factor graph of the joint posterior (pair likelihoods times
per-node priors), and runs particle-based loopy belief propagation to
produce MAP/MMSE estimates of agent states.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import errors
from .conventions import SPEED_OF_LIGHT

_COMPONENT_DIMS = {"position": 2, "orientation": 1, "velocity": 2,
                   "time_offset": 1, "cfo": 1, "cpo": 1}
_CIRCULAR = {"orientation", "cpo"}


def wrap_angle(x):
    """Wrap to (-pi, pi]."""
    w = np.mod(np.asarray(x, float) + np.pi, 2 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    if w.shape == ():
        return float(w)
    return w


# ---------------------------------------------------------------------------
# states and topology
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ApertureState:
    """Spatial state (position, orientation, velocity) plus temporal state
    (time offset, carrier frequency offset, carrier phase offset)."""

    id: int
    position: np.ndarray
    orientation: float = 0.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    time_offset: float = 0.0
    cfo: float = 0.0
    cpo: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position",
                           np.asarray(self.position, float))
        object.__setattr__(self, "velocity",
                           np.asarray(self.velocity, float))
        object.__setattr__(self, "orientation", wrap_angle(self.orientation))
        object.__setattr__(self, "cpo", wrap_angle(self.cpo))


class StateSpace:
    """Active state components and their packing into flat vectors."""

    def __init__(self, components=("position",)):
        unknown = set(components) - set(_COMPONENT_DIMS)
        if unknown:
            raise ValueError(f"unknown state components {unknown}")
        self.components = tuple(components)
        self.slices = {}
        off = 0
        for c in self.components:
            d = _COMPONENT_DIMS[c]
            self.slices[c] = slice(off, off + d)
            off += d
        self.dim = off
        mask = np.zeros(self.dim, bool)
        for c in self.components:
            if c in _CIRCULAR:
                mask[self.slices[c]] = True
        self.circular_mask = mask

    def pack(self, state: ApertureState) -> np.ndarray:
        v = np.zeros(self.dim)
        for c in self.components:
            val = getattr(state, c)
            v[self.slices[c]] = val
        return v

    def unpack(self, vec: np.ndarray, node_id: int) -> ApertureState:
        kw = {"id": node_id, "position": np.zeros(2)}
        for c in self.components:
            val = vec[self.slices[c]]
            kw[c] = val if _COMPONENT_DIMS[c] > 1 else float(val[0])
        return ApertureState(**kw)

    def get(self, particles: np.ndarray, component: str):
        """Component values from a particle array, or a constant default."""
        if component in self.slices:
            sl = self.slices[component]
            vals = particles[:, sl]
            return vals[:, 0] if _COMPONENT_DIMS[component] == 1 else vals
        n = particles.shape[0]
        if _COMPONENT_DIMS[component] > 1:
            return np.zeros((n, _COMPONENT_DIMS[component]))
        return np.zeros(n)


@dataclass(frozen=True)
class NetworkTopology:
    """Aperture ids split into anchors/agents plus the measured pair mask."""

    apertures: tuple[int, ...]
    anchors: tuple[int, ...]
    measurement_mask: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        aps = tuple(sorted(set(self.apertures)))
        anc = tuple(sorted(set(self.anchors)))
        object.__setattr__(self, "apertures", aps)
        object.__setattr__(self, "anchors", anc)
        if not set(anc) <= set(aps):
            raise errors.TopologyError("anchors must be a subset of apertures")
        mask = tuple(self.measurement_mask)
        for (j, jp) in mask:
            if j == jp or j not in aps or jp not in aps:
                raise errors.TopologyError(f"bad measured pair {(j, jp)}")
        if len(set(mask)) != len(mask):
            raise errors.TopologyError("duplicate pairs in measurement mask")
        object.__setattr__(self, "measurement_mask", mask)

    @property
    def agents(self) -> tuple[int, ...]:
        return tuple(j for j in self.apertures if j not in self.anchors)

    @property
    def pair_set(self) -> tuple[tuple[int, int], ...]:
        return tuple((j, jp) for j in self.apertures for jp in self.apertures
                     if j != jp)

    @classmethod
    def full_mesh(cls, apertures, anchors) -> "NetworkTopology":
        top = cls(tuple(apertures), tuple(anchors))
        return replace(top, measurement_mask=top.pair_set)


@dataclass(frozen=True)
class MeasurementNoise:
    """Per-observable noise stds; None disables the observable."""

    delay_std: float | None = None
    aoa_std: float | None = None
    phase_std: float | None = None

    def __post_init__(self):
        for name in ("delay_std", "aoa_std", "phase_std"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be > 0 when enabled")


@dataclass(frozen=True)
class PairMeasurement:
    """Observables of one ordered pair (transmitter j, receiver j')."""

    pair: tuple[int, int]
    delay: float | None
    aoa: float | None
    phase: float | None
    noise: MeasurementNoise


# ---------------------------------------------------------------------------
# priors
# ---------------------------------------------------------------------------

class PointPrior:
    """Degenerate (point-mass) prior; anchors use it and never move."""

    def __init__(self, vec: np.ndarray):
        self.vec = np.asarray(vec, float)

    def sample(self, n, rng):
        return np.tile(self.vec, (n, 1))

    def logpdf(self, x):
        return np.zeros(x.shape[0])


class GaussianPrior:
    def __init__(self, mean, std, circular_mask=None):
        self.mean = np.asarray(mean, float)
        self.std = np.broadcast_to(np.asarray(std, float), self.mean.shape).copy()
        self.circular_mask = (np.zeros(self.mean.size, bool)
                              if circular_mask is None else circular_mask)

    def sample(self, n, rng):
        x = self.mean + self.std * rng.standard_normal((n, self.mean.size))
        x[:, self.circular_mask] = wrap_angle(x[:, self.circular_mask])
        return x

    def logpdf(self, x):
        d = x - self.mean
        d[:, self.circular_mask] = wrap_angle(d[:, self.circular_mask])
        return -0.5 * np.sum((d / self.std) ** 2, axis=1)


class UniformPrior:
    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, float)
        self.hi = np.asarray(hi, float)

    def sample(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=(n, self.lo.size))

    def logpdf(self, x):
        inside = np.all((x >= self.lo) & (x <= self.hi), axis=1)
        return np.where(inside, 0.0, -np.inf)


# ---------------------------------------------------------------------------
# forward model
# ---------------------------------------------------------------------------

def _observables(p_tx, p_rx, orient_rx, to_tx, to_rx, cpo_tx, cpo_rx,
                 carrier_freq, c=SPEED_OF_LIGHT):
    """Noiseless observables for transmitter->receiver geometry (vectorized)."""
    diff = p_tx - p_rx
    dist = np.linalg.norm(diff, axis=-1)
    delay = dist / c + (to_rx - to_tx)
    aoa = wrap_angle(np.arctan2(diff[..., 1], diff[..., 0]) - orient_rx)
    phase = wrap_angle(2 * np.pi * carrier_freq * dist / c + (cpo_rx - cpo_tx))
    return delay, aoa, phase


def simulate_measurements(topology: NetworkTopology, true_states: dict,
                          noise: MeasurementNoise, seed: int,
                          carrier_freq: float = 1e9,
                          c: float = SPEED_OF_LIGHT) -> list[PairMeasurement]:
    """Bidirectional pair observables with additive Gaussian noise.

    Delay carries propagation plus the clock-offset difference TO_rx - TO_tx;
    AOA is the bearing of the transmitter in the receiver frame; phase is the
    wrapped carrier phase of the geometric delay plus the CPO difference.
    Deterministic given the seed.
    """
    missing = set(topology.apertures) - set(true_states)
    if missing:
        raise errors.TopologyError(f"missing true states for {missing}")
    rng = np.random.default_rng(seed)
    out = []
    for (j, jp) in sorted(topology.measurement_mask):
        tx, rx = true_states[j], true_states[jp]
        delay, aoa, phase = _observables(
            tx.position, rx.position, rx.orientation, tx.time_offset,
            rx.time_offset, tx.cpo, rx.cpo, carrier_freq, c)
        z_delay = z_aoa = z_phase = None
        if noise.delay_std is not None:
            z_delay = float(delay + noise.delay_std * rng.standard_normal())
        if noise.aoa_std is not None:
            z_aoa = float(wrap_angle(aoa + noise.aoa_std * rng.standard_normal()))
        if noise.phase_std is not None:
            z_phase = float(wrap_angle(phase
                                       + noise.phase_std * rng.standard_normal()))
        out.append(PairMeasurement((j, jp), z_delay, z_aoa, z_phase, noise))
    return out


# ---------------------------------------------------------------------------
# factor graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairFactor:
    measurement: PairMeasurement

    @property
    def pair(self):
        return self.measurement.pair


@dataclass(frozen=True)
class PriorFactor:
    node_id: int
    prior: object


@dataclass
class FactorGraph:
    topology: NetworkTopology
    space: StateSpace
    prior_factors: list[PriorFactor]
    pair_factors: list[PairFactor]
    carrier_freq: float = 1e9
    c: float = SPEED_OF_LIGHT

    @property
    def n_factors(self) -> int:
        return len(self.prior_factors) + len(self.pair_factors)

    def priors(self) -> dict:
        return {f.node_id: f.prior for f in self.prior_factors}

    def has_cycles(self) -> bool:
        """Cycle check on the undirected measured-pair graph."""
        edges = {frozenset(f.pair) for f in self.pair_factors}
        adj: dict[int, set[int]] = {j: set() for j in self.topology.apertures}
        for e in edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        seen: set[int] = set()
        for root in self.topology.apertures:
            if root in seen:
                continue
            stack = [(root, None)]
            while stack:
                node, parent = stack.pop()
                if node in seen:
                    return True
                seen.add(node)
                for nb in adj[node]:
                    if nb != parent:
                        stack.append((nb, node))
        return False


def build_factor_graph(topology: NetworkTopology, priors: dict,
                       measurements, space: StateSpace | None = None,
                       carrier_freq: float = 1e9,
                       c: float = SPEED_OF_LIGHT) -> FactorGraph:
    """Graph of |measured pairs| pair factors plus one prior factor per
    aperture, matching the posterior factorization up to proportionality."""
    space = space or StateSpace()
    missing = set(topology.apertures) - set(priors)
    if missing:
        raise errors.TopologyError(f"missing priors for apertures {missing}")
    for j in topology.anchors:
        if not isinstance(priors[j], PointPrior):
            raise errors.TopologyError(f"anchor {j} needs a point-mass prior")
    mask = set(topology.measurement_mask)
    seen = set()
    pair_factors = []
    for m in measurements:
        if m.pair not in mask:
            raise errors.TopologyError(f"measurement for unmasked pair {m.pair}")
        if m.pair in seen:
            raise errors.TopologyError(f"duplicate measurement for {m.pair}")
        seen.add(m.pair)
        pair_factors.append(PairFactor(m))
    dangling = mask - seen
    if dangling:
        raise errors.TopologyError(f"masked pairs without measurements {dangling}")
    prior_factors = [PriorFactor(j, priors[j]) for j in topology.apertures]
    return FactorGraph(topology, space, prior_factors, pair_factors,
                       carrier_freq, c)


def pair_log_likelihood(meas: PairMeasurement, x_tx: np.ndarray,
                        x_rx: np.ndarray, space: StateSpace,
                        carrier_freq: float, c: float = SPEED_OF_LIGHT,
                        noise_scale: float = 1.0) -> np.ndarray:
    """log f(z | theta_tx, theta_rx) for particle arrays (row-broadcastable)."""
    x_tx = np.atleast_2d(x_tx)
    x_rx = np.atleast_2d(x_rx)
    n = max(x_tx.shape[0], x_rx.shape[0])
    if x_tx.shape[0] == 1:
        x_tx = np.broadcast_to(x_tx, (n, x_tx.shape[1]))
    if x_rx.shape[0] == 1:
        x_rx = np.broadcast_to(x_rx, (n, x_rx.shape[1]))
    delay, aoa, phase = _observables(
        space.get(x_tx, "position"), space.get(x_rx, "position"),
        space.get(x_rx, "orientation"),
        space.get(x_tx, "time_offset"), space.get(x_rx, "time_offset"),
        space.get(x_tx, "cpo"), space.get(x_rx, "cpo"),
        carrier_freq, c)
    lw = np.zeros(n)
    noise = meas.noise
    # an overflowing residual legitimately drives the log-weight to -inf
    np_err = np.seterr(over="ignore")
    if meas.delay is not None:
        s = noise.delay_std * noise_scale
        lw += -0.5 * ((meas.delay - delay) / s) ** 2
    if meas.aoa is not None:
        s = noise.aoa_std * noise_scale
        lw += -0.5 * (wrap_angle(meas.aoa - aoa) / s) ** 2
    if meas.phase is not None:
        s = noise.phase_std * noise_scale
        lw += -0.5 * (wrap_angle(meas.phase - phase) / s) ** 2
    np.seterr(**np_err)
    return lw


def joint_log_posterior(graph: FactorGraph, states: dict) -> float:
    """Unnormalized log posterior at one full state configuration."""
    space = graph.space
    total = 0.0
    for f in graph.prior_factors:
        if f.node_id in graph.topology.anchors:
            continue
        vec = space.pack(states[f.node_id])[None, :]
        total += float(f.prior.logpdf(vec)[0])
    for f in graph.pair_factors:
        j, jp = f.pair
        total += float(pair_log_likelihood(
            f.measurement, space.pack(states[j]), space.pack(states[jp]),
            space, graph.carrier_freq, graph.c)[0])
    return total


# ---------------------------------------------------------------------------
# particle BP
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BPConfig:
    particle_count: int = 1000
    max_iterations: int = 50
    message_tol: float = 1e-4
    resample_threshold: float = 0.5    # resample when ESS < threshold * n
    kernel_bandwidth_rule: str = "silverman"
    seed: int = 0
    damping: float = 0.5
    # likelihood tempering: stds scaled by anneal_start * anneal_decay^iter
    # (floored at 1) to avoid weight underflow under tight likelihoods
    anneal_start: float = 1.0
    anneal_decay: float = 0.5

    def __post_init__(self):
        if self.particle_count < 100:
            raise ValueError("particle_count must be >= 100")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 < self.resample_threshold <= 1:
            raise ValueError("resample_threshold must lie in (0, 1]")


@dataclass
class Belief:
    """Weighted particle representation of one marginal posterior."""

    particles: np.ndarray
    weights: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        s = self.weights.sum()
        if not np.isfinite(s) or abs(s - 1.0) > 1e-9:
            self.weights = self.weights / s

    @property
    def ess(self) -> float:
        return float(1.0 / np.sum(self.weights ** 2))


def _weighted_std(x: np.ndarray, w: np.ndarray, circular: bool) -> float:
    if circular:
        cbar = np.sum(w * np.cos(x))
        sbar = np.sum(w * np.sin(x))
        r = np.hypot(cbar, sbar)
        r = min(r, 1.0 - 1e-15)
        return float(np.sqrt(-2.0 * np.log(max(r, 1e-15))))
    mu = np.sum(w * x)
    return float(np.sqrt(max(np.sum(w * (x - mu) ** 2), 0.0)))


def _silverman_bandwidth(particles, weights, circular_mask) -> np.ndarray:
    n, d = particles.shape
    factor = n ** (-1.0 / (d + 4))
    h = np.empty(d)
    for k in range(d):
        s = _weighted_std(particles[:, k], weights, circular_mask[k])
        h[k] = max(s, 1e-12) * factor
    return h


def _systematic_resample(weights: np.ndarray, rng) -> np.ndarray:
    n = weights.size
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions)


def _kde_log_density(x_eval, centers, weights, h, circular_mask):
    """log of the weighted Gaussian-mixture density (the jittered-resample
    proposal) at each evaluation point; wrapped differences on circular dims."""
    n_eval = x_eval.shape[0]
    out = np.empty(n_eval)
    log_norm = float(np.sum(np.log(h)) + 0.5 * h.size * np.log(2 * np.pi))
    chunk = max(1, int(2e6) // max(centers.shape[0], 1))
    for start in range(0, n_eval, chunk):
        sl = slice(start, min(start + chunk, n_eval))
        diff = x_eval[sl, None, :] - centers[None, :, :]
        if circular_mask.any():
            diff[:, :, circular_mask] = wrap_angle(diff[:, :, circular_mask])
        q = -0.5 * np.sum((diff / h) ** 2, axis=2)
        peak = q.max(axis=1, keepdims=True)
        out[sl] = (np.log(np.sum(weights[None, :] * np.exp(q - peak), axis=1))
                   + peak[:, 0] - log_norm)
    return out


def run_loopy_bp(graph: FactorGraph, config: BPConfig) -> dict:
    """Synchronous (flooding) particle BP over the factor graph.

    Messages into an agent pair each of its particles with a particle
    resampled from the neighbor belief (anchors contribute their exact
    state), weights are the damped product of prior and incoming messages,
    and beliefs are resampled with kernel jitter when the effective sample
    size drops below the configured fraction.
    """
    space = graph.space
    top = graph.topology
    rng = np.random.default_rng(config.seed)
    priors = graph.priors()
    n = config.particle_count

    beliefs: dict[int, Belief] = {}
    anchor_vecs: dict[int, np.ndarray] = {}
    for j in top.apertures:
        if j in top.anchors:
            vec = priors[j].vec
            anchor_vecs[j] = vec
            beliefs[j] = Belief(vec[None, :].copy(), np.ones(1))
        else:
            parts = priors[j].sample(n, rng)
            beliefs[j] = Belief(parts, np.full(n, 1.0 / n))

    # importance proposal density of each agent's particle set; starts as
    # the prior (the initial sampler) and becomes the jittered-resample KDE
    logq: dict[int, np.ndarray] = {
        m: priors[m].logpdf(beliefs[m].particles).astype(float)
        for m in top.agents}

    factors_of: dict[int, list[PairFactor]] = {j: [] for j in top.apertures}
    for f in graph.pair_factors:
        j, jp = f.pair
        if j not in top.anchors:
            factors_of[j].append(f)
        if jp not in top.anchors:
            factors_of[jp].append(f)

    prev_logw: dict[int, np.ndarray | None] = {m: None for m in top.agents}
    prev_means: dict[int, np.ndarray | None] = {m: None for m in top.agents}

    for it in range(config.max_iterations):
        scale = max(1.0, config.anneal_start * config.anneal_decay ** it)
        new_logw = {}
        for m in top.agents:
            parts = beliefs[m].particles
            lw = priors[m].logpdf(parts).astype(float)
            for f in factors_of[m]:
                j, jp = f.pair
                other = jp if m == j else j
                if other in top.anchors:
                    x_other = anchor_vecs[other][None, :]
                else:
                    b = beliefs[other]
                    idx = _systematic_resample(b.weights, rng)
                    x_other = b.particles[idx]
                if m == j:
                    lw += pair_log_likelihood(f.measurement, parts, x_other,
                                              space, graph.carrier_freq,
                                              graph.c, scale)
                else:
                    lw += pair_log_likelihood(f.measurement, x_other, parts,
                                              space, graph.carrier_freq,
                                              graph.c, scale)
            new_logw[m] = lw

        converged = scale == 1.0 and it > 0
        for m in top.agents:
            lw = new_logw[m]
            if prev_logw[m] is not None:
                lw = (config.damping * lw
                      + (1.0 - config.damping) * prev_logw[m])
            prev_logw[m] = lw.copy()
            # importance correction: particles follow logq, not the target
            lw_is = lw - logq[m]
            peak = lw_is[np.isfinite(lw_is)].max() \
                if np.isfinite(lw_is).any() else -np.inf
            if not np.isfinite(peak):
                raise errors.DegeneracyError(
                    f"all particle weights underflowed for agent {m}")
            w = np.exp(lw_is - peak)
            w_sum = w.sum()
            if w_sum == 0 or not np.isfinite(w_sum):
                raise errors.DegeneracyError(
                    f"all particle weights underflowed for agent {m}")
            w /= w_sum
            bel = Belief(beliefs[m].particles, w, iteration=it + 1)

            mean = np.sum(bel.particles * w[:, None], axis=0)
            if prev_means[m] is not None:
                delta = float(np.max(np.abs(mean - prev_means[m])))
                if delta > config.message_tol:
                    converged = False
            else:
                converged = False
            prev_means[m] = mean

            if bel.ess < config.resample_threshold * n:
                idx = _systematic_resample(w, rng)
                old_parts = bel.particles
                parts = old_parts[idx].copy()
                h = _silverman_bandwidth(old_parts, w, space.circular_mask)
                parts += h * rng.standard_normal(parts.shape)
                cm = space.circular_mask
                parts[:, cm] = wrap_angle(parts[:, cm])
                # new particles follow the jitter-KDE; record it as the
                # proposal so later weights stay importance-corrected
                logq[m] = _kde_log_density(parts, old_parts, w, h, cm)
                bel = Belief(parts, np.full(n, 1.0 / n), iteration=it + 1)
                prev_logw[m] = None
            beliefs[m] = bel

        if converged:
            break
    return beliefs


# ---------------------------------------------------------------------------
# estimates and reporting
# ---------------------------------------------------------------------------

def estimate_mmse(belief: Belief, space: StateSpace,
                  node_id: int = -1) -> ApertureState:
    """Weighted particle mean; circular mean on wrapped coordinates."""
    if belief.particles.size == 0:
        raise errors.EmptyBelief("empty belief")
    w = belief.weights
    x = belief.particles
    mean = np.sum(x * w[:, None], axis=0)
    for k in np.nonzero(space.circular_mask)[0]:
        mean[k] = np.arctan2(np.sum(w * np.sin(x[:, k])),
                             np.sum(w * np.cos(x[:, k])))
    return space.unpack(mean, node_id)


def estimate_map(belief: Belief, space: StateSpace,
                 node_id: int = -1) -> ApertureState:
    """Highest-density particle after Gaussian kernel smoothing with the
    Silverman bandwidth rule (circular dims use wrapped differences)."""
    if belief.particles.size == 0:
        raise errors.EmptyBelief("empty belief")
    x = belief.particles
    w = belief.weights
    n, d = x.shape
    h = _silverman_bandwidth(x, w, space.circular_mask)
    log_dens = np.zeros(n)
    dens = np.zeros(n)
    chunk = max(1, int(2e6) // max(n, 1))
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        diff = x[sl, None, :] - x[None, :, :]
        cm = space.circular_mask
        if cm.any():
            diff[:, :, cm] = wrap_angle(diff[:, :, cm])
        q = np.sum((diff / h) ** 2, axis=2)
        dens[sl] = np.sum(w[None, :] * np.exp(-0.5 * q), axis=1)
    best = int(np.argmax(dens))
    return space.unpack(x[best].copy(), node_id)


def sync_error_report(estimates: dict, truth: dict) -> dict:
    """Per-agent state errors (wrapped where circular) plus network RMS."""
    if set(estimates) != set(truth):
        raise errors.IdMismatch(
            f"estimate ids {sorted(estimates)} != truth ids {sorted(truth)}")
    rows = {}
    pos_sq, to_sq = [], []
    for j in sorted(estimates):
        e, t = estimates[j], truth[j]
        pos_err = float(np.linalg.norm(e.position - t.position))
        row = {
            "position_error_m": pos_err,
            "orientation_error_rad": abs(wrap_angle(e.orientation
                                                    - t.orientation)),
            "to_error_s": e.time_offset - t.time_offset,
            "cfo_error_hz": e.cfo - t.cfo,
            "cpo_error_rad": abs(wrap_angle(e.cpo - t.cpo)),
        }
        rows[j] = row
        pos_sq.append(pos_err ** 2)
        to_sq.append(row["to_error_s"] ** 2)
    rows["rms"] = {
        "position_rms_m": float(np.sqrt(np.mean(pos_sq))),
        "to_rms_s": float(np.sqrt(np.mean(to_sq))),
    }
    return rows


def measurement_jacobian_rank(graph: FactorGraph, truth: dict,
                              step: float = 1e-6) -> dict:
    """Numeric rank of the stacked observable Jacobian w.r.t. agent states.

    Reports identifiability diagnostics instead of asserting anchor-count
    thresholds: rank deficiency signals unobservable directions (e.g. the
    common clock shift in anchor-free delay-only networks).
    """
    space = graph.space
    agents = graph.topology.agents
    x0 = np.concatenate([space.pack(truth[m]) for m in agents])

    def stacked(x):
        states = dict(truth)
        off = 0
        for m in agents:
            states[m] = space.unpack(x[off:off + space.dim], m)
            off += space.dim
        obs = []
        for f in graph.pair_factors:
            j, jp = f.pair
            d, a, p = _observables(
                states[j].position, states[jp].position,
                states[jp].orientation, states[j].time_offset,
                states[jp].time_offset, states[j].cpo, states[jp].cpo,
                graph.carrier_freq, graph.c)
            meas = f.measurement
            if meas.delay is not None:
                obs.append(d / meas.noise.delay_std)
            if meas.aoa is not None:
                obs.append(a / meas.noise.aoa_std)
            if meas.phase is not None:
                obs.append(p / meas.noise.phase_std)
        return np.asarray(obs, float)

    f0 = stacked(x0)
    jac = np.empty((f0.size, x0.size))
    for k in range(x0.size):
        dx = np.zeros_like(x0)
        dx[k] = step * max(abs(x0[k]), 1.0)
        jac[:, k] = (stacked(x0 + dx) - stacked(x0 - dx)) / (2 * dx[k])
    sv = np.linalg.svd(jac, compute_uv=False)
    tol = max(jac.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    rank = int(np.sum(sv > max(tol, 1e-9 * (sv[0] if sv.size else 1.0))))
    return {"rank": rank, "dim": x0.size, "singular_values": sv}


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

@dataclass
class SyncScenario:
    space: StateSpace
    topology: NetworkTopology
    true_states: dict
    scene_box: tuple[float, float, float, float]
    noise: MeasurementNoise
    config: BPConfig
    carrier_freq: float = 1e9


def load_sync_scenario(path) -> SyncScenario:
    """Parse a network scenario file.

    Line-oriented text, `#` comments.  Keys:

        sync-version: 1                       (required first)
        components: position [orientation time_offset cpo]
        carrier-freq: <Hz>
        scene-box: x_lo x_hi y_lo y_hi        (agent position prior support)
        aperture: <id> <anchor|agent> x y orient to cpo
        measure: all        | measure: <j> <jp>  (one per line)
        noise: <delay|aoa|phase> <std>
        bp-particles/bp-iterations/bp-tol/bp-seed: <value>
        anneal-start/anneal-decay: <value>
    """
    components = ("position",)
    carrier = 1e9
    box = (0.0, 100.0, 0.0, 100.0)
    apertures: list[tuple] = []
    measures: list[tuple[int, int]] = []
    measure_all = False
    noise_kw: dict[str, float] = {}
    bp_kw: dict = {}
    version_seen = False
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise errors.ParseError(f"{path}:{lineno}: expected 'key: value'")
        key, rest = key.strip(), rest.strip()
        try:
            if not version_seen:
                if key != "sync-version" or rest != "1":
                    raise errors.ParseError(
                        f"{path}:{lineno}: first line must be 'sync-version: 1'")
                version_seen = True
            elif key == "components":
                components = tuple(rest.split())
            elif key == "carrier-freq":
                carrier = float(rest)
            elif key == "scene-box":
                box = tuple(float(v) for v in rest.split())
                if len(box) != 4:
                    raise errors.ParseError(f"{path}:{lineno}: scene-box needs 4 values")
            elif key == "aperture":
                parts = rest.split()
                if len(parts) != 7 or parts[1] not in ("anchor", "agent"):
                    raise errors.ParseError(
                        f"{path}:{lineno}: aperture needs 'id anchor|agent x y orient to cpo'")
                apertures.append((int(parts[0]), parts[1] == "anchor",
                                  *(float(v) for v in parts[2:])))
            elif key == "measure":
                if rest == "all":
                    measure_all = True
                else:
                    j, jp = (int(v) for v in rest.split())
                    measures.append((j, jp))
            elif key == "noise":
                kind, std = rest.split()
                if kind not in ("delay", "aoa", "phase"):
                    raise errors.ParseError(f"{path}:{lineno}: unknown observable {kind}")
                noise_kw[f"{kind}_std"] = float(std)
            elif key == "bp-particles":
                bp_kw["particle_count"] = int(rest)
            elif key == "bp-iterations":
                bp_kw["max_iterations"] = int(rest)
            elif key == "bp-tol":
                bp_kw["message_tol"] = float(rest)
            elif key == "bp-seed":
                bp_kw["seed"] = int(rest)
            elif key == "anneal-start":
                bp_kw["anneal_start"] = float(rest)
            elif key == "anneal-decay":
                bp_kw["anneal_decay"] = float(rest)
            else:
                raise errors.ParseError(f"{path}:{lineno}: unknown key {key!r}")
        except (ValueError, TypeError) as exc:
            raise errors.ParseError(f"{path}:{lineno}: {exc}") from None
    if not version_seen:
        raise errors.ParseError(f"{path}: missing 'sync-version: 1' header")
    if not apertures:
        raise errors.ParseError(f"{path}: no apertures declared")
    ids = tuple(a[0] for a in apertures)
    anchors = tuple(a[0] for a in apertures if a[1])
    topo = NetworkTopology(ids, anchors)
    if measure_all:
        topo = replace(topo, measurement_mask=topo.pair_set)
    else:
        topo = replace(topo, measurement_mask=tuple(measures))
    states = {a[0]: ApertureState(a[0], np.array([a[2], a[3]]),
                                  orientation=a[4], time_offset=a[5],
                                  cpo=a[6]) for a in apertures}
    return SyncScenario(StateSpace(components), topo, states, box,
                        MeasurementNoise(**noise_kw), BPConfig(**bp_kw),
                        carrier)


def default_agent_prior(scenario: SyncScenario) -> dict:
    """Priors: anchors point-mass at truth; agents uniform over the scene
    box in position, uniform angles, broad Gaussian clock terms."""
    space = scenario.space
    priors = {}
    for j in scenario.topology.apertures:
        if j in scenario.topology.anchors:
            priors[j] = PointPrior(space.pack(scenario.true_states[j]))
            continue
        lo = np.empty(space.dim)
        hi = np.empty(space.dim)
        for c in space.components:
            sl = space.slices[c]
            if c == "position":
                lo[sl] = [scenario.scene_box[0], scenario.scene_box[2]]
                hi[sl] = [scenario.scene_box[1], scenario.scene_box[3]]
            elif c in _CIRCULAR:
                lo[sl], hi[sl] = -np.pi, np.pi
            elif c == "time_offset":
                lo[sl], hi[sl] = -1e-6, 1e-6
            else:
                lo[sl], hi[sl] = -1.0, 1.0
        priors[j] = UniformPrior(lo, hi)
    return priors


def run_sync_scenario(scenario: SyncScenario, seed: int | None = None):
    """Simulate measurements, run BP, and report errors.

    Returns (estimates dict, beliefs dict, error report).
    """
    cfg = scenario.config if seed is None else replace(scenario.config, seed=seed)
    meas_seed = cfg.seed
    measurements = simulate_measurements(scenario.topology,
                                         scenario.true_states, scenario.noise,
                                         meas_seed, scenario.carrier_freq)
    graph = build_factor_graph(scenario.topology,
                               default_agent_prior(scenario), measurements,
                               scenario.space, scenario.carrier_freq)
    beliefs = run_loopy_bp(graph, cfg)
    estimates = {}
    for j in scenario.topology.apertures:
        if j in scenario.topology.anchors:
            estimates[j] = scenario.true_states[j]
        else:
            estimates[j] = estimate_mmse(beliefs[j], scenario.space, j)
    truth_positions = {j: scenario.true_states[j] for j in estimates}
    report = sync_error_report(estimates, truth_positions)
    return estimates, beliefs, report

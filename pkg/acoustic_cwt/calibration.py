"""
Pearson-correlation objective and the bracketed coordinate search over (beta, phi_m, alpha, kappa).

Each step probes centre +- step_fraction * centre, walks in the improving
direction until the maximum is bracketed, fits a parabola through the bracket
and keeps the vertex only if it beats the bracket centre.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    AcousticCWTError,
    ObjectiveError,
    ParameterDomainError,
    SignalInputError,
    UndefinedCorrelationError,
)
from .oscillatory_synthesis import QuadratureSettings, causality_score, mother_wavelet
from .wavelet_model import PhaseVariant, TonotopicMap, WaveletKind, WaveletParams

logger = logging.getLogger(__name__)

PARAMETER_ORDER = ("beta", "phi_m", "alpha", "kappa")
STEP_FRACTIONS = (0.10, 0.03, 0.01)
CAUSALITY_THRESHOLD = 1e-4

TRACE_COLUMNS = ("row", "alpha_over_pi", "beta_over_pi", "phi_m_over_pi", "kappa", "nu", "c", "rho", "comment")

Objective = Callable[[WaveletParams], float]
CausalityCheck = Callable[[WaveletParams], bool]


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Product-moment correlation of two equal-length sample arrays."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise SignalInputError(f"Arrays differ in length ({a.size} vs {b.size})")
    if a.size < 2:
        raise SignalInputError("Correlation needs at least two samples")
    da = a - a.mean()
    db = b - b.mean()
    norm = math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db)))
    if norm == 0.0:
        raise UndefinedCorrelationError("Correlation of a constant array is undefined")
    return float(np.clip(np.dot(da, db) / norm, -1.0, 1.0))


def objective(p: WaveletParams, corpus: np.ndarray, settings, tonotopic_map: Optional[TonotopicMap] = None,
              threads: int = 1, cache_dir: Optional[str] = None, use_cache: bool = False,
              quadrature: Optional[QuadratureSettings] = None) -> float:
    """rho(input, plain reconstruction) over the reconstructed region of the corpus."""
    from .cwt_engine import StreamMode, WaveletTransformer

    transformer = WaveletTransformer.create(p, settings, tonotopic_map, PhaseVariant.KINK_FREE,
                                            quadrature, threads, cache_dir, use_cache)
    result = transformer.process_stream(corpus, StreamMode.PLAIN, threads=threads)
    if result.report.rho is None:
        raise ObjectiveError("Reconstruction correlation is undefined for this corpus")
    return result.report.rho


class StreamObjective:
    """Memoized corpus objective; any failure is reported as ObjectiveError."""

    def __init__(self, corpus: np.ndarray, settings, tonotopic_map: Optional[TonotopicMap] = None,
                 threads: int = 1, cache_dir: Optional[str] = None, use_cache: bool = True,
                 quadrature: Optional[QuadratureSettings] = None):
        self.corpus = np.asarray(corpus, dtype=float)
        self.settings = settings
        self.tonotopic_map = tonotopic_map
        self.threads = threads
        self.cache_dir = cache_dir
        self.use_cache = use_cache
        self.quadrature = quadrature
        self._memo: Dict[WaveletParams, float] = {}

    def __call__(self, p: WaveletParams) -> float:
        if p not in self._memo:
            try:
                self._memo[p] = objective(p, self.corpus, self.settings, self.tonotopic_map, self.threads,
                                          self.cache_dir, self.use_cache, self.quadrature)
            except AcousticCWTError as e:
                raise ObjectiveError(f"Objective failed for {p.to_pi_scaled()}: {e}") from e
            logger.info(f"rho={self._memo[p]:.6f} for {p.to_pi_scaled()}")
        return self._memo[p]


class CausalityChecker:
    """Memoized check that the mother wavelet's positive-time energy fraction is at most the threshold."""

    def __init__(self, threshold: float = CAUSALITY_THRESHOLD, rate_hz: float = 28160.0,
                 span_s: float = 0.02, quadrature: Optional[QuadratureSettings] = None):
        self.threshold = threshold
        self.rate_hz = rate_hz
        self.span_s = span_s
        self.quadrature = quadrature
        self._memo: Dict[WaveletParams, float] = {}

    def score(self, p: WaveletParams) -> float:
        if p not in self._memo:
            wavelet = mother_wavelet(p, self.rate_hz, self.span_s, WaveletKind.REAL_WAVELET,
                                     PhaseVariant.KINK_FREE, self.quadrature)
            self._memo[p] = causality_score(wavelet)
        return self._memo[p]

    def __call__(self, p: WaveletParams) -> bool:
        try:
            return self.score(p) <= self.threshold
        except AcousticCWTError as e:
            logger.warning(f"Causality check failed for {p.to_pi_scaled()}: {e}")
            return False


@dataclass
class Probe:
    value: float
    rho: float
    substituted_from: Optional[float] = None


@dataclass
class TraceEntry:
    pass_index: int
    step_fraction: float
    parameter: str
    params: WaveletParams
    rho: float
    accepted: bool
    probes: List[Probe] = field(default_factory=list)
    candidate: Optional[Probe] = None
    substitutions: int = 0
    comment: str = ""


@dataclass
class OptimizationTrace:
    entries: List[TraceEntry] = field(default_factory=list)
    pass_outputs: List[Tuple[str, WaveletParams, float]] = field(default_factory=list)

    @property
    def pass_rhos(self) -> List[float]:
        return [rho for _, _, rho in self.pass_outputs]

    def rows(self) -> List[Dict[str, object]]:
        """Table-style rows: the initial vector, then each pass's step rows followed by its output row."""
        rows = []
        for index, (comment, params, rho) in enumerate(self.pass_outputs):
            rows.extend(_trace_row("step", entry.params, entry.rho, entry.comment)
                        for entry in self.entries if entry.pass_index == index)
            rows.append(_trace_row("pass", params, rho, comment))
        return rows

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=TRACE_COLUMNS)
            writer.writeheader()
            writer.writerows(self.rows())
        return path


def _trace_row(kind: str, params: WaveletParams, rho: float, comment: str) -> Dict[str, object]:
    row: Dict[str, object] = {"row": kind}
    row.update({key: f"{value:.6g}" for key, value in params.to_pi_scaled().items() if key != "f0_hz"})
    row["rho"] = f"{rho:.6f}"
    row["comment"] = comment
    return row


@dataclass
class OptimizationResult:
    params: WaveletParams
    rho: float
    trace: OptimizationTrace


def _with_value(p: WaveletParams, parameter: str, value: float) -> Optional[WaveletParams]:
    try:
        return p.replace(**{parameter: float(value)})
    except (ValueError, AcousticCWTError) as e:
        logger.debug(f"{parameter}={value:.6g} gives an invalid vector: {e}")
        return None


def _safe_objective(objective_fn: Objective, p: Optional[WaveletParams]) -> float:
    if p is None:
        return -math.inf
    try:
        return float(objective_fn(p))
    except AcousticCWTError as e:
        logger.warning(f"Objective failure treated as -inf: {e}")
        return -math.inf


def parabola_vertex(points: Sequence[Probe]) -> Optional[float]:
    """Abscissa of the parabola's extremum through three probes, or None if degenerate."""
    (x1, f1), (x2, f2), (x3, f3) = [(pt.value, pt.rho) for pt in points]
    if not all(math.isfinite(v) for v in (f1, f2, f3)):
        return None
    numerator = (x2 - x1) ** 2 * (f2 - f3) - (x2 - x3) ** 2 * (f2 - f1)
    denominator = (x2 - x1) * (f2 - f3) - (x2 - x3) * (f2 - f1)
    if denominator == 0.0:
        return None
    return x2 - 0.5 * numerator / denominator


def coordinate_step(p: WaveletParams, parameter: str, step_fraction: float, objective_fn: Objective,
                    is_causal: Optional[CausalityCheck] = None,
                    rng: Optional[np.random.Generator] = None,
                    incumbent_rho: Optional[float] = None,
                    max_walk_steps: int = 20, causal_retries: int = 32,
                    pass_index: int = 0) -> Tuple[WaveletParams, TraceEntry]:
    """One bracketed, parabola-refined update of a single parameter."""
    if parameter not in PARAMETER_ORDER:
        raise ParameterDomainError(f"Parameter {parameter!r} is not optimized (choose from {PARAMETER_ORDER})")
    if step_fraction <= 0:
        raise ParameterDomainError(f"step_fraction must be positive (got {step_fraction})")
    rng = rng or np.random.default_rng()
    x0 = float(getattr(p, parameter))
    h = step_fraction * abs(x0) if x0 != 0.0 else step_fraction
    rho0 = incumbent_rho if incumbent_rho is not None else _safe_objective(objective_fn, p)
    probes: List[Probe] = []
    substitutions = 0

    def evaluate(x: float) -> Probe:
        nonlocal substitutions
        candidate = _with_value(p, parameter, x)
        probe = Probe(value=x, rho=-math.inf)
        if candidate is not None and is_causal is not None and not is_causal(candidate):
            replacement = None
            for _ in range(causal_retries):
                trial = float(rng.uniform(x - h, x + h))
                trial_params = _with_value(p, parameter, trial)
                if trial_params is not None and is_causal(trial_params):
                    replacement = (trial, trial_params)
                    break
            if replacement is None:
                logger.info(f"No causal neighbour found for {parameter}={x:.6g}")
                candidate = None
            else:
                substitutions += 1
                probe = Probe(value=replacement[0], rho=-math.inf, substituted_from=x)
                candidate = replacement[1]
        probe.rho = _safe_objective(objective_fn, candidate)
        probes.append(probe)
        return probe

    centre = Probe(value=x0, rho=rho0)
    left = evaluate(x0 - h)
    right = evaluate(x0 + h)

    def finish(best: Probe, candidate: Optional[Probe], comment: str) -> Tuple[WaveletParams, TraceEntry]:
        accepted = best.rho > rho0 and best.value != x0
        new_params = _with_value(p, parameter, best.value) if accepted else p
        if new_params is None:
            new_params, accepted = p, False
        rho = best.rho if accepted else rho0
        verdict = "accepted" if accepted else "rejected"
        entry = TraceEntry(pass_index=pass_index, step_fraction=step_fraction, parameter=parameter,
                           params=new_params, rho=rho, accepted=accepted, probes=probes,
                           candidate=candidate, substitutions=substitutions,
                           comment=f"{parameter} @ {step_fraction:g}: {verdict} ({comment})")
        logger.info(entry.comment)
        return new_params, entry

    if not any(math.isfinite(pt.rho) for pt in (centre, left, right)):
        logger.warning(f"All probes failed for {parameter}; step aborted")
        return finish(centre, None, "all probes failed")

    if centre.rho >= left.rho and centre.rho >= right.rho:
        bracket = (left, centre, right)
    else:
        direction = 1.0 if right.rho > left.rho else -1.0
        previous, best = centre, (right if direction > 0 else left)
        bracket = None
        for _ in range(max_walk_steps):
            ahead = evaluate(best.value + direction * h)
            if ahead.rho <= best.rho:
                bracket = (previous, best, ahead)
                break
            previous, best = best, ahead
        if bracket is None:
            return finish(best, None, f"walk not bracketed after {max_walk_steps} steps")

    vertex = parabola_vertex(sorted(bracket, key=lambda pt: pt.value))
    candidate = None
    if vertex is not None and math.isfinite(vertex):
        candidate = evaluate(vertex)
    best = bracket[1]
    if candidate is not None and candidate.rho > best.rho:
        return finish(candidate, candidate, "parabola vertex")
    return finish(best, candidate, "bracket centre")


def optimize(p0: WaveletParams, objective_fn: Objective, is_causal: Optional[CausalityCheck] = None,
             step_fractions: Sequence[float] = STEP_FRACTIONS,
             parameter_order: Sequence[str] = PARAMETER_ORDER,
             seed: int = 12345, max_walk_steps: int = 20, causal_retries: int = 32) -> OptimizationResult:
    """One pass over parameter_order per step fraction, each pass starting from the previous output."""
    for name in parameter_order:
        if name not in PARAMETER_ORDER:
            raise ParameterDomainError(f"Parameter {name!r} is not optimized")
    rng = np.random.default_rng(seed)
    try:
        rho = float(objective_fn(p0))
    except AcousticCWTError as e:
        raise ObjectiveError(f"Objective failed for the starting vector: {e}") from e

    trace = OptimizationTrace()
    trace.pass_outputs.append(("Initial input", p0, rho))
    p = p0
    for pass_index, fraction in enumerate(step_fractions, start=1):
        for name in parameter_order:
            p, entry = coordinate_step(p, name, fraction, objective_fn, is_causal, rng,
                                       incumbent_rho=rho, max_walk_steps=max_walk_steps,
                                       causal_retries=causal_retries, pass_index=pass_index)
            rho = entry.rho
            trace.entries.append(entry)
        trace.pass_outputs.append((f"Output of step {pass_index} ({fraction:.0%})", p, rho))
        logger.info(f"Pass {pass_index} done: rho={rho:.6f}")
    return OptimizationResult(params=p, rho=rho, trace=trace)

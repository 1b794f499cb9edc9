"""Parameter sweeps, validation runs and their CSV/config plumbing.

Units: ``kappa = 1`` and nominal coupling ``g = 1`` for the effective model, so
``epsilon`` equals the spontaneous emission rate.  The full cavity model uses
``g`` from the config (in units of ``kappa``) with ``Gamma = epsilon g^2``.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import algebra as alg
from .algebra import DensityMatrix
from .entanglement import concurrence, eof_from_concurrence, eof_two_qubit, entanglement_entropy, \
    squeezed_state_eof, von_neumann_entropy
from .errors import ConfigError, ModelError, TruncationError
from .models import (PhysicalParams, SqueezingParams, build_effective_me, build_full_me, build_network_me,
                     dark_state, network_dark_state)
from .protocols import measure_node_B, optimize_filter
from .steady import SteadyStateReport, steady_state_direct, steady_state_evolve

log = logging.getLogger(__name__)

TAIL_TOL = 1e-6
_Z = np.diag([1.0, -1.0])


# -- configuration ---------------------------------------------------------

def parse_grid(text) -> tuple:
    """``"a:b:step"`` (inclusive), ``"x,y,z"`` or a single number."""
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ConfigError(f"range grid needs start:stop:step, got {text!r}")
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ConfigError(f"invalid range grid {text!r}")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 12) for k in range(n))
        vals = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}: {exc}") from None
    if not vals:
        raise ConfigError("empty grid")
    return vals


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_m(text):
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().lower()
    if t == "perfect":
        return "perfect"
    try:
        return float(t)
    except ValueError:
        raise ConfigError(f"M must be 'perfect' or a number, got {text!r}") from None


@dataclass(frozen=True)
class SweepConfig:
    model: str = "effective"
    epsilon: tuple = parse_grid("0:0.5:0.01")
    N: tuple = parse_grid("0.1:2.0:0.05")
    M: object = "perfect"
    filter: bool = True
    filter_scan: str = "symmetric"
    s: tuple = parse_grid("0:0.5:0.1")
    quad_order: int = 15
    tol: float = 1e-8
    n_max: int = 6
    n_max_list: tuple = (10,)
    g: float = 0.05
    solver: str = "direct"
    tail_tol: float = TAIL_TOL
    workers: int = 1
    out: str = "-"

    def __post_init__(self):
        if self.model not in ("full", "effective", "network"):
            raise ConfigError(f"model must be full, effective or network, got {self.model!r}")
        for name in ("epsilon", "N", "s"):
            grid = getattr(self, name)
            if not grid or not all(np.isfinite(grid)):
                raise ConfigError(f"grid {name} must be nonempty and finite")
            if min(grid) < 0:
                raise ConfigError(f"grid {name} must be nonnegative")
        if not self.tol > 0 or not self.tail_tol > 0:
            raise ConfigError("tolerances must be positive")
        if self.quad_order < 3:
            raise ConfigError(f"quad_order={self.quad_order} must be >= 3")
        if self.n_max < 2 or min(self.n_max_list) < 2:
            raise ConfigError("n_max must be >= 2")
        if self.filter_scan not in ("symmetric", "full"):
            raise ConfigError(f"filter_scan must be symmetric or full, got {self.filter_scan!r}")
        if self.solver not in ("direct", "evolve"):
            raise ConfigError(f"solver must be direct or evolve, got {self.solver!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.g < 0:
            raise ConfigError("g must be >= 0")
        if self.M != "perfect":
            for n in self.N:
                try:
                    SqueezingParams(n, self.M)
                except ModelError as exc:
                    raise ConfigError(f"M policy inconsistent with N={n}: {exc}") from None

    def squeezing(self, N: float) -> SqueezingParams:
        return SqueezingParams.perfect(N) if self.M == "perfect" else SqueezingParams(N, float(self.M))


_PARSERS = {
    "model": lambda v: str(v).strip(),
    "epsilon": parse_grid,
    "N": parse_grid,
    "M": _parse_m,
    "filter": _parse_bool,
    "filter_scan": lambda v: str(v).strip(),
    "s": parse_grid,
    "quad_order": int,
    "tol": float,
    "n_max": int,
    "n_max_list": lambda v: tuple(int(x) for x in parse_grid(v)),
    "g": float,
    "solver": lambda v: str(v).strip(),
    "tail_tol": float,
    "workers": int,
    "out": lambda v: str(v).strip(),
}


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        values[key] = val
    return values


def load_config(path=None, overrides: dict | None = None) -> SweepConfig:
    """Build a config from an optional key=value file plus overrides (overrides win)."""
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(raw) - set(_PARSERS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    for key, val in raw.items():
        try:
            kwargs[key] = _PARSERS[key](val)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {val!r}") from None
    return SweepConfig(**kwargs)


# -- CSV -------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def rows_to_csv(rows) -> str:
    """UTF-8 CSV text with a header, 12 significant digits and LF line endings."""
    dict_rows = [r if isinstance(r, dict) else r.as_dict() for r in rows]
    if not dict_rows:
        return ""
    header = list(dict_rows[0])
    for r in dict_rows[1:]:
        header += [k for k in r if k not in header]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in dict_rows:
        w.writerow([_fmt(r.get(k)) for k in header])
    return buf.getvalue()


def write_csv(rows, path: str) -> str:
    text = rows_to_csv(rows)
    if path and path != "-":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


# -- effective-model helpers -------------------------------------------------

def effective_steady_state(epsilon: float, sq: SqueezingParams, g_a: float = 1.0,
                           g_b: float = 1.0, tol: float = 1e-8) -> SteadyStateReport:
    """Steady state for couplings ``g_a, g_b`` (nominal ``g = kappa = 1``).

    Negative couplings (atoms beyond a node of the standing wave) are mapped
    to ``|g|`` and undone by a local ``Z`` on that atom, which flips the sign
    of the correlation term exactly as a signed coupling would.
    """
    phys = PhysicalParams(abs(g_a), abs(g_b), 1.0, float(epsilon))
    rep = steady_state_direct(build_effective_me(phys, sq), rel_tol=tol)
    if g_a >= 0 and g_b >= 0:
        return rep
    U = np.kron(_Z if g_a < 0 else np.eye(2), _Z if g_b < 0 else np.eye(2))
    return replace(rep, state=DensityMatrix((2, 2), U @ rep.state.matrix @ U))


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    N: float
    M: float
    eof: float
    concurrence: float
    residual: float
    eof_filtered: float | None = None
    success_prob: float | None = None
    filter_theta_a: float | None = None
    filter_theta_b: float | None = None
    filter_level: int | None = None
    optimal_N: bool = False

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _sweep_point(args) -> SweepRow:
    eps, N, cfg = args
    sq = cfg.squeezing(N)
    rep = effective_steady_state(eps, sq, tol=cfg.tol)
    c = concurrence(rep.state)
    row = SweepRow(eps, N, sq.M, eof_from_concurrence(c), c, rep.residual)
    if cfg.filter:
        spec, out = optimize_filter(rep.state, symmetric=cfg.filter_scan == "symmetric")
        row = replace(row, eof_filtered=out.eof_after, success_prob=out.success_prob,
                      filter_theta_a=spec.theta_a, filter_theta_b=spec.theta_b, filter_level=spec.target_level)
    return row


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=8))


def sweep_epsilon(config: SweepConfig) -> list[SweepRow]:
    """EoF over the epsilon x N grid (epsilon-major), flagging the best N per epsilon."""
    if config.model != "effective":
        raise ConfigError("sweep_epsilon runs on the effective model")
    items = [(e, n, config) for e in config.epsilon for n in config.N]
    rows = _map(_sweep_point, items, config.workers)
    out = []
    k = 0
    for _ in config.epsilon:
        block = rows[k:k + len(config.N)]
        best = int(np.argmax([r.eof for r in block]))
        out += [replace(r, optimal_N=(i == best)) for i, r in enumerate(block)]
        k += len(config.N)
    return out


def optimum_by_epsilon(rows) -> list[dict]:
    """Per-epsilon summary: N maximizing the unfiltered EoF and the filtered EoF at that N.

    ``eof_filtered_max`` is the largest filtered EoF anywhere on the N grid;
    it grows as N decreases (at vanishing success probability), so it
    usually sits on the lower edge of the grid.
    """
    out = []
    for eps in sorted({r.epsilon for r in rows}):
        block = [r for r in rows if r.epsilon == eps]
        best = max(block, key=lambda r: r.eof)
        d = {"epsilon": eps, "N_opt": best.N, "eof_opt": best.eof}
        if best.eof_filtered is not None:
            fbest = max(block, key=lambda r: r.eof_filtered)
            d.update(eof_filtered_at_N_opt=best.eof_filtered, success_prob_at_N_opt=best.success_prob,
                     N_filtered_max=fbest.N, eof_filtered_max=fbest.eof_filtered)
        out.append(d)
    return out


def averaged_state(s: float, N: float, epsilon: float, quad_order: int = 15,
                   M=None, tol: float = 1e-8) -> DensityMatrix:
    """Steady state averaged over Gaussian position spread ``s`` of both atoms.

    Couplings are ``cos(theta_a), cos(theta_b)`` with ``theta ~ N(0, s^2)``,
    integrated by a tensor Gauss-Hermite rule of ``quad_order`` nodes per axis.
    """
    if quad_order < 3:
        raise ConfigError(f"quad_order={quad_order} must be >= 3")
    if s < 0:
        raise ValueError(f"s={s} must be >= 0")
    sq = SqueezingParams.perfect(N) if M is None else SqueezingParams(N, M)
    if s == 0:
        return effective_steady_state(epsilon, sq, tol=tol).state
    x, w = np.polynomial.hermite.hermgauss(quad_order)
    theta = np.sqrt(2.0) * s * x
    w = w / np.sqrt(np.pi)
    cache = {}
    acc = np.zeros((4, 4), dtype=complex)
    for i, ti in enumerate(theta):
        for j, tj in enumerate(theta):
            key = (i, j)
            if key not in cache:
                cache[key] = effective_steady_state(epsilon, sq, np.cos(ti), np.cos(tj), tol=tol).state.matrix
            acc += w[i] * w[j] * cache[key]
    acc = (acc + acc.conj().T) / 2
    return DensityMatrix((2, 2), acc / np.trace(acc).real)


def position_average(s: float, N: float, epsilon: float, quad_order: int = 15,
                     filter_scan: str = "full") -> tuple[float, float]:
    """``(EoF, filtered EoF)`` of the position-averaged steady state."""
    rho = averaged_state(s, N, epsilon, quad_order)
    _, out = optimize_filter(rho, symmetric=filter_scan == "symmetric")
    return eof_two_qubit(rho), out.eof_after


def position_rows(config: SweepConfig) -> list[dict]:
    rows = []
    for eps in config.epsilon:
        for N in config.N:
            for s in config.s:
                e, ef = position_average(s, N, eps, config.quad_order, config.filter_scan)
                rows.append({"epsilon": eps, "N": N, "s": s, "quad_order": config.quad_order,
                             "eof": e, "eof_filtered": ef})
    return rows


def transfer_curve(config: SweepConfig) -> list[dict]:
    """Atomic EoF against the EoF carried by the squeezed light, per epsilon."""
    if config.model != "effective":
        raise ConfigError("transfer_curve runs on the effective model")
    rows = []
    for eps in config.epsilon:
        for N in sorted(config.N):
            rep = effective_steady_state(eps, config.squeezing(N), tol=config.tol)
            e = eof_two_qubit(rep.state)
            row = {"epsilon": eps, "N": N, "squeezed_eof": squeezed_state_eof(N), "eof": e}
            if config.filter:
                if N > 0:
                    _, out = optimize_filter(rep.state, symmetric=config.filter_scan == "symmetric")
                    row.update(eof_filtered=out.eof_after, success_prob=out.success_prob)
                else:
                    row.update(eof_filtered=0.0, success_prob=1.0)
            rows.append(row)
    return rows


# -- full-model validation ---------------------------------------------------

def check_truncation(report: SteadyStateReport, tail_tol: float = TAIL_TOL) -> SteadyStateReport:
    if not report.truncation_tail < tail_tol:
        raise TruncationError(f"top-two Fock level population {report.truncation_tail:.3e} >= {tail_tol:g}; "
                              "increase n_max", tail=report.truncation_tail)
    return report


def full_atomic_state(phys: PhysicalParams, sq: SqueezingParams, n_max: int, solver: str = "direct",
                      tol: float = 1e-8, evolve_tol: float = 1e-9) -> tuple[DensityMatrix, SteadyStateReport]:
    """Reduced two-atom steady state of the full cavity model."""
    L = build_full_me(phys, sq, n_max)
    if solver == "evolve":
        rho0 = alg.StateVector.basis(L.dims, (0, 0, 0, 0)).dm()
        rep = steady_state_evolve(L, rho0, tol=evolve_tol)
    else:
        rep = steady_state_direct(L, rel_tol=tol)
    return alg.partial_trace(rep.state, [0, 1]), rep


@dataclass
class EliminationReport:
    rows: list = field(default_factory=list)
    distance_g: float = float("nan")
    distance_half_g: float = float("nan")
    ratio: float = float("nan")


def validate_elimination(phys: PhysicalParams, sq: SqueezingParams, n_max_list=(10,),
                         solver: str = "direct", tail_tol: float | None = TAIL_TOL) -> EliminationReport:
    """Compare full-model and eliminated-model atomic steady states at ``g`` and ``g/2``.

    ``epsilon`` is held fixed when halving ``g`` (``Gamma`` scales with
    ``g^2``), so the effective state is the same and the trace distance
    isolates the elimination error, expected to scale as ``(g/kappa)^2``.
    Distances are taken at the largest ``n_max``; that solve must pass the
    truncation-tail check unless ``tail_tol`` is None.
    """
    if not phys.symmetric:
        raise ModelError("validate_elimination compares the symmetric models")
    n_list = sorted(int(n) for n in n_max_list)
    report = EliminationReport()
    g0 = phys.g_a
    dist = {}
    for g in (g0, g0 / 2):
        if g0 > 0:
            p = PhysicalParams(g, g, phys.kappa, phys.gamma_sp * (g / g0) ** 2)
        else:
            p = phys
        eff = steady_state_direct(build_effective_me(p, sq)).state
        prev = None
        for n in n_list:
            rho, rep = full_atomic_state(p, sq, n, solver)
            d = rho.trace_distance(eff)
            report.rows.append({"g": g, "gamma_sp": p.gamma_sp, "n_max": n, "trace_distance": d,
                                "truncation_tail": rep.truncation_tail,
                                "n_max_change": rho.trace_distance(prev) if prev is not None else None,
                                "residual": rep.residual})
            prev = rho
        if tail_tol is not None:
            check_truncation(rep, tail_tol)
        dist[g] = d
        if g0 == 0:
            break
    report.distance_g = dist[g0]
    if g0 > 0:
        report.distance_half_g = dist[g0 / 2]
        report.ratio = dist[g0] / dist[g0 / 2] if dist[g0 / 2] > 0 else float("inf")
    return report


# -- network -------------------------------------------------------------------

@dataclass
class NetworkReport:
    N: float
    steady: SteadyStateReport
    fidelity: float
    purity: float
    entropy_A_BC: float
    entropy_AB_C: float
    outcomes: list


def run_network(N: float, epsilon: float = 0.0, M=None, ideal: bool | None = None,
                tol: float = 1e-8) -> NetworkReport:
    """Steady state of the three-node chain and the Bell-type measurement of node B.

    Both links use the same squeezing. Entropies are entanglement measures only
    for (numerically) pure steady states; for mixed states they are the
    reduced-state entropies.
    """
    sq = SqueezingParams.perfect(N) if M is None else SqueezingParams(N, M)
    if ideal is None:
        ideal = epsilon == 0 and sq.is_perfect
    phys = PhysicalParams.from_epsilon(epsilon)
    rep = steady_state_direct(build_network_me(phys, (sq, sq), ideal=ideal), rel_tol=tol)
    rho = rep.state
    purity = float(np.real(np.trace(rho.matrix @ rho.matrix)))
    if purity > 1 - 1e-8:
        w, V = np.linalg.eigh(rho.matrix)
        psi = alg.StateVector.normalized(rho.dims, V[:, -1])
        s_a, s_c = entanglement_entropy(psi, [0]), entanglement_entropy(psi, [2])
    else:
        s_a = von_neumann_entropy(alg.partial_trace(rho, [0]))
        s_c = von_neumann_entropy(alg.partial_trace(rho, [2]))
    return NetworkReport(N, rep, rho.fidelity(network_dark_state(N)), purity, s_a, s_c, measure_node_B(rho))


def network_rows(report: NetworkReport) -> list[dict]:
    base = {"N": report.N, "fidelity": report.fidelity, "purity": report.purity,
            "entropy_A_BC": report.entropy_A_BC, "entropy_AB_C": report.entropy_AB_C,
            "residual": report.steady.residual}
    rows = []
    for o in report.outcomes:
        rows.append({**base, "outcome": o.label, "probability": o.probability,
                     "eof_AC": eof_two_qubit(o.post_state) if o.post_state is not None else 0.0})
    return rows


def steady_rows(config: SweepConfig) -> list[dict]:
    """One steady-state solve per (epsilon, N) for the configured model."""
    rows = []
    for eps in config.epsilon:
        for N in config.N:
            sq = config.squeezing(N)
            if config.model == "network":
                rep = run_network(N, eps, None if config.M == "perfect" else float(config.M), tol=config.tol)
                rows += network_rows(rep)
                continue
            row = {"model": config.model, "epsilon": eps, "N": N, "M": sq.M}
            if config.model == "full":
                g = config.g
                phys = PhysicalParams(g, g, 1.0, eps * g * g)
                rho, rep = full_atomic_state(phys, sq, config.n_max, config.solver, tol=config.tol)
                check_truncation(rep, config.tail_tol)
                row.update(g=g, n_max=config.n_max)
            else:
                rep = effective_steady_state(eps, sq, tol=config.tol)
                rho = rep.state
            c = concurrence(rho)
            row.update(residual=rep.residual, unique=rep.unique,
                       truncation_tail=rep.truncation_tail if np.isfinite(rep.truncation_tail) else None,
                       concurrence=c, eof=eof_from_concurrence(c), dark_state_fidelity=rho.fidelity(dark_state(N)),
                       method=rep.method)
            rows.append(row)
    return rows


def config_fields() -> list[str]:
    return [f.name for f in fields(SweepConfig)]

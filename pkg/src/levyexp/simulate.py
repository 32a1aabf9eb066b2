"""Monte Carlo evaluation of exponential functionals of Levy processes.

Samples are produced in blocks.  Each block owns a child random stream keyed
by ``(purpose, block index)``, so a batch is bit-identical for a fixed seed
whatever the number of worker processes.

Within a block every sample is a row of a padded event matrix: grid nodes
(only when ``xi`` has a Gaussian part), jump times of ``xi`` and ``eta``, the
lower integration limit and the horizon.  Between consecutive nodes ``xi`` is
linear (plus a Brownian increment), so the drift and Gaussian parts of
``eta`` integrate in closed form against ``exp(k xi)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import HorizonExceeded, ParameterError
from .model import INF, LevyTriplet, ProcessSpec, SimRecipe

# draw streams, used as the first spawn-key component
STREAM_KILLED = 1
STREAM_FIXED = 2
STREAM_GOU = 3
STREAM_UNKILLED = 4
STREAM_PATH = 5


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream identified by ``(seed, key)``; children extend the key."""

    seed: int
    key: tuple[int, ...] = ()

    def child(self, i: int) -> "RngStream":
        return RngStream(self.seed, self.key + (int(i),))

    @property
    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(self.key))
        return np.random.Generator(np.random.Philox(ss))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("LEVYEXP_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SimParams:
    """Scheme parameters.

    ``h`` grid step used only when ``xi`` has a diffusive part; ``delta`` the
    small-jump cutoff; ``policy`` ``"gaussian"`` or ``"drop"``;
    ``t0``/``max_horizon``/``tail_tol`` drive the unkilled horizon doubling.
    ``workers`` is not part of the provenance: results do not depend on it.
    """

    h: float = 1e-2
    delta: float = 1e-3
    policy: str = "gaussian"
    block_size: int = 512
    t0: float = 8.0
    max_horizon: float = 512.0
    tail_tol: float = 1e-6
    force_grid: bool = False
    workers: int | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise ParameterError("grid step h must be positive")
        if not self.delta > 0:
            raise ParameterError("small-jump cutoff delta must be positive")
        if self.block_size < 1:
            raise ParameterError("block size must be >= 1")
        if not (self.t0 > 0 and self.max_horizon >= self.t0):
            raise ParameterError("need 0 < t0 <= max_horizon")
        if not self.tail_tol > 0:
            raise ParameterError("tail tolerance must be positive")

    def provenance(self) -> dict:
        d = asdict(self)
        d.pop("workers")
        return d

    def with_overrides(self, **kw) -> "SimParams":
        return replace(self, **kw)


@dataclass
class SampleBatch:
    values: np.ndarray
    scenario_id: str
    seed: int
    params: dict
    kind: str = "killed"
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.values.size)


def _recipe(x, params: SimParams) -> SimRecipe:
    spec = x if isinstance(x, ProcessSpec) else ProcessSpec(x)
    return spec.sim_recipe(params.delta, params.policy)


# ---------------------------------------------------------------------------
# block kernel


def _draw_jumps(gen: np.random.Generator, rec: SimRecipe, b: np.ndarray):
    """Jump times (``inf``-padded) and sizes (0-padded) on ``(0, b_i]``."""
    B = b.size
    rate = rec.jump_rate
    if rate == 0:
        return np.empty((B, 0)), np.empty((B, 0))
    counts = gen.poisson(rate * b)
    K = int(counts.max()) if B else 0
    u = gen.random((B, K))
    mask = np.arange(K)[None, :] < counts[:, None]
    times = np.where(mask, u * b[:, None], INF)
    sizes = np.zeros((B, K))
    sizes[mask] = rec.sample_jumps(gen, int(counts.sum()))
    return times, sizes


@dataclass
class _Block:
    """Sorted event matrix for a block; row ``i`` starts at time 0."""

    times: np.ndarray      # (B, M+1), column 0 is time 0, inf-padded
    xi_jump: np.ndarray    # (B, M+1)
    eta_jump: np.ndarray   # (B, M+1)
    xi_normals: np.ndarray | None   # (B, M)
    eta_normals: np.ndarray | None  # (B,)


def _draw_block(gen, xr: SimRecipe, er: SimRecipe, b: np.ndarray, a: np.ndarray,
                h: float, force_grid: bool) -> _Block:
    B = b.size
    tx, jx = _draw_jumps(gen, xr, b)
    te, je = _draw_jumps(gen, er, b)
    cols_t = [tx, te]
    cols_x = [jx, np.zeros_like(te)]
    cols_e = [np.zeros_like(tx), je]
    if xr.diffusive_variance > 0 or force_grid:
        G = int(math.ceil(float(b.max()) / h)) if B else 0
        grid = h * np.arange(1, G + 1, dtype=float)[None, :].repeat(B, axis=0)
        grid[grid >= b[:, None]] = INF
        cols_t.append(grid)
        cols_x.append(np.zeros_like(grid))
        cols_e.append(np.zeros_like(grid))
    lower = np.where(a > 0, a, INF)[:, None]
    for extra in (lower, b[:, None]):
        cols_t.append(extra)
        cols_x.append(np.zeros((B, 1)))
        cols_e.append(np.zeros((B, 1)))
    T = np.concatenate(cols_t, axis=1)
    JX = np.concatenate(cols_x, axis=1)
    JE = np.concatenate(cols_e, axis=1)
    order = np.argsort(T, axis=1, kind="stable")
    T = np.take_along_axis(T, order, axis=1)
    JX = np.take_along_axis(JX, order, axis=1)
    JE = np.take_along_axis(JE, order, axis=1)
    # drop columns that are padding in every row
    width = int(np.isfinite(T).sum(axis=1).max()) if B else 0
    T, JX, JE = T[:, :width], JX[:, :width], JE[:, :width]
    zero = np.zeros((B, 1))
    T = np.concatenate([zero, T], axis=1)
    JX = np.concatenate([zero, JX], axis=1)
    JE = np.concatenate([zero, JE], axis=1)
    zx = gen.standard_normal((B, width)) if xr.diffusive_variance > 0 else None
    ze = gen.standard_normal(B) if er.diffusive_variance > 0 else None
    return _Block(T, JX, JE, zx, ze)


def _phi(y: np.ndarray) -> np.ndarray:
    """``expm1(y) / y`` with the removable singularity filled in."""
    small = np.abs(y) < 1e-8
    safe = np.where(small, 1.0, y)
    return np.where(small, 1.0 + 0.5 * y, np.expm1(safe) / safe)


def _evaluate(blk: _Block, xr: SimRecipe, er: SimRecipe, a: np.ndarray, sign: int):
    """``(int_a^b exp(sign * xi_{s-}) d eta_s, xi_b)`` per row."""
    T = blk.times
    valid = np.isfinite(T[:, 1:])
    dt = np.where(valid, T[:, 1:] - np.where(np.isfinite(T[:, :-1]), T[:, :-1], 0.0), 0.0)
    jx_right = np.where(valid, blk.xi_jump[:, 1:], 0.0)
    var_x = xr.diffusive_variance
    inc = xr.drift_rate * dt + jx_right
    if var_x > 0:
        inc = inc + math.sqrt(var_x) * np.sqrt(dt) * blk.xi_normals
    X = np.concatenate([np.zeros((T.shape[0], 1)), np.cumsum(inc, axis=1)], axis=1)
    x_left = X[:, :-1]
    x_right_minus = X[:, 1:] - jx_right
    active = valid & (T[:, :-1] >= a[:, None])
    k = float(sign)

    def cell_integral(kk):
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.exp(kk * x_left) * dt * _phi(kk * (x_right_minus - x_left))
            if var_x > 0:
                # Brownian-bridge mean correction, averaged over the cell
                out = out * np.exp(kk * kk * var_x * dt / 12.0)
        return np.where(active, out, 0.0).sum(axis=1)

    total = np.zeros(T.shape[0])
    if er.drift_rate != 0:
        total = total + er.drift_rate * cell_integral(k)
    if er.diffusive_variance > 0:
        total = total + np.sqrt(er.diffusive_variance * cell_integral(2 * k)) * blk.eta_normals
    je = np.where(active, blk.eta_jump[:, 1:], 0.0)
    if np.any(je != 0):
        with np.errstate(over="ignore", invalid="ignore"):
            contrib = np.where(je != 0, je * np.exp(k * x_right_minus), 0.0)
        total = total + contrib.sum(axis=1)
    last = np.isfinite(T).sum(axis=1) - 1
    xi_end = X[np.arange(T.shape[0]), last]
    return total, xi_end


_SUB = 64


def _integrate(gen, xr, er, b, a, sign, params: SimParams):
    # rows with similar horizons share a padded matrix; the order depends on b only
    if b.size <= _SUB or np.all(b == b[0]):
        blk = _draw_block(gen, xr, er, b, a, params.h, params.force_grid)
        return _evaluate(blk, xr, er, a, sign)
    order = np.argsort(b, kind="stable")
    val = np.empty(b.size)
    end = np.empty(b.size)
    for s in range(0, b.size, _SUB):
        idx = order[s:s + _SUB]
        blk = _draw_block(gen, xr, er, b[idx], a[idx], params.h, params.force_grid)
        val[idx], end[idx] = _evaluate(blk, xr, er, a[idx], sign)
    return val, end


# ---------------------------------------------------------------------------
# block jobs (module level so they can be shipped to worker processes)


def _job_killed(args):
    seed, j, B, xr, er, q, params = args
    gen = RngStream(seed, (STREAM_KILLED, j)).generator
    tau = gen.exponential(1.0 / q, B)
    val, _ = _integrate(gen, xr, er, tau, np.zeros(B), -1, params)
    return val


def _job_fixed(args):
    seed, j, B, xr, er, t, params = args
    gen = RngStream(seed, (STREAM_FIXED, j)).generator
    val, _ = _integrate(gen, xr, er, np.full(B, float(t)), np.zeros(B), -1, params)
    return val


def _job_gou(args):
    seed, key, j, x0, xr, er, q, t, params = args
    gen = RngStream(seed, (STREAM_GOU,) + tuple(key) + (j,)).generator
    B = x0.size
    n_jumps = gen.poisson(q * t, B)
    u = gen.random(B)
    with np.errstate(divide="ignore"):
        last = np.where(n_jumps > 0, t * u ** (1.0 / np.maximum(n_jumps, 1)), 0.0)
    integral, xi_t = _integrate(gen, xr, er, np.full(B, float(t)), last, +1, params)
    with np.errstate(over="ignore", invalid="ignore"):
        return np.exp(-xi_t) * (np.where(n_jumps == 0, x0, 0.0) + integral)


def _tail_scale(er: SimRecipe) -> float:
    rec = er.recompose()
    big = math.fsum(c.abs_moment(1.0, INF) for c in rec.measure) if rec.measure else 0.0
    return 1.0 + abs(er.drift_rate) + math.sqrt(er.diffusive_variance) + big


def _job_unkilled(args):
    seed, j, B, xr, er, params = args
    gen = RngStream(seed, (STREAM_UNKILLED, j)).generator
    scale = _tail_scale(er)
    value = np.zeros(B)
    xi = np.zeros(B)
    horizon = 0.0
    seg = params.t0
    todo = np.arange(B)
    bound = np.full(B, INF)
    while todo.size:
        if horizon + seg > params.max_horizon + 1e-12:
            raise HorizonExceeded(
                f"tail bound {float(np.max(bound[todo])):.3g} above {params.tail_tol:g} at horizon {horizon:g}")
        n = todo.size
        piece, dxi = _integrate(gen, xr, er, np.full(n, seg), np.zeros(n), -1, params)
        with np.errstate(over="ignore", invalid="ignore"):
            value[todo] += np.exp(-xi[todo]) * piece
        xi[todo] += dxi
        horizon += seg
        with np.errstate(over="ignore"):
            bound[todo] = np.exp(-xi[todo]) * scale
        todo = todo[~(bound[todo] < params.tail_tol)]
        seg = horizon  # total horizon doubles
    return np.stack([value, bound])


def _map_blocks(fn: Callable, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(a) for a in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def _blocks(n: int, size: int) -> list[int]:
    full, rest = divmod(n, size)
    return [size] * full + ([rest] if rest else [])


def _workers(params: SimParams) -> int:
    return params.workers if params.workers else default_workers()


# ---------------------------------------------------------------------------
# public batch API


def killed_functional_batch(xi, eta, q: float, n: int, seed: int,
                            params: SimParams = SimParams(), scenario_id: str = "") -> SampleBatch:
    """``n`` samples of ``int_0^tau exp(-xi_{s-}) d eta_s`` with ``tau ~ Exp(q)``."""
    if not q > 0:
        raise ParameterError("killing rate must be positive")
    _check_n(n)
    xr, er = _recipe(xi, params), _recipe(eta, params)
    jobs = [(seed, j, B, xr, er, q, params) for j, B in enumerate(_blocks(n, params.block_size))]
    vals = np.concatenate(_map_blocks(_job_killed, jobs, _workers(params)))
    return SampleBatch(vals, scenario_id, seed, params.provenance(), "killed", {"q": q})


def fixed_t_batch(xi, eta, t: float, n: int, seed: int,
                  params: SimParams = SimParams(), scenario_id: str = "") -> SampleBatch:
    """``n`` samples of ``int_0^t exp(-xi_{s-}) d eta_s``."""
    if not t > 0:
        raise ParameterError("horizon t must be positive")
    _check_n(n)
    xr, er = _recipe(xi, params), _recipe(eta, params)
    jobs = [(seed, j, B, xr, er, t, params) for j, B in enumerate(_blocks(n, params.block_size))]
    vals = np.concatenate(_map_blocks(_job_fixed, jobs, _workers(params)))
    return SampleBatch(vals, scenario_id, seed, params.provenance(), "fixed_t", {"t": t})


def gou_step(x0, xi, eta, q: float, t: float, seed: int, params: SimParams = SimParams(),
             key: tuple[int, ...] = ()) -> np.ndarray:
    """Evolve ``x0`` over time ``t`` by the explicit killed GOU solution.

    ``X_t = exp(-xi_t) x0 1{N(t)=0} + exp(-xi_t) int_{T(t)+}^t exp(xi_{s-}) d eta_s``
    with ``N`` Poisson of rate ``q`` and ``T(t)`` its last jump time before ``t`` (0 if none).
    """
    if not t > 0:
        raise ParameterError("step length t must be positive")
    if q < 0:
        raise ParameterError("killing rate must be >= 0")
    x0 = np.asarray(x0, dtype=float)
    xr, er = _recipe(xi, params), _recipe(eta, params)
    sizes = _blocks(x0.size, params.block_size)
    starts = np.cumsum([0] + sizes)
    jobs = [(seed, key, j, x0[starts[j]:starts[j + 1]], xr, er, q, t, params)
            for j in range(len(sizes))]
    if not jobs:
        return np.empty(0)
    return np.concatenate(_map_blocks(_job_gou, jobs, _workers(params)))


def unkilled_functional_batch(xi, eta, n: int, seed: int, params: SimParams = SimParams(),
                              scenario_id: str = "") -> SampleBatch:
    """``int_0^inf exp(-xi_{s-}) d eta_s`` by horizon doubling.

    Each sample stops once ``exp(-xi_H) * scale < tail_tol``, ``scale`` being a
    crude size of ``eta``'s increments; :class:`HorizonExceeded` is raised if some
    sample has not met the bound by ``max_horizon``.
    """
    _check_n(n)
    xr, er = _recipe(xi, params), _recipe(eta, params)
    jobs = [(seed, j, B, xr, er, params) for j, B in enumerate(_blocks(n, params.block_size))]
    out = np.concatenate(_map_blocks(_job_unkilled, jobs, _workers(params)), axis=1)
    return SampleBatch(out[0], scenario_id, seed, params.provenance(), "unkilled",
                       {"tail_bound": float(out[1].max())})


def killed_functional_sample(xi, eta, q: float, rng: RngStream, params: SimParams = SimParams()) -> float:
    gen = rng.generator
    xr, er = _recipe(xi, params), _recipe(eta, params)
    tau = gen.exponential(1.0 / q, 1)
    val, _ = _integrate(gen, xr, er, tau, np.zeros(1), -1, params)
    return float(val[0])


def fixed_t_functional_sample(xi, eta, t: float, rng: RngStream, params: SimParams = SimParams()) -> float:
    gen = rng.generator
    xr, er = _recipe(xi, params), _recipe(eta, params)
    val, _ = _integrate(gen, xr, er, np.array([float(t)]), np.zeros(1), -1, params)
    return float(val[0])


def unkilled_functional_sample(xi, eta, rng: RngStream, params: SimParams = SimParams()) -> tuple[float, float]:
    xr, er = _recipe(xi, params), _recipe(eta, params)
    seed = rng.seed
    out = _job_unkilled((seed, hash(rng.key) & 0x7FFFFFFF, 1, xr, er, params))
    return float(out[0, 0]), float(out[1, 0])


def fixed_point_residual(xi, eta, q: float, t: float, n: int, seed: int,
                         params: SimParams = SimParams(), z: np.ndarray | None = None) -> float:
    """KS distance between ``Z`` and one explicit GOU step applied to ``Z``.

    ``Z`` defaults to a killed-functional batch; pass ``z`` to test another input law.
    """
    from .verify import ks_statistic

    if t < 0:
        raise ParameterError("t must be >= 0")
    if z is None:
        z = killed_functional_batch(xi, eta, q, n, seed, params).values
    if t == 0:
        return 0.0
    out = gou_step(z, xi, eta, q, t, seed, params, key=(1,))
    return ks_statistic(z, out)


def _check_n(n: int):
    if n < 1:
        raise ParameterError("sample count must be >= 1")


# ---------------------------------------------------------------------------
# single paths


@dataclass
class PathRealization:
    """Events of one joint path of ``(xi, eta)`` on ``[0, horizon]`` and a killing time.

    ``times`` are sorted node times starting at 0 (grid nodes, jumps, horizon);
    ``xi_jump``/``eta_jump`` give the jump sizes at each node and
    ``xi_normals`` the standard normals driving each cell's Gaussian increment.
    """

    horizon: float
    tau: float
    times: np.ndarray
    xi_jump: np.ndarray
    eta_jump: np.ndarray
    xi_normals: np.ndarray | None
    eta_normal: float | None
    xi_recipe: SimRecipe
    eta_recipe: SimRecipe

    def events(self) -> list[tuple[float, float, str]]:
        out = []
        for t, x, e in zip(self.times, self.xi_jump, self.eta_jump):
            if x != 0:
                out.append((float(t), float(x), "xi"))
            if e != 0:
                out.append((float(t), float(e), "eta"))
        return out

    def xi_values(self) -> np.ndarray:
        """``xi`` right after each node."""
        dt = np.diff(self.times)
        inc = self.xi_recipe.drift_rate * dt + self.xi_jump[1:]
        if self.xi_normals is not None:
            inc = inc + math.sqrt(self.xi_recipe.diffusive_variance) * np.sqrt(dt) * self.xi_normals
        return np.concatenate([[0.0], np.cumsum(inc)])


def simulate_path(xi, eta, horizon: float, rng: RngStream, params: SimParams = SimParams(),
                  q: float = 0.0) -> PathRealization:
    """One joint path; ``tau ~ Exp(q)`` is drawn first (``inf`` when ``q = 0``)."""
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    gen = rng.generator
    tau = float(gen.exponential(1.0 / q)) if q > 0 else INF
    xr, er = _recipe(xi, params), _recipe(eta, params)
    blk = _draw_block(gen, xr, er, np.array([float(horizon)]), np.zeros(1), params.h, params.force_grid)
    return PathRealization(float(horizon), tau, blk.times[0], blk.xi_jump[0], blk.eta_jump[0],
                           None if blk.xi_normals is None else blk.xi_normals[0],
                           None if blk.eta_normals is None else float(blk.eta_normals[0]), xr, er)


def _with_extra_nodes(path: PathRealization, nodes) -> PathRealization:
    """Insert jump-free nodes; only valid when ``xi`` has no Gaussian part."""
    if path.xi_normals is not None:
        raise ParameterError("extra nodes would change the Gaussian increments")
    nodes = np.asarray([x for x in nodes if 0 < x < path.horizon], dtype=float)
    t = np.concatenate([path.times, nodes])
    order = np.argsort(t, kind="stable")
    pad = np.zeros(nodes.size)
    return replace(path, times=t[order],
                   xi_jump=np.concatenate([path.xi_jump, pad])[order],
                   eta_jump=np.concatenate([path.eta_jump, pad])[order])


def evaluate_path(path: PathRealization, upper: float | None = None, lower: float = 0.0,
                  sign: int = -1, grid: float | None = None) -> float:
    """``int_lower^upper exp(sign xi_{s-}) d eta_s`` on a stored path.

    ``grid`` inserts additional jump-free nodes at multiples of ``grid`` (finite-variation
    ``xi`` only); the result must not change.
    """
    upper = path.horizon if upper is None else upper
    p = path
    extra = [lower, upper]
    if grid:
        extra += list(np.arange(grid, path.horizon, grid))
        p = _with_extra_nodes(path, extra)
    elif path.xi_normals is None:
        p = _with_extra_nodes(path, extra)
    keep = p.times <= upper
    blk = _Block(p.times[keep][None, :], p.xi_jump[keep][None, :], p.eta_jump[keep][None, :],
                 None if p.xi_normals is None else p.xi_normals[None, : keep.sum() - 1],
                 None if p.eta_normal is None else np.array([p.eta_normal]))
    val, _ = _evaluate(blk, p.xi_recipe, p.eta_recipe, np.array([float(lower)]), sign)
    return float(val[0])


def evaluate_killed_path(path: PathRealization) -> float:
    """``int_0^horizon exp(-xi~_{s-}) d eta_s`` where ``xi~`` jumps to ``+inf`` at ``tau``.

    Written independently of the block kernel: an explicit loop over cells.
    Requires a finite-variation ``xi`` without Gaussian part and an ``eta`` without
    Gaussian part.
    """
    if path.xi_normals is not None or path.eta_normal is not None:
        raise ParameterError("cemetery evaluator handles finite-variation paths only")
    p = _with_extra_nodes(path, [path.tau]) if path.tau < path.horizon else path
    xr, er = p.xi_recipe, p.eta_recipe
    total = 0.0
    x = 0.0
    for i in range(1, p.times.size):
        t0, t1 = p.times[i - 1], p.times[i]
        if t0 >= p.tau:
            break  # exp(-xi~) vanishes from tau on
        dt = t1 - t0
        beta = xr.drift_rate
        if er.drift_rate != 0:
            y = -beta * dt
            factor = math.expm1(y) / y if y != 0 else 1.0
            total += er.drift_rate * math.exp(-x) * dt * factor
        x_minus = x + beta * dt
        if p.eta_jump[i] != 0:
            total += p.eta_jump[i] * math.exp(-x_minus)
        x = x_minus + p.xi_jump[i]
    return total

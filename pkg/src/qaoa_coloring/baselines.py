"""Classical baselines: TabuCol on colorings and simulated annealing on QUBOs."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numba
import numpy as np

from .graphlib import Graph, generate_er, problem_volume, validate_coloring
from .hamiltonian import ColoringInstance, Encoding, encode_onehot, to_qubo


@dataclass
class TabuConfig:
    tabu_tenure: int = 7
    max_moves: int = 10_000
    seed: int = 0
    time_budget: Optional[float] = None  # seconds

    def __post_init__(self):
        if self.tabu_tenure < 1:
            raise ValueError("tabu_tenure must be at least 1")


@dataclass
class SaConfig:
    sweeps: int = 1000
    beta_initial: float = 0.1
    beta_final: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.beta_initial < self.beta_final:
            raise ValueError("need 0 < beta_initial < beta_final")
        if self.sweeps < 1:
            raise ValueError("sweeps must be at least 1")


def tabu_color(g: Graph, k: int, cfg: Optional[TabuConfig] = None) -> tuple[tuple[int, ...], int]:
    """TabuCol local search for a k-coloring with few monochromatic edges.

    Moves recolor one conflicted node. After a move the pair (node, old color)
    stays tabu for ``tabu_tenure + U{0..3}`` moves unless the move would beat
    the best conflict count seen so far. Returns the best assignment found and
    its conflict count.
    """
    cfg = cfg or TabuConfig()
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = np.random.default_rng(cfg.seed)
    n = g.n
    adj = g.neighbors()
    colors = rng.integers(0, k, size=n)
    # gamma[v, c]: neighbours of v currently colored c
    gamma = np.zeros((n, k), dtype=np.int64)
    for u, v in g.edges:
        gamma[u, colors[v]] += 1
        gamma[v, colors[u]] += 1
    conflicts = int(sum(colors[u] == colors[v] for u, v in g.edges))
    best, best_colors = conflicts, colors.copy()
    tabu_until = np.zeros((n, k), dtype=np.int64)
    deadline = None if cfg.time_budget is None else time.perf_counter() + cfg.time_budget
    nodes = np.arange(n)

    for move in range(cfg.max_moves):
        if best == 0 or k == 1:
            break
        if deadline is not None and time.perf_counter() > deadline:
            break
        own = gamma[nodes, colors]
        conf = np.flatnonzero(own > 0)
        delta = gamma[conf] - own[conf, None]
        delta[np.arange(conf.size), colors[conf]] = np.iinfo(np.int64).max
        allowed = (tabu_until[conf] <= move) | (conflicts + delta < best)
        masked = np.where(allowed, delta, np.iinfo(np.int64).max)
        lowest = masked.min()
        if lowest == np.iinfo(np.int64).max:
            r = rng.integers(conf.size)
            v = conf[r]
            new = (colors[v] + 1 + rng.integers(k - 1)) % k
            d = int(delta[r, new])
        else:
            rows, cols = np.nonzero(masked == lowest)
            pick = rng.integers(rows.size)
            v, new, d = conf[rows[pick]], cols[pick], int(lowest)
        old = colors[v]
        tabu_until[v, old] = move + cfg.tabu_tenure + rng.integers(0, 4)
        for w in adj[v]:
            gamma[w, old] -= 1
            gamma[w, new] += 1
        colors[v] = new
        conflicts += d
        if conflicts < best:
            best, best_colors = conflicts, colors.copy()

    return tuple(int(c) for c in best_colors), best


@numba.njit(cache=True)
def _anneal(q, x, betas, uniforms, order):
    n = x.size
    field = q @ x
    energy = x @ field
    best = energy
    best_x = x.copy()
    for s in range(betas.size):
        beta = betas[s]
        for t in range(n):
            i = order[s, t]
            sign = 1.0 - 2.0 * x[i]
            delta = sign * (q[i, i] + 2.0 * (field[i] - q[i, i] * x[i]))
            if delta <= 0.0 or uniforms[s, t] < np.exp(-beta * delta):
                x[i] += sign
                field += sign * q[:, i]
                energy += delta
                if energy < best:
                    best = energy
                    best_x[:] = x
    return best_x


def simulated_annealing(q: np.ndarray, offset: float = 0.0,
                        cfg: Optional[SaConfig] = None) -> tuple[tuple[int, ...], float]:
    """Single-spin-flip Metropolis annealing of ``x @ q @ x + offset``.

    Inverse temperature follows a geometric schedule from ``beta_initial`` to
    ``beta_final`` over ``sweeps`` sweeps, each visiting every variable once in
    random order. Returns the best bitstring seen and its energy.
    """
    cfg = cfg or SaConfig()
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError("QUBO matrix must be square")
    q = 0.5 * (q + q.T)
    n = q.shape[0]
    rng = np.random.default_rng(cfg.seed)
    x = rng.integers(0, 2, size=n).astype(np.float64)
    if n == 0:
        return (), float(offset)
    betas = np.geomspace(cfg.beta_initial, cfg.beta_final, cfg.sweeps)
    uniforms = rng.random((cfg.sweeps, n))
    order = np.argsort(rng.random((cfg.sweeps, n)), axis=1)
    best = _anneal(q, x, betas, uniforms, order)
    bits = tuple(int(round(b)) for b in best)
    xb = np.array(bits, dtype=np.float64)
    return bits, float(xb @ q @ xb + offset)


def anneal_coloring(g: Graph, k: int, cfg: Optional[SaConfig] = None) -> tuple[tuple[Optional[int], ...], int]:
    """Color ``g`` by annealing its one-hot QUBO; returns (assignment, total errors)."""
    inst = ColoringInstance(g, k, Encoding.ONEHOT)
    q, offset = to_qubo(encode_onehot(inst))
    bits, _ = simulated_annealing(q, offset, cfg)
    assignment = inst.decoder().decode(bits)
    return assignment, validate_coloring(g, assignment, k).total_errors


@dataclass
class SweepRow:
    k: int
    n: int
    p: float
    connectivity: float
    trials: int
    successes: int
    mean_conflicts: float
    mean_time_ms: float

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else float("nan")

    @property
    def volume(self) -> float:
        return problem_volume(self.n, self.k, self.p)


SWEEP_COLUMNS = ("k", "n", "p", "connectivity", "trials", "successes", "mean_conflicts", "mean_time_ms", "volume")


def _trial_seeds(seed: int, k: int, n: int, p: float, trials: int) -> list[tuple[int, int]]:
    key = [seed, k, n, int(round(p * 1_000_000))]
    ss = np.random.SeedSequence(key)
    return [tuple(int(s) for s in child.generate_state(2)) for child in ss.spawn(trials)]


def sweep_point(n: int, k: int, p: float, trials: int, solver: str = "tabu", seed: int = 0,
                tabu: Optional[TabuConfig] = None, sa: Optional[SaConfig] = None) -> SweepRow:
    """Color ``trials`` fresh G(n, p) graphs and count the error-free results."""
    if solver not in ("tabu", "sa"):
        raise ValueError(f"unknown solver {solver!r}; choose 'tabu' or 'sa'")
    tabu = tabu or TabuConfig()
    sa = sa or SaConfig()
    successes, errors, elapsed = 0, [], []
    for graph_seed, solver_seed in _trial_seeds(seed, k, n, p, trials):
        g = generate_er(n, p, graph_seed)
        t0 = time.perf_counter()
        if solver == "tabu":
            assignment, err = tabu_color(g, k, TabuConfig(tabu.tabu_tenure, tabu.max_moves, solver_seed,
                                                          tabu.time_budget))
        else:
            assignment, err = anneal_coloring(g, k, SaConfig(sa.sweeps, sa.beta_initial, sa.beta_final,
                                                             solver_seed))
        elapsed.append(1e3 * (time.perf_counter() - t0))
        errors.append(err)
        successes += err == 0
    return SweepRow(k, n, p, p * n, trials, successes,
                    float(np.mean(errors)) if errors else float("nan"),
                    float(np.mean(elapsed)) if elapsed else float("nan"))


def threshold_sweep(k: int, connectivities: Iterable[float], n: int, trials: int, solver: str = "tabu",
                    seed: int = 0, tabu: Optional[TabuConfig] = None,
                    sa: Optional[SaConfig] = None) -> list[SweepRow]:
    """Success rate of ``solver`` on G(n, c/n) graphs for each average connectivity ``c``."""
    rows = []
    for c in connectivities:
        p = min(1.0, c / n)
        row = sweep_point(n, k, p, trials, solver, seed, tabu, sa)
        rows.append(row)
    return rows


def sweep_csv(rows: Sequence[SweepRow], include_time: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([r.k, r.n, repr(r.p), repr(r.connectivity), r.trials, r.successes,
                    repr(r.mean_conflicts), f"{r.mean_time_ms:.3f}" if include_time else "0",
                    repr(round(r.volume, 12))])
    return buf.getvalue()

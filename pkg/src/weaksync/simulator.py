"""Closed-loop simulation of agents running the adaptive protocol.

Every agent obeys ``x_i' = A x_i + B u_i`` with ``u_i = -rho_i K zeta_i`` and
``rho_i' = zeta_i' M zeta_i`` where ``zeta = (L kron I) x``.
"""
from __future__ import annotations

import csv
import secrets
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
from scipy.spatial.distance import pdist

from . import _kernel
from ._errors import IntegrationError  # noqa: F401  (re-exported)
from .control import AgentModel, NotStabilizableError, protocol_gain, solve_care, stabilizability_check
from .graph import WeightedDigraph, build_laplacian


class ConfigError(ValueError):
    pass


def compute_zeta(x, lap) -> np.ndarray:
    """Relative information ``zeta_i = sum_j l_ij x_j``.

    ``x`` is either stacked (length ``N*n``) or shaped ``(N, n)``; the result has
    the same layout.
    """
    lap = np.asarray(lap, dtype=float)
    x = np.asarray(x, dtype=float)
    n_agents = lap.shape[0]
    if x.ndim == 1:
        if x.size % n_agents:
            raise ValueError(f"stacked state of length {x.size} is not a multiple of N={n_agents}")
        return (lap @ x.reshape(n_agents, -1)).ravel()
    if x.shape[0] != n_agents:
        raise ValueError(f"state has {x.shape[0]} agents, Laplacian has {n_agents}")
    return lap @ x


def closed_loop_derivative(x, rho, lap, model: AgentModel, gain) -> tuple[np.ndarray, np.ndarray]:
    """Time derivative of the stacked ``(x, rho)``; ``x`` shaped ``(N, n)``."""
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    k = np.atleast_2d(gain)
    zeta = compute_zeta(x, lap)
    w = zeta @ k.T
    xdot = x @ model.A.T - rho[:, None] * (w @ model.B.T)
    rhodot = np.sum(w * w, axis=1)
    return xdot, rhodot


@dataclass
class ScenarioConfig:
    graph: WeightedDigraph
    model: AgentModel
    t_final: float
    sample_interval: float = 0.1
    x0: np.ndarray | None = None
    seed: int | None = None
    rho0: float | np.ndarray = 0.0
    rtol: float = 1e-8
    atol: float = 1e-10
    backend: str | None = None
    name: str = "scenario"

    def __post_init__(self):
        if not (self.t_final > 0):
            raise ConfigError(f"t_final must be > 0, got {self.t_final}")
        if not (self.sample_interval > 0):
            raise ConfigError(f"sample_interval must be > 0, got {self.sample_interval}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ConfigError("integrator tolerances must be > 0")
        n_agents, n = self.graph.node_count, self.model.n
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float)
            if x0.size != n_agents * n:
                raise ConfigError(f"x0 needs {n_agents}x{n} values, got {x0.size}")
            self.x0 = x0.reshape(n_agents, n)
        elif self.seed is None:
            self.seed = secrets.randbits(32)
        rho0 = np.broadcast_to(np.asarray(self.rho0, dtype=float), (n_agents,)).copy()
        if np.any(rho0 < 0) or not np.all(np.isfinite(rho0)):
            raise ConfigError("initial gains rho0 must be finite and >= 0")
        self.rho0 = rho0

    def initial_state(self) -> np.ndarray:
        if self.x0 is not None:
            return np.array(self.x0, dtype=float)
        rng = np.random.default_rng(self.seed)
        return rng.uniform(-1.0, 1.0, size=(self.graph.node_count, self.model.n))

    def sample_times(self) -> np.ndarray:
        count = int(np.floor(self.t_final / self.sample_interval + 1e-9))
        ts = np.arange(count + 1) * self.sample_interval
        if self.t_final - ts[-1] > 1e-9 * self.t_final:
            ts = np.append(ts, self.t_final)
        else:
            ts[-1] = self.t_final
        return ts


@dataclass
class SimulationResult:
    t: np.ndarray
    x: np.ndarray  # (S, N, n)
    zeta: np.ndarray  # (S, N, n)
    rho: np.ndarray  # (S, N)
    laplacian: np.ndarray
    gain: np.ndarray
    adaptation: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def zeta_norm(self) -> np.ndarray:
        return np.linalg.norm(self.zeta, axis=2)

    @property
    def n_agents(self) -> int:
        return self.x.shape[1]

    def disagreement(self, nodes=None) -> np.ndarray:
        """Per-sample max pairwise ``||x_j - x_l||`` over ``nodes`` (all by default)."""
        xs = self.x if nodes is None else self.x[:, list(nodes), :]
        if xs.shape[1] < 2:
            return np.zeros(xs.shape[0])
        return np.array([pdist(frame).max() for frame in xs])

    def inputs(self) -> np.ndarray:
        """Reconstruct ``u_i = -rho_i K zeta_i``; shape ``(S, N, m)``."""
        return -self.rho[:, :, None] * (self.zeta @ self.gain.T)

    def window_mask(self, window: float) -> np.ndarray:
        if not (0 < window <= 0.5):
            raise ValueError(f"trailing window fraction must be in (0, 0.5], got {window}")
        t0, t1 = self.t[0], self.t[-1]
        return self.t >= t1 - window * (t1 - t0) - 1e-12 * max(1.0, abs(t1))

    def write_csv(self, path) -> None:
        n_agents, n = self.x.shape[1:]
        header = ["t"]
        header += [f"x[{i}.{c}]" for i in range(n_agents) for c in range(n)]
        header += [f"zeta_norm[{i}]" for i in range(n_agents)]
        header += [f"rho[{i}]" for i in range(n_agents)]
        zn = self.zeta_norm
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for s in range(self.t.size):
                row = [self.t[s], *self.x[s].ravel(), *zn[s], *self.rho[s]]
                writer.writerow([repr(float(v)) for v in row])


def _kernel_rhs(kernel, lap, model: AgentModel, k):
    csr = scipy.sparse.csr_matrix(lap)
    csr.sort_indices()
    return kernel.ClosedLoop(
        csr.indptr.astype(np.int64), csr.indices.astype(np.int64), csr.data, lap.shape[0], model.A, model.B, k
    )


def simulate(cfg: ScenarioConfig) -> SimulationResult:
    stab = stabilizability_check(cfg.model)
    if not stab:
        raise NotStabilizableError(stab.witness)
    lap = build_laplacian(cfg.graph)
    sol = solve_care(cfg.model)
    k, m = protocol_gain(sol, cfg.model)
    kernel = _kernel.get(cfg.backend)
    rhs = _kernel_rhs(kernel, lap, cfg.model, k)

    x0 = cfg.initial_state()
    y0 = np.concatenate([x0.ravel(), cfg.rho0])
    ts = cfg.sample_times()
    started = time.perf_counter()
    ys, stats = kernel.integrate(rhs, y0, ts, cfg.rtol, cfg.atol, cfg.sample_interval)
    stats = dict(stats, backend=kernel.BACKEND, wall_time_s=time.perf_counter() - started)

    n_agents, n = cfg.graph.node_count, cfg.model.n
    x = ys[:, : n_agents * n].reshape(ts.size, n_agents, n)
    rho = ys[:, n_agents * n:]
    zeta = np.einsum("ij,sjc->sic", lap, x)
    return SimulationResult(
        t=ts, x=x, zeta=zeta, rho=rho, laplacian=lap, gain=k, adaptation=m, stats=stats
    )

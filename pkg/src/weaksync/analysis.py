"""Post-processing verdicts on simulation results and numerical lemma checks."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .graph import (
    BetaMatrix,
    CondensationDecomposition,
    WeightedDigraph,
    condense,
    has_directed_spanning_tree,
)
from .simulator import SimulationResult

DEFAULT_WINDOW = 0.1
DEFAULT_ZETA_TOL = 1e-3
DEFAULT_SYNC_TOL = 1e-2
DEFAULT_GROWTH_TOL = 1e-3


class PrerequisiteError(RuntimeError):
    pass


class NotStronglyConnectedError(ValueError):
    pass


@dataclass
class Check:
    passed: bool
    evidence: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.passed)


def _trailing(r: SimulationResult, window: float) -> np.ndarray:
    mask = r.window_mask(window)
    if mask.sum() < 1:
        raise ValueError("trailing window contains no samples")
    return mask


def check_network_stability(r: SimulationResult, tol: float = DEFAULT_ZETA_TOL, window: float = DEFAULT_WINDOW) -> Check:
    mask = _trailing(r, window)
    zn = r.zeta_norm
    worst = float(zn[mask].max())
    return Check(worst <= tol, {"trailing_max_zeta_norm": worst, "final_max_zeta_norm": float(zn[-1].max()), "tol": tol})


def check_rho_bounded(r: SimulationResult, growth_tol: float = DEFAULT_GROWTH_TOL, window: float = DEFAULT_WINDOW) -> Check:
    """Bounded means each ``rho_i`` grows by at most ``growth_tol * (1 + rho_i)`` over the window."""
    mask = _trailing(r, window)
    idx = np.flatnonzero(mask)
    final = r.rho[-1]
    growth = r.rho[-1] - r.rho[idx[0]]
    ratio = growth / (1.0 + final)
    return Check(
        bool(np.all(ratio <= growth_tol)),
        {
            "final_rho": final.tolist(),
            "trailing_growth": growth.tolist(),
            "worst_relative_growth": float(ratio.max()),
            "growth_tol": growth_tol,
        },
    )


def check_global_sync(r: SimulationResult, tol: float = DEFAULT_SYNC_TOL, window: float = DEFAULT_WINDOW) -> Check:
    mask = _trailing(r, window)
    dis = r.disagreement()
    return Check(
        float(dis[mask].max()) <= tol,
        {"trailing_max_disagreement": float(dis[mask].max()), "final_disagreement": float(dis[-1]), "tol": tol},
    )


def check_bicomponent_sync(
    r: SimulationResult, d: CondensationDecomposition, tol: float = DEFAULT_SYNC_TOL, window: float = DEFAULT_WINDOW
) -> list[Check]:
    if d.node_count != r.n_agents:
        raise ValueError("decomposition does not match the simulated network")
    mask = _trailing(r, window)
    out = []
    for comp in d.basic_components:
        worst = float(r.disagreement(comp)[mask].max())
        out.append(Check(worst <= tol, {"nodes": list(comp), "trailing_max_disagreement": worst, "tol": tol}))
    return out


def component_centroids(r: SimulationResult, d: CondensationDecomposition) -> np.ndarray:
    """Per-sample centroid of every basic bicomponent, shape ``(S, k, n)``."""
    return np.stack([r.x[:, list(c), :].mean(axis=1) for c in d.basic_components], axis=1)


def check_beta_limits(
    r: SimulationResult,
    d: CondensationDecomposition,
    beta: BetaMatrix,
    tol: float = DEFAULT_SYNC_TOL,
    window: float = DEFAULT_WINDOW,
    zeta_tol: float = DEFAULT_ZETA_TOL,
    sync_tol: float = DEFAULT_SYNC_TOL,
) -> Check:
    """Distance of each non-basic agent from its predicted convex combination of centroids."""
    if not check_network_stability(r, zeta_tol, window):
        raise PrerequisiteError("beta limits need network stability, which failed")
    failing = [c.evidence["nodes"] for c in check_bicomponent_sync(r, d, sync_tol, window) if not c]
    if failing:
        raise PrerequisiteError(f"basic bicomponents not synchronized: {failing}")
    mask = _trailing(r, window)
    if not beta.nodes:
        return Check(True, {"distances": {}, "tol": tol})
    pred = np.einsum("jk,skc->sjc", beta.values, component_centroids(r, d))
    dist = np.linalg.norm(r.x[:, list(beta.nodes), :] - pred, axis=2)[mask].max(axis=0)
    distances = {int(node): float(v) for node, v in zip(beta.nodes, dist)}
    return Check(bool(np.all(dist <= tol)), {"distances": distances, "max_distance": float(dist.max()), "tol": tol})


@dataclass
class SyncReport:
    network_stable: Check
    rho_bounded: Check
    global_sync: Check
    per_bicomponent_sync: list[Check]
    beta_check: Check | None
    spanning_tree: bool
    notes: list[str] = field(default_factory=list)

    @property
    def sync_implies_stability(self) -> bool:
        """Synchronization must imply network stability."""
        return (not self.global_sync.passed) or self.network_stable.passed

    @property
    def spanning_tree_consistent(self) -> bool:
        """With a spanning tree, network stability must give synchronization."""
        return not (self.spanning_tree and self.network_stable.passed and not self.global_sync.passed)

    def to_dict(self) -> dict:
        out = {
            "network_stable": asdict(self.network_stable),
            "rho_bounded": asdict(self.rho_bounded),
            "global_sync": asdict(self.global_sync),
            "per_bicomponent_sync": [asdict(c) for c in self.per_bicomponent_sync],
            "beta_check": None if self.beta_check is None else asdict(self.beta_check),
            "spanning_tree": self.spanning_tree,
            "sync_implies_stability": self.sync_implies_stability,
            "spanning_tree_consistent": self.spanning_tree_consistent,
            "notes": list(self.notes),
        }
        return out


def sync_report(
    r: SimulationResult,
    d: CondensationDecomposition,
    beta: BetaMatrix,
    zeta_tol: float = DEFAULT_ZETA_TOL,
    sync_tol: float = DEFAULT_SYNC_TOL,
    growth_tol: float = DEFAULT_GROWTH_TOL,
    window: float = DEFAULT_WINDOW,
) -> SyncReport:
    stable = check_network_stability(r, zeta_tol, window)
    notes = []
    try:
        beta_check = check_beta_limits(r, d, beta, sync_tol, window, zeta_tol, sync_tol)
    except PrerequisiteError as exc:
        beta_check = None
        notes.append(f"beta check skipped: {exc}")
    return SyncReport(
        network_stable=stable,
        rho_bounded=check_rho_bounded(r, growth_tol, window),
        global_sync=check_global_sync(r, sync_tol, window),
        per_bicomponent_sync=check_bicomponent_sync(r, d, sync_tol, window),
        beta_check=beta_check,
        spanning_tree=has_directed_spanning_tree(d),
        notes=notes,
    )


# --- numerical lemma checks ------------------------------------------------


def _graph_from_laplacian(lap: np.ndarray) -> WeightedDigraph:
    adj = -np.array(lap, dtype=float)
    np.fill_diagonal(adj, 0.0)
    adj[adj < 0] = 0.0
    return WeightedDigraph.from_adjacency(adj)


def left_eigenvector_weights(lap) -> np.ndarray:
    """Positive ``alpha`` with ``alpha' L = 0``, scaled so ``max alpha = 1``."""
    lap = np.asarray(lap, dtype=float)
    if condense(_graph_from_laplacian(lap)).bicomponents.__len__() != 1:
        raise NotStronglyConnectedError("left eigenvector weights need a strongly connected graph")
    if lap.shape[0] == 1:
        return np.ones(1)
    ns = scipy.linalg.null_space(lap.T, rcond=1e-10)
    if ns.shape[1] != 1:
        raise NotStronglyConnectedError(f"left null space has dimension {ns.shape[1]}, expected 1")
    alpha = ns[:, 0]
    alpha = alpha / alpha[np.argmax(np.abs(alpha))]
    if np.any(alpha <= 0):
        raise NotStronglyConnectedError("left null vector is not strictly positive")
    # one refinement solve: alpha' L = 0 with alpha[argmax] = 1 fixed
    j = int(np.argmax(alpha))
    keep = [i for i in range(lap.shape[0]) if i != j]
    sub = lap[np.ix_(keep, keep)].T
    rest = np.linalg.solve(sub, -lap[j, keep])
    refined = np.ones(lap.shape[0])
    refined[keep] = rest
    return refined / refined.max()


@dataclass
class HCertificate:
    gamma: float
    kernel_dim: int
    min_eig_S: float
    certificate_min_eig: float
    psd: bool
    passed: bool


def _complement_basis(n: int) -> np.ndarray:
    return scipy.linalg.null_space(np.ones((1, n)))


def verify_H_inequality(lap, alpha, tol: float = 1e-9) -> HCertificate:
    """Largest ``gamma`` with ``HL + L'H >= 3 gamma L'L`` for ``H = diag(alpha)``."""
    lap = np.asarray(lap, dtype=float)
    n = lap.shape[0]
    h = np.diag(np.asarray(alpha, dtype=float))
    s = h @ lap + lap.T @ h
    s = 0.5 * (s + s.T)
    g = lap.T @ lap
    eig = np.linalg.eigvalsh(s)
    scale = max(1.0, float(np.abs(eig).max()))
    kernel_dim = int(np.sum(np.abs(eig) <= 1e-9 * scale))
    psd = bool(eig.min() >= -tol * scale)
    if n == 1:
        return HCertificate(np.inf, 1, float(eig.min()), 0.0, psd, psd)
    u = _complement_basis(n)
    s_red = u.T @ s @ u
    g_red = u.T @ g @ u
    try:
        gamma = float(scipy.linalg.eigh(0.5 * (s_red + s_red.T), 0.5 * (g_red + g_red.T), eigvals_only=True)[0]) / 3.0
    except np.linalg.LinAlgError:
        return HCertificate(float("nan"), kernel_dim, float(eig.min()), float("nan"), psd, False)
    cert = u.T @ (s - 3.0 * gamma * g) @ u
    cert_min = float(np.linalg.eigvalsh(0.5 * (cert + cert.T)).min())
    passed = psd and kernel_dim == 1 and gamma > 0 and cert_min >= -tol
    return HCertificate(gamma, kernel_dim, float(eig.min()), cert_min, psd, passed)


def q_rho(rho, alpha) -> np.ndarray:
    """``rho^{-1} (H rho - mu h h') rho^{-1}`` with ``mu = 1 / sum(alpha_i / rho_i)``."""
    rho = np.asarray(rho, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if rho.shape != alpha.shape or rho.ndim != 1:
        raise ValueError("rho and alpha must be vectors of equal length")
    if np.any(rho <= 0) or np.any(alpha <= 0):
        raise ValueError("rho and alpha must be strictly positive")
    w = alpha / rho
    mu = 1.0 / w.sum()
    q = np.diag(w) - mu * np.outer(w, w)
    return 0.5 * (q + q.T)


# --- randomized suites used by the CLI and acceptance tests -----------------


def lemma_suite_for_laplacian(lap) -> dict:
    alpha = left_eigenvector_weights(lap)
    residual = float(np.abs(alpha @ lap).max())
    cert = verify_H_inequality(lap, alpha)
    return {
        "alpha": alpha.tolist(),
        "alpha_residual": residual,
        "alpha_ok": residual <= 1e-10 and bool(np.all(alpha > 0)),
        "gamma": cert.gamma,
        "kernel_dim": cert.kernel_dim,
        "min_eig_S": cert.min_eig_S,
        "certificate_min_eig": cert.certificate_min_eig,
        "H_ok": cert.passed,
    }


def q_rho_trials(count: int, rng, max_n: int = 8) -> dict:
    """Randomized monotonicity and kernel checks of ``q_rho``."""
    rng = np.random.default_rng(rng)
    mono_fail = kernel_fail = 0
    worst_mono = worst_kernel = 0.0
    for _ in range(count):
        n = int(rng.integers(2, max_n + 1))
        alpha = rng.uniform(0.1, 1.0, n)
        rho = rng.uniform(0.1, 10.0, n)
        rho2 = rho + rng.uniform(0.0, 10.0, n) * (rng.random(n) < 0.7)
        z = rng.normal(size=n)
        q1, q2 = q_rho(rho, alpha), q_rho(rho2, alpha)
        gap = float(z @ q1 @ z - z @ q2 @ z)
        worst_mono = min(worst_mono, gap)
        if gap < -1e-10:
            mono_fail += 1
        for q in (q1, q2):
            k = float(np.abs(q @ np.ones(n)).max())
            worst_kernel = max(worst_kernel, k)
            if k > 1e-12:
                kernel_fail += 1
    return {
        "trials": count,
        "monotonicity_violations": mono_fail,
        "worst_monotonicity_gap": worst_mono,
        "kernel_violations": kernel_fail,
        "worst_kernel_residual": worst_kernel,
    }

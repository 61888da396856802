"""ALM outer loop with a CCCP inner solver and backtracking gradient descent.

Each outer loop minimizes the augmented Lagrangian over F at fixed
multipliers (CCCP handles the concave discrimination term by linearizing it
and solving the convex surrogate with gradient descent), then applies the
standard multiplier updates

    Lambda1 <- max(0, Lambda1 - sigma F)
    Lambda2 <- Lambda2 - sigma (F 1_c - 1_n)
    sigma   <- min(rho sigma, 1e8)

until successive F iterates stop moving or the loop budget runs out. The
solved F is read out row-wise by argmax into hard labels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import KnnGraph
from .labelspace import LabelCodec
from .objective import (
    SIGMA_CAP,
    AlmState,
    ObjectiveParams,
    cccp_gradient,
    lagrangian,
    linearized_objective,
)

_STEP_UNDERFLOW = 1e-16


class SolverDivergenceError(RuntimeError):
    """Raised when the objective turns non-finite during a solve."""


@dataclass
class SolverConfig:
    """Knobs of the solve; defaults follow the reference parameterization.

    gd_grad_tol and tau0 left as None are resolved at run time: the gradient
    tolerance scales as 1e-6 * sqrt(n*c), and the initial stepsize comes
    from a curvature bound 1 / (2 (2 lam_max(L) + 2 alpha + sigma + 2 beta)).
    """

    alpha: float = 1000.0
    beta: float = 0.01
    K: int = 5
    theta: float | str = "auto"
    rho: float = 1.1
    sigma0: float = 1.0
    sigma_cap: float = SIGMA_CAP
    t_max: int = 20
    eps0: float = 1e-6
    loop_max: int = 40
    eps1: float = 1e-4
    gd_max_iters: int = 200
    gd_grad_tol: float | None = None
    tau0: float | None = None
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5

    def __post_init__(self):
        if self.rho <= 1:
            raise ValueError(f"rho must exceed 1, got {self.rho}")
        if not 0 < self.sigma0 <= self.sigma_cap:
            raise ValueError(
                f"sigma0 must be in (0, {self.sigma_cap:g}], got {self.sigma0}"
            )
        for name in ("eps0", "eps1", "armijo_c"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must be in (0, 1)")
        for name in ("gd_grad_tol", "tau0"):
            v = getattr(self, name)
            if v is not None and not (0 < v < np.inf):
                raise ValueError(f"{name} must be finite and positive")

    def params(self) -> ObjectiveParams:
        return ObjectiveParams(alpha=self.alpha, beta=self.beta)

    def resolved_grad_tol(self, n: int, c: int) -> float:
        if self.gd_grad_tol is not None:
            return self.gd_grad_tol
        return 1e-6 * np.sqrt(n * c)

    def resolved_tau0(self, graph: KnnGraph, sigma: float) -> float:
        if self.tau0 is not None:
            return self.tau0
        bound = graph.lap_norm_bound()
        return 1.0 / (2.0 * (2.0 * bound + 2.0 * self.alpha + sigma
                             + 2.0 * self.beta))


@dataclass
class TraceRow:
    """One outer-loop record for the convergence trace CSV."""

    loop: int
    delta_f: float
    sigma: float
    lagrangian: float
    rowsum_resid: float
    min_entry: float

    def astuple(self):
        return (self.loop, self.delta_f, self.sigma, self.lagrangian,
                self.rowsum_resid, self.min_entry)


TRACE_HEADER = "loop,delta_f,sigma,lagrangian,rowsum_resid,min_entry"


@dataclass
class SolverReport:
    """Solved label matrix with its disambiguation and convergence record."""

    F_star: np.ndarray
    labels: np.ndarray       # 1-based, argmax per row (smallest index on ties)
    onehot: np.ndarray
    trace: list[TraceRow]
    rowsum_resid: float      # max_i |sum_j F*_ij - 1|
    min_entry: float
    loops_used: int
    converged: bool

    def trace_rows(self):
        """Rows for CSV emission, one per outer loop."""
        return [row.astuple() for row in self.trace]


def write_trace_csv(report: SolverReport, path) -> None:
    with open(path, "w") as f:
        f.write(TRACE_HEADER + "\n")
        for loop, delta, sigma, lagr, resid, mn in report.trace_rows():
            f.write(f"{loop},{delta:.12g},{sigma:.12g},{lagr:.12g},"
                    f"{resid:.12g},{mn:.12g}\n")


def gd_minimize(F_init: np.ndarray, F_t: np.ndarray, state: AlmState,
                graph: KnnGraph, codec: LabelCodec, cfg: SolverConfig,
                history: list[float] | None = None) -> np.ndarray:
    """Minimize the linearized objective by Armijo-backtracked descent.

    A step tau*g is accepted when it decreases the surrogate by at least
    armijo_c * tau * ||g||^2; tau shrinks geometrically otherwise, and after
    an accepted step the next trial looks one backtrack factor further.
    Stops on a small gradient, the iteration budget, or stepsize underflow.
    When history is given, the surrogate value at every accepted iterate
    (including the start) is appended.
    """
    p = cfg.params()
    grad_tol = cfg.resolved_grad_tol(*F_init.shape)
    tau0 = cfg.resolved_tau0(graph, state.sigma)
    tau_cap = tau0 / _STEP_UNDERFLOW
    F = F_init.copy()
    value = linearized_objective(F, F_t, state, graph, codec, p)
    if history is not None:
        history.append(value)
    trial = tau0
    for _ in range(cfg.gd_max_iters):
        g = cccp_gradient(F, F_t, state, graph, codec, p)
        gnorm2 = float(np.sum(g * g))
        if np.sqrt(gnorm2) <= grad_tol:
            break
        tau = trial
        while True:
            F_new = F - tau * g
            new_value = linearized_objective(F_new, F_t, state, graph, codec, p)
            if new_value <= value - cfg.armijo_c * tau * gnorm2:
                break
            tau *= cfg.backtrack_factor
            if tau < _STEP_UNDERFLOW:
                warnings.warn("gradient step underflow; returning current "
                              "iterate", stacklevel=2)
                return F
        F, value = F_new, new_value
        if history is not None:
            history.append(value)
        # optimistic restart: look a bit further than the accepted step
        trial = min(tau / cfg.backtrack_factor, tau_cap)
    return F


def cccp_minimize(state: AlmState, graph: KnnGraph, codec: LabelCodec,
                  cfg: SolverConfig,
                  history: list[float] | None = None) -> np.ndarray:
    """Minimize the Lagrangian at fixed multipliers, starting from state.F.

    Each iteration re-linearizes the concave term at the current iterate and
    descends the convex surrogate. Because the surrogate upper-bounds the
    Lagrangian and touches it at the linearization point, the Lagrangian is
    non-increasing across iterations. When history is given, its value at
    every iterate (including the start) is appended.
    """
    p = cfg.params()
    F = state.F.copy()
    if history is not None:
        history.append(lagrangian(replace(state, F=F), graph, codec, p))
    for _ in range(cfg.t_max):
        F_t = F
        F = gd_minimize(F_t, F_t, state, graph, codec, cfg)
        if history is not None:
            history.append(lagrangian(replace(state, F=F), graph, codec, p))
        if np.linalg.norm(F - F_t) <= cfg.eps0:
            break
    return F


def alm_fit(graph: KnnGraph, codec: LabelCodec, cfg: SolverConfig,
            cccp_histories: list[list[float]] | None = None) -> SolverReport:
    """Run the full outer loop and disambiguate the result.

    Starts from the feasible, unbiased F = Y with zero multipliers. Stops
    when the Frobenius change between outer iterates drops to eps1 or after
    loop_max loops. cccp_histories, when given, collects the per-loop inner
    Lagrangian sequences (used to audit descent).
    """
    if graph.n == 0 or codec.n == 0:
        raise ValueError("cannot fit an empty graph")
    if graph.n != codec.n:
        raise ValueError(
            f"graph has {graph.n} nodes but codec encodes {codec.n} examples"
        )
    p = cfg.params()
    state = AlmState(
        F=codec.Y.copy(),
        lambda1=np.zeros_like(codec.Y),
        lambda2=np.zeros(codec.n),
        sigma=cfg.sigma0,
    )
    trace: list[TraceRow] = []
    converged = False
    for loop in range(1, cfg.loop_max + 1):
        F_prev = state.F
        history: list[float] | None = [] if cccp_histories is not None else None
        F = cccp_minimize(state, graph, codec, cfg, history=history)
        if cccp_histories is not None:
            cccp_histories.append(history)
        if not np.all(np.isfinite(F)):
            raise SolverDivergenceError(f"non-finite iterate at loop {loop}")
        sigma_used = state.sigma
        value = lagrangian(replace(state, F=F), graph, codec, p)
        if not np.isfinite(value):
            raise SolverDivergenceError(f"non-finite objective at loop {loop}")

        state.lambda1 = np.maximum(0.0, state.lambda1 - state.sigma * F)
        r = F.sum(axis=1) - 1.0
        state.lambda2 = state.lambda2 - state.sigma * r
        state.sigma = min(cfg.rho * state.sigma, cfg.sigma_cap)
        state.F = F

        delta = float(np.linalg.norm(F - F_prev))
        trace.append(TraceRow(
            loop=loop,
            delta_f=delta,
            sigma=sigma_used,
            lagrangian=value,
            rowsum_resid=float(np.max(np.abs(r))),
            min_entry=float(F.min()),
        ))
        if delta <= cfg.eps1:
            converged = True
            break

    F_star = state.F
    labels = np.argmax(F_star, axis=1) + 1
    onehot = np.zeros_like(F_star)
    onehot[np.arange(F_star.shape[0]), labels - 1] = 1.0
    return SolverReport(
        F_star=F_star,
        labels=labels,
        onehot=onehot,
        trace=trace,
        rowsum_resid=float(np.max(np.abs(F_star.sum(axis=1) - 1.0))),
        min_entry=float(F_star.min()),
        loops_used=len(trace),
        converged=converged,
    )

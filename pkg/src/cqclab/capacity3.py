"""Three-user math: shifted-binomial channel law, noisy information ceiling,
and the background-rate-dependent capacity.

With a Bernoulli(r_p) background user sharing the queue, the count a probe
window of length k reveals is the encoder's count plus independent
Bin(k, r_p) noise. The per-slot information ceiling i_tilde(gamma, k, r_p)
is (max H(Y) - H(Bin(k, r_p))) / k over mean-constrained inputs; the capacity
mixes two adjacent window lengths under the heavy-traffic budget.

The inner maximization (max output entropy over a simplex slice) is smooth
and strictly concave, solved by a log-barrier Newton path with an LP duality
gap certificate below 1e-9 nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .dist import Pmf, binomial_pmf, entropy, solve_tilt, tilted_pmf

LN2 = math.log(2.0)

GAP_TOL = 1e-9  # nats; certified suboptimality of the inner maximization
MAX_ITERS = 10_000
_MU_STAGES = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 5e-13)

TABLE_STEP = 2e-3  # gamma resolution of the interpolation tables
GRID_STEP = 1e-3  # (alpha, gamma1) scan resolution, as in the two-user solver


class InfeasibleError(ValueError):
    """No (alpha, gamma1, gamma2, tau) satisfies the rate budget."""


@dataclass(frozen=True)
class ChannelMatrix:
    """Conditional law of the observed count Y given the encoder count X.

    Row x is Bin(tau, r_p) shifted by x, so the output alphabet is
    {0, ..., 2*tau}.
    """

    tau: int
    r_p: float
    rows: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rows, dtype=float)
        if r.shape != (self.tau + 1, 2 * self.tau + 1):
            raise ValueError(f"rows must be ({self.tau + 1}, {2 * self.tau + 1})")
        if np.any(np.abs(r.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("every channel row must sum to 1")
        r = r.copy()
        r.flags.writeable = False
        object.__setattr__(self, "rows", r)


@dataclass(frozen=True)
class ITildeValue:
    gamma: float
    k: int
    r_p: float
    bits_per_slot: float
    maximizing_input: Pmf

    def __post_init__(self):
        if self.bits_per_slot < -1e-12:
            raise ValueError("information ceiling cannot be negative")
        if abs(self.maximizing_input.mean() - self.k * self.gamma) > 1e-8:
            raise ValueError("maximizing input violates its mean constraint")


@dataclass(frozen=True)
class CapacityResult3:
    r_p: float
    capacity_bits_per_slot: float
    alpha: float
    gamma1: float
    gamma2: float
    tau_star: int
    constraint_residual: float
    per_tau: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.constraint_residual > 1e-8:
            raise ValueError(
                f"constraint residual {self.constraint_residual:.3e} exceeds 1e-8"
            )
        if self.tau_star < 1:
            raise ValueError("tau_star must be >= 1")


def channel_matrix(tau: int, r_p: float) -> ChannelMatrix:
    """Build the shifted-binomial channel for a window of length tau."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    noise = binomial_pmf(tau, r_p).probs
    rows = np.zeros((tau + 1, 2 * tau + 1))
    for x in range(tau + 1):
        rows[x, x : x + tau + 1] = noise
    return ChannelMatrix(tau=tau, r_p=r_p, rows=rows)


def output_mean_check(input_pmf: Pmf, tau: int, r_p: float) -> float:
    """Mean of the output law input * Bin(tau, r_p).

    By linearity this must equal mean(input) + tau * r_p; the identity is
    asserted in the test suite rather than here.
    """
    if input_pmf.k != tau:
        raise ValueError(f"input must live on {{0..{tau}}}")
    py = np.convolve(input_pmf.probs, binomial_pmf(tau, r_p).probs)
    return float(np.arange(py.size) @ py)


def _entropy_nats(p: np.ndarray) -> float:
    nz = p[p > 1e-300]
    return float(-(nz * np.log(nz)).sum())


def _lp_gap(g: np.ndarray, p: np.ndarray, m: float) -> float:
    """Linearized suboptimality bound max over the slice of <g, q - p>.

    The vertices of {q >= 0, sum q = 1, mean q = m} are two-point mixtures
    on (i, j) with i <= m <= j, so the LP maximum is explicit.
    """
    k = p.size - 1
    idx = np.arange(k + 1)
    lo = idx[idx <= m]
    hi = idx[idx >= m]
    I, J = np.meshgrid(lo, hi, indexing="ij")
    span = np.where(J > I, J - I, 1)
    vals = np.where(J > I, ((J - m) * g[I] + (m - I) * g[J]) / span, g[I])
    return float(vals.max() - g @ p)


def _tilt_logw_to_mean(logw: np.ndarray, m: float) -> np.ndarray:
    """Exponentially tilt log-weights so the normalized pmf has mean m."""
    i = np.arange(logw.size, dtype=float)

    def pm(s):
        z = logw + s * i
        z -= z.max()
        w = np.exp(z)
        return w / w.sum()

    def f(s):
        return float(i @ pm(s)) - m

    lo, hi = -80.0, 80.0
    while f(lo) > 0 and lo > -1e5:
        lo *= 2
    while f(hi) < 0 and hi < 1e5:
        hi *= 2
    if f(lo) > 0 or f(hi) < 0:
        return pm(lo if f(lo) > 0 else hi)
    s = brentq(f, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)
    return pm(s)


class _SliceEntropySolver:
    """max H(B p) over {p >= 0, sum p = 1, mean p = m} for one (k, r_p).

    Log-barrier Newton path following: the objective is strictly concave
    (the shifted-binomial rows are linearly independent), the barrier keeps
    iterates strictly positive, and each stage's equality-constrained Newton
    system carries a residual-correction term so slightly infeasible warm
    starts are pulled back onto the constraint plane. The final iterate is
    certified by the LP gap.
    """

    def __init__(self, k: int, r_p: float):
        self.k = k
        self.r_p = r_p
        full = channel_matrix(k, r_p).rows
        self.col_mask = full.sum(axis=0) > 0
        self.B = np.ascontiguousarray(full[:, self.col_mask])
        self.x = np.arange(k + 1.0)
        self.noise_entropy_bits = entropy(binomial_pmf(k, r_p))

    def value_nats(self, p: np.ndarray) -> float:
        return _entropy_nats(np.maximum(p, 0.0) @ self.B)

    def grad_nats(self, p: np.ndarray) -> np.ndarray:
        py = np.maximum(np.maximum(p, 0.0) @ self.B, 1e-300)
        return -(self.B @ (np.log(py) + 1.0))

    def _barrier_stage(self, p: np.ndarray, m: float, mu: float, budget: list) -> np.ndarray:
        n = p.size
        p = np.maximum(p, 1e-150)  # barrier needs strict positivity (and p**2 > 0)
        A = np.vstack([np.ones(n), self.x])
        b = np.array([1.0, m])
        for _ in range(60):
            if budget[0] <= 0:
                break
            budget[0] -= 1
            py = np.maximum(p @ self.B, 1e-300)
            g = -(self.B @ (np.log(py) + 1.0)) + mu / p
            H = -(self.B / py) @ self.B.T
            H[np.diag_indices(n)] -= mu / p**2
            kkt = np.block([[H, A.T], [A, np.zeros((2, 2))]])
            rhs = np.concatenate([-g, b - A @ p])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            dp = sol[:n]
            step = float(np.abs(dp).max())
            if step < 1e-14:
                break
            t = 1.0
            neg = dp < 0
            if neg.any():
                t = min(1.0, 0.99 * float((p[neg] / -dp[neg]).min()))

            def merit(q):
                return self.value_nats(q) + mu * float(np.log(q).sum())

            base = merit(p)
            accepted = False
            for _ in range(50):
                cand = p + t * dp
                if cand.min() > 0 and merit(cand) >= base - 1e-12:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                break
            p = np.maximum(p + t * dp, 1e-150)
            if step * t < 1e-13:
                break
        return p

    def _default_starts(self, gamma: float) -> list[np.ndarray]:
        k, m = self.k, self.k * gamma
        base = tilted_pmf(k, solve_tilt(k, m).lam).probs
        uniform = np.full(k + 1, 1.0 / (k + 1))
        if gamma <= 0.5:
            unif_mix = 2 * gamma * uniform
            unif_mix[0] += 1 - 2 * gamma
        else:
            unif_mix = 2 * (1 - gamma) * uniform
            unif_mix[k] += 1 - 2 * (1 - gamma)
        endpoint = np.zeros(k + 1)
        endpoint[0], endpoint[k] = 1 - gamma, gamma
        return [
            base,
            0.99 * unif_mix + 0.01 * base,
            0.99 * endpoint + 0.01 * base,
        ]

    def solve(self, gamma: float, init: np.ndarray | None = None):
        """Returns (max entropy in bits, maximizing pmf, certified gap in nats)."""
        k = self.k
        m = k * gamma
        if gamma <= 0.0 or gamma >= 1.0 or k == 1:
            if k == 1:
                p = np.array([1.0 - gamma, gamma])
            else:
                p = np.zeros(k + 1)
                p[0 if gamma <= 0.0 else k] = 1.0
            return self.value_nats(p) / LN2, p, 0.0
        if init is not None:
            q = np.maximum(np.asarray(init, dtype=float), 1e-300)
            starts = [_tilt_logw_to_mean(np.log(q), m)]
        else:
            starts = [_tilt_logw_to_mean(np.log(np.maximum(s, 1e-300)), m)
                      for s in self._default_starts(gamma)]
        best = (-np.inf, None, np.inf)
        for p0 in starts:
            budget = [MAX_ITERS]
            p = p0
            for mu in _MU_STAGES:
                p = self._barrier_stage(p, m, mu, budget)
            gap = _lp_gap(self.grad_nats(p), p, m)
            v = self.value_nats(p)
            if v > best[0]:
                best = (v, p, gap)
        if best[2] > GAP_TOL and init is not None:
            # warm start led nowhere certifiable; redo with the full guard
            return self.solve(gamma, init=None)
        return best[0] / LN2, best[1], best[2]


_solver_cache: dict[tuple[int, float], _SliceEntropySolver] = {}


def _solver(k: int, r_p: float) -> _SliceEntropySolver:
    key = (k, float(r_p))
    if key not in _solver_cache:
        if len(_solver_cache) > 256:
            _solver_cache.clear()
        _solver_cache[key] = _SliceEntropySolver(k, r_p)
    return _solver_cache[key]


def h_check(gamma: float, k: int, r_p: float) -> tuple[float, Pmf]:
    """Maximum output entropy (bits) over inputs on {0..k} with mean k*gamma.

    The output is the input convolved with Bin(k, r_p). Solved via the
    barrier Newton path with a three-start guard (tilted, uniform-feasible
    mixture, endpoint mixture); the returned point carries an LP gap below
    1e-9 nats.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"infeasible mean: gamma={gamma} outside [0, 1]")
    bits, p, _gap = _solver(k, r_p).solve(gamma)
    return bits, Pmf(p)


def i_tilde(gamma: float, k: int, r_p: float) -> ITildeValue:
    """Per-slot information ceiling through the shifted-binomial channel."""
    bits, p = h_check(gamma, k, r_p)
    noise_bits = _solver(k, r_p).noise_entropy_bits
    return ITildeValue(
        gamma=gamma,
        k=k,
        r_p=r_p,
        bits_per_slot=max((bits - noise_bits) / k, 0.0),
        maximizing_input=p,
    )


def i_tilde_curve(gammas, k: int, r_p: float) -> np.ndarray:
    """i_tilde values (bits per slot) over an increasing gamma sweep.

    Each inner solve warm-starts from its neighbor's maximizer (re-tilted
    onto the new mean constraint), which makes dense sweeps roughly an order
    of magnitude cheaper than independent solves.
    """
    gammas = np.asarray(gammas, dtype=float)
    if gammas.ndim != 1 or (np.diff(gammas) < 0).any():
        raise ValueError("gammas must be a nondecreasing 1-D grid")
    sv = _solver(k, r_p)
    out = np.empty(len(gammas))
    prev = None
    for idx, g in enumerate(gammas):
        bits, prev, _ = sv.solve(float(g), init=prev)
        out[idx] = (bits - sv.noise_entropy_bits) / k
    return np.maximum(out, 0.0)


def _i_tilde_fast(gamma: float, k: int, r_p: float, warm: dict) -> float:
    sv = _solver(k, r_p)
    bits, p, _ = sv.solve(gamma, init=warm.get(k))
    warm[k] = p
    return max((bits - sv.noise_entropy_bits) / k, 0.0)


def solve_capacity_3user(r_p: float, tau_max: int = 8) -> CapacityResult3:
    """Capacity of the channel when a Bernoulli(r_p) background user is present.

    For tau = 1, 2, ... the solver maximizes
    alpha * i_tilde(gamma1, tau) + (1 - alpha) * i_tilde(gamma2, tau + 1)
    subject to alpha*(gamma1 + 1/tau) + (1 - alpha)*(gamma2 + 1/(tau+1))
    = 1 - r_p, stopping at the first tau whose optimum decreases. Each
    per-tau problem eliminates gamma2, scans (alpha, gamma1) on a 1e-3 grid
    against interpolated i_tilde tables, then refines on the exact objective.
    All per-tau optima are kept for audit.
    """
    if not 0.0 <= r_p < 1.0:
        raise ValueError("r_p must lie in [0, 1)")
    if tau_max < 2:
        raise ValueError("tau_max must be >= 2")
    budget = 1.0 - r_p
    feasible_taus = [t for t in range(1, tau_max) if budget >= 1.0 / (t + 1) - 1e-12]
    if not feasible_taus:
        raise InfeasibleError(
            f"rate budget {budget} cannot be met with tau <= {tau_max - 1}"
        )

    gammas = np.arange(0.0, 1.0 + TABLE_STEP / 2, TABLE_STEP)
    alphas = np.arange(0.0, 1.0, GRID_STEP)
    per_tau: dict[int, float] = {}
    best = None
    prev_val = -np.inf
    for tau in feasible_taus:
        table1 = i_tilde_curve(gammas, tau, r_p)
        table2 = i_tilde_curve(gammas, tau + 1, r_p)
        inv1, inv2 = 1.0 / tau, 1.0 / (tau + 1)

        A, G1 = np.meshgrid(alphas, gammas, indexing="ij")
        G2 = (budget - A * (G1 + inv1)) / (1.0 - A) - inv2
        ok = (G2 >= -1e-12) & (G2 <= 1.0 + 1e-12)
        obj = np.where(
            ok,
            A * np.interp(G1, gammas, table1)
            + (1.0 - A) * np.interp(np.clip(G2, 0.0, 1.0), gammas, table2),
            -np.inf,
        )
        ia, ig = np.unravel_index(int(np.argmax(obj)), obj.shape)

        warm: dict[int, np.ndarray] = {}

        def exact_neg(xv, _tau=tau, _inv1=inv1, _inv2=inv2, _warm=warm):
            a, g1 = float(xv[0]), float(xv[1])
            if not (0.0 <= a < 1.0 and 0.0 <= g1 <= 1.0):
                return np.inf
            g2 = (budget - a * (g1 + _inv1)) / (1.0 - a) - _inv2
            if not -1e-9 <= g2 <= 1.0 + 1e-9:
                return np.inf
            g2 = min(max(g2, 0.0), 1.0)
            return -(
                a * _i_tilde_fast(g1, _tau, r_p, _warm)
                + (1.0 - a) * _i_tilde_fast(g2, _tau + 1, r_p, _warm)
            )

        res = minimize(
            exact_neg,
            np.array([alphas[ia], gammas[ig]]),
            method="Nelder-Mead",
            options=dict(xatol=1e-7, fatol=1e-10, maxiter=400),
        )
        val, a_opt, g1_opt = -float(res.fun), float(res.x[0]), float(res.x[1])
        g2_opt = min(max((budget - a_opt * (g1_opt + inv1)) / (1.0 - a_opt) - inv2, 0.0), 1.0)

        # alpha = 1 pins gamma1 through the budget; gamma2 is then irrelevant
        g1_end = budget - inv1
        if 0.0 <= g1_end <= 1.0:
            end_val = i_tilde(g1_end, tau, r_p).bits_per_slot
            if end_val > val:
                val, a_opt, g1_opt, g2_opt = end_val, 1.0, g1_end, 0.0

        per_tau[tau] = val
        if best is None or val > best[0]:
            best = (val, a_opt, g1_opt, g2_opt, tau)
        if val < prev_val:
            break
        prev_val = val

    val, a_opt, g1_opt, g2_opt, tau = best
    lhs = a_opt * (g1_opt + 1.0 / tau) + (1.0 - a_opt) * (g2_opt + 1.0 / (tau + 1))
    residual = abs(lhs - budget) if a_opt < 1.0 else abs(g1_opt + 1.0 / tau - budget)
    return CapacityResult3(
        r_p=r_p,
        capacity_bits_per_slot=val,
        alpha=a_opt,
        gamma1=g1_opt,
        gamma2=g2_opt,
        tau_star=tau,
        constraint_residual=residual,
        per_tau=per_tau,
    )


def degradation_violations(
    gammas,
    ks,
    rp_grid=None,
    tolerance: float = 1e-6,
) -> list[tuple[int, float, float, float, float]]:
    """Report points where the information ceiling rises with the noise rate.

    Returns (k, gamma, r_p_low, r_p_high, increase) for every adjacent pair
    on the noise grid where i_tilde increases by more than `tolerance`.
    Such points exist: the noise is an additive count, so r_p -> 1 is again
    deterministic and the ceiling is not globally monotone.
    """
    if rp_grid is None:
        rp_grid = np.arange(0.0, 0.51, 0.05)
    out = []
    for k in ks:
        for g in gammas:
            vals = [i_tilde(float(g), int(k), float(rp)).bits_per_slot for rp in rp_grid]
            for (r1, v1), (r2, v2) in zip(zip(rp_grid, vals), zip(rp_grid[1:], vals[1:])):
                if v2 > v1 + tolerance:
                    out.append((int(k), float(g), float(r1), float(r2), v2 - v1))
    return out


@dataclass(frozen=True)
class ConcavityReport:
    """Outcome of the numerical mixed-window concavity sweep."""

    samples: int
    tau_max: int
    worst_margin: float
    worst_location: tuple[int, float, float, float]  # (k, gamma1, gamma3, r_p)
    violations: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def binomial_entropy_gap(k: int, r_p: float) -> float:
    """H(Bin(k-1)) + H(Bin(k+1)) - 2 H(Bin(k)) in bits, the noise correction
    in the mixed-window concavity inequality."""
    return (
        entropy(binomial_pmf(k - 1, r_p))
        + entropy(binomial_pmf(k + 1, r_p))
        - 2.0 * entropy(binomial_pmf(k, r_p))
    )


def concavity_margin(k: int, gamma1: float, gamma3: float, r_p: float) -> float:
    """Margin of the adjacent-window concavity inequality at one sample point.

    With alpha = (k-1)/(2k) the mixture of windows k-1 and k+1 lands on
    window k; the inequality states
    2*H_check(gamma2, k) - H_check(gamma1, k-1) - H_check(gamma3, k+1)
    + binomial_entropy_gap(k, r_p) >= 0 for gamma2 the matching mixture.
    """
    alpha = (k - 1) / (2.0 * k)
    gamma2 = alpha * gamma1 + (1.0 - alpha) * gamma3
    h2, _ = h_check(gamma2, k, r_p)
    h1, _ = h_check(gamma1, k - 1, r_p)
    h3, _ = h_check(gamma3, k + 1, r_p)
    return 2.0 * h2 - h1 - h3 + binomial_entropy_gap(k, r_p)


def validate_i_concavity(
    tau_max: int = 8,
    samples: int = 500,
    seed: int = 0,
    tolerance: float = 1e-6,
    r_p_step: float = 0.05,
) -> ConcavityReport:
    """Numerically sweep the adjacent-window concavity inequality.

    Draws `samples` random (gamma1, gamma3, r_p-from-grid) triples for every
    window length 2 <= k <= tau_max - 1 and reports the worst margin. A
    margin below -tolerance counts as a violation (reported, not raised).
    """
    if tau_max < 3:
        raise ValueError("tau_max must be >= 3")
    rng = np.random.default_rng(seed)
    rp_grid = np.arange(0.0, 1.0, r_p_step)
    worst = (np.inf, (0, 0.0, 0.0, 0.0))
    violations = 0
    total = 0
    for k in range(2, tau_max):
        g1s = rng.uniform(0.0, 1.0, size=samples)
        g3s = rng.uniform(0.0, 1.0, size=samples)
        rps = rng.choice(rp_grid, size=samples)
        alpha = (k - 1) / (2.0 * k)
        # group by r_p and sweep each group in sorted-gamma order so the
        # inner solves can be warm-started
        order = np.lexsort((alpha * g1s + (1 - alpha) * g3s, rps))
        sv_cache: dict[float, tuple] = {}
        for idx in order:
            g1, g3, rp = float(g1s[idx]), float(g3s[idx]), float(rps[idx])
            g2 = alpha * g1 + (1 - alpha) * g3
            if rp not in sv_cache:
                sv_cache = {rp: (_solver(k - 1, rp), _solver(k, rp), _solver(k + 1, rp), {})}
            s1, s2, s3, warm = sv_cache[rp]
            b2, w2, _ = s2.solve(g2, init=warm.get("m"))
            b1, w1, _ = s1.solve(g1, init=warm.get("l"))
            b3, w3, _ = s3.solve(g3, init=warm.get("r"))
            warm.update(m=w2, l=w1, r=w3)
            margin = 2 * b2 - b1 - b3 + binomial_entropy_gap(k, rp)
            total += 1
            if margin < worst[0]:
                worst = (margin, (k, g1, g3, rp))
            if margin < -tolerance:
                violations += 1
    return ConcavityReport(
        samples=total,
        tau_max=tau_max,
        worst_margin=worst[0],
        worst_location=worst[1],
        violations=violations,
        tolerance=tolerance,
    )

"""Achievability coding over the queueing channel: codebooks, probe streams,
encoding, decoding, and Monte-Carlo error measurement.

A codeword of length n splits into a first segment of alpha_slots slots
carved into windows of length tau_star and a second segment carved into
windows of length tau_star + 1. Each window holds one symbol: count i maps
to i ones followed by zeros, so the per-window packet count identifies the
symbol exactly. The decoder's probe stream puts a packet at every window
boundary; with a primed queue the observed per-interval counts equal the
encoder-plus-background counts, noiselessly in the two-user case and through
shifted-binomial noise in the three-user case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity3 import CapacityResult3, channel_matrix, i_tilde, solve_capacity_3user
from .dist import Pmf
from .fcfs import (
    BACKGROUND,
    DECODER,
    ENCODER,
    ArrivalSchedule,
    ProbeObservation,
    observe,
    simulate,
)

# two-user operating point: window mix and within-window symbol laws
ALPHA_2USER = 0.177
P1_2USER = (0.57, 0.43)
P2_2USER = (0.43, 0.325, 0.245)


class CollisionExhaustionError(RuntimeError):
    """Could not sample the requested number of distinct codewords."""


class DecodeMatchError(LookupError):
    """Observed counts match no codeword: codebook/trace inconsistency."""


class UnbufferedIntervalError(RuntimeError):
    """A probe interval ran with too little backlog; counts are unreliable."""


def admissible_alpha_slots(n: int, alpha: float, tau_star: int) -> int:
    """Nearest first-segment length to alpha*n that splits both segments into
    whole windows: alpha_slots divisible by tau_star and the remainder by
    tau_star + 1. Ties prefer the smaller value."""
    target = alpha * n
    candidates = [
        a
        for a in range(0, n + 1, tau_star if tau_star > 0 else 1)
        if (n - a) % (tau_star + 1) == 0
    ]
    if not candidates:
        raise ValueError(
            f"no admissible segment split for n={n}, tau_star={tau_star}"
        )
    return min(candidates, key=lambda a: (abs(a - target), a))


@dataclass(frozen=True)
class Codebook:
    """Message-indexed binary packet streams with their window structure."""

    n: int
    tau_star: int
    alpha_slots: int
    codewords: np.ndarray  # (M, n) of 0/1
    p1: Pmf  # symbol law on {0..tau_star} for the first segment
    p2: Pmf  # symbol law on {0..tau_star + 1} for the second segment
    seed: int

    def __post_init__(self):
        cw = np.asarray(self.codewords, dtype=np.int8)
        if cw.ndim != 2 or cw.shape[1] != self.n:
            raise ValueError("codewords must be (M, n)")
        if self.alpha_slots % self.tau_star or (self.n - self.alpha_slots) % (
            self.tau_star + 1
        ):
            raise ValueError("segment lengths must split into whole windows")
        if self.p1.k != self.tau_star or self.p2.k != self.tau_star + 1:
            raise ValueError("symbol laws must match the window lengths")
        if len({cw[i].tobytes() for i in range(cw.shape[0])}) != cw.shape[0]:
            raise ValueError("codewords must be distinct")
        if not self._windows_are_symbol_images(cw):
            raise ValueError("every window must be a count-image (ones then zeros)")
        cw.flags.writeable = False
        object.__setattr__(self, "codewords", cw)

    @property
    def M(self) -> int:
        return self.codewords.shape[0]

    @property
    def rate_bits_per_slot(self) -> float:
        return math.log2(self.M) / self.n

    def window_lengths(self) -> list[int]:
        w1 = self.alpha_slots // self.tau_star
        w2 = (self.n - self.alpha_slots) // (self.tau_star + 1)
        return [self.tau_star] * w1 + [self.tau_star + 1] * w2

    def window_counts_of(self, bits: np.ndarray) -> np.ndarray:
        a, t = self.alpha_slots, self.tau_star
        seg1 = bits[:a].reshape(-1, t).sum(axis=1) if a else np.empty(0, int)
        seg2 = bits[a:].reshape(-1, t + 1).sum(axis=1) if a < self.n else np.empty(0, int)
        return np.concatenate([seg1, seg2]).astype(np.int64)

    def all_window_counts(self) -> np.ndarray:
        a, t, n = self.alpha_slots, self.tau_star, self.n
        parts = []
        if a:
            parts.append(self.codewords[:, :a].reshape(self.M, -1, t).sum(axis=2))
        if a < n:
            parts.append(self.codewords[:, a:].reshape(self.M, -1, t + 1).sum(axis=2))
        return np.concatenate(parts, axis=1).astype(np.int64)

    def _windows_are_symbol_images(self, cw: np.ndarray) -> bool:
        a, t = self.alpha_slots, self.tau_star
        for seg, width in ((cw[:, :a], t), (cw[:, a:], t + 1)):
            if seg.size == 0:
                continue
            win = seg.reshape(cw.shape[0], -1, width)
            counts = win.sum(axis=2, keepdims=True)
            expect = (np.arange(width) < counts).astype(np.int8)
            if not np.array_equal(win, expect):
                return False
        return True


def symbol_image(count: int, width: int) -> np.ndarray:
    """Binary image of a window symbol: `count` ones then zeros."""
    if not 0 <= count <= width:
        raise ValueError("count must lie in [0, width]")
    return (np.arange(width) < count).astype(np.int8)


def _sample_distinct_codewords(
    rng: np.random.Generator,
    M: int,
    n_win1: int,
    p1: Pmf,
    n_win2: int,
    p2: Pmf,
    tau_star: int,
) -> np.ndarray:
    n = n_win1 * tau_star + n_win2 * (tau_star + 1)
    seen: set[bytes] = set()
    rows: list[np.ndarray] = []
    attempts = 0
    limit = 100 * M
    batch = max(M, 256)
    while len(rows) < M:
        if attempts >= limit:
            raise CollisionExhaustionError(
                f"could not draw {M} distinct codewords in {limit} attempts"
            )
        take = min(batch, limit - attempts)
        attempts += take
        s1 = rng.choice(tau_star + 1, size=(take, n_win1), p=p1.probs)
        s2 = rng.choice(tau_star + 2, size=(take, n_win2), p=p2.probs)
        bits = np.zeros((take, n), dtype=np.int8)
        if n_win1:
            img = (np.arange(tau_star) < s1[..., None]).astype(np.int8)
            bits[:, : n_win1 * tau_star] = img.reshape(take, -1)
        if n_win2:
            img = (np.arange(tau_star + 1) < s2[..., None]).astype(np.int8)
            bits[:, n_win1 * tau_star :] = img.reshape(take, -1)
        for row in bits:
            key = row.tobytes()
            if key not in seen:
                seen.add(key)
                rows.append(row)
                if len(rows) == M:
                    break
    return np.stack(rows)


def build_codebook_2user(n: int, M: int, delta: float = 1e-3, seed: int = 0) -> Codebook:
    """Random codebook for the noiseless two-user scheme.

    The window mix targets alpha = 0.177 - delta; first-segment bits are
    i.i.d. with P(1) = 0.43 and second-segment ternary symbols follow
    (0.43, 0.325, 0.245), mapped to 00/10/11. Collisions are resampled.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    alpha = ALPHA_2USER - delta
    a = admissible_alpha_slots(n, alpha, 1)
    rng = np.random.default_rng(seed)
    p1, p2 = Pmf(np.array(P1_2USER)), Pmf(np.array(P2_2USER))
    cw = _sample_distinct_codewords(rng, M, a, p1, (n - a) // 2, p2, 1)
    return Codebook(n=n, tau_star=1, alpha_slots=a, codewords=cw, p1=p1, p2=p2, seed=seed)


def build_codebook_3user(
    n: int,
    M: int,
    r_p: float,
    tau_max: int = 8,
    delta: float = 1e-3,
    seed: int = 0,
    capacity: CapacityResult3 | None = None,
) -> Codebook:
    """Random codebook for the noisy three-user scheme.

    The capacity solve for r_p supplies the optimal window mix
    (alpha, tau_star) and the two maximizing symbol laws; window symbols map
    to i ones followed by zeros. Pass a precomputed capacity result to skip
    the solve.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    cap = capacity if capacity is not None else solve_capacity_3user(r_p, tau_max)
    tau = cap.tau_star
    p1 = i_tilde(cap.gamma1, tau, r_p).maximizing_input
    p2 = i_tilde(cap.gamma2, tau + 1, r_p).maximizing_input
    alpha = max(cap.alpha - delta, 0.0)
    a = admissible_alpha_slots(n, alpha, tau)
    rng = np.random.default_rng(seed)
    cw = _sample_distinct_codewords(rng, M, a // tau, p1, (n - a) // (tau + 1), p2, tau)
    return Codebook(n=n, tau_star=tau, alpha_slots=a, codewords=cw, p1=p1, p2=p2, seed=seed)


@dataclass(frozen=True)
class ProbeTemplate:
    """Decoder schedule shape: a packet at every window boundary."""

    n: int
    alpha_slots: int
    tau_star: int

    def __post_init__(self):
        if self.alpha_slots % self.tau_star or (self.n - self.alpha_slots) % (
            self.tau_star + 1
        ):
            raise ValueError("template segments must split into whole windows")

    @staticmethod
    def for_codebook(cb: Codebook) -> "ProbeTemplate":
        return ProbeTemplate(n=cb.n, alpha_slots=cb.alpha_slots, tau_star=cb.tau_star)


def probe_stream(template: ProbeTemplate) -> ArrivalSchedule:
    """Deterministic probe schedule over slots 0..n-1.

    Packets sit at window starts: spacing tau_star through the first segment
    (all ones when tau_star = 1), then spacing tau_star + 1. The closing
    boundary at slot n falls outside the template; transmission runs append
    that probe explicitly.
    """
    slots = np.zeros(template.n, dtype=np.int8)
    slots[0 : template.alpha_slots : template.tau_star] = 1
    slots[template.alpha_slots : template.n : template.tau_star + 1] = 1
    return ArrivalSchedule(DECODER, slots)


def _check_observations(observations: list[ProbeObservation], cb: Codebook):
    widths = cb.window_lengths()
    if len(observations) != len(widths):
        raise DecodeMatchError(
            f"expected {len(widths)} probe intervals, got {len(observations)}"
        )
    for o, w in zip(observations, widths):
        if o.tau != w:
            raise DecodeMatchError("probe spacing does not match the codebook windows")


def decode_2user(observations: list[ProbeObservation], codebook: Codebook) -> int:
    """Exact-match decoding for the noiseless two-user channel.

    Window counts identify symbols uniquely, so the count sequence is looked
    up against the codebook; a miss means the trace and codebook disagree.
    """
    if not all(o.buffered for o in observations):
        raise UnbufferedIntervalError("an interval ran unbuffered; counts unreliable")
    _check_observations(observations, codebook)
    counts = np.array([o.y for o in observations], dtype=np.int64)
    table = codebook.all_window_counts()
    hits = np.nonzero((table == counts).all(axis=1))[0]
    if hits.size == 0:
        raise DecodeMatchError("observed counts match no codeword")
    return int(hits[0])


def decode_3user(
    observations: list[ProbeObservation], codebook: Codebook, r_p: float
) -> int:
    """Maximum-likelihood decoding through the shifted-binomial channel.

    Scores every message by the product over windows of
    P(Y = y | X = count) with X + Bin(tau, r_p) noise; ties resolve to the
    lowest message index.
    """
    if not all(o.buffered for o in observations):
        raise UnbufferedIntervalError("an interval ran unbuffered; counts unreliable")
    _check_observations(observations, codebook)
    y = np.array([o.y for o in observations], dtype=np.int64)
    counts = codebook.all_window_counts()
    tau = codebook.tau_star
    loglik = np.zeros(codebook.M)
    w1 = codebook.alpha_slots // tau
    segments = ((tau, slice(0, w1)), (tau + 1, slice(w1, counts.shape[1])))
    for width, sl in segments:
        yw = y[sl]
        if yw.size == 0:
            continue
        if yw.min() < 0 or yw.max() > 2 * width:
            raise DecodeMatchError("observed count outside the channel alphabet")
        rows = channel_matrix(width, r_p).rows
        table = np.where(rows > 0, np.log(np.maximum(rows, 1e-300)), -1e30)
        loglik += table[counts[:, sl], yw[np.newaxis, :]].sum(axis=1)
    return int(np.argmax(loglik))


@dataclass(frozen=True)
class TransmissionReport:
    messages_sent: int
    errors: int
    empirical_error_rate: float
    empirical_rate_bits_per_slot: float
    seed: int

    def __post_init__(self):
        if self.empirical_rate_bits_per_slot > 1.0 + 1e-12:
            raise ValueError("empirical rate cannot exceed 1 bit per slot")


def run_transmission(
    codebook: Codebook,
    probe: ProbeTemplate | None = None,
    background_rate: float | None = None,
    trials: int = 1000,
    seed: int = 0,
    initial_backlog: int | None = None,
) -> TransmissionReport:
    """End-to-end Monte Carlo: encode, queue, observe, decode, compare.

    Each trial draws a uniform message, runs the FCFS scheduler with the
    probe template (plus the closing boundary probe) and optional Bernoulli
    background traffic, and decodes from the probe observations - exact
    matching without background, maximum likelihood with it. The default
    backlog n + tau_star + 1 keeps every interval buffered regardless of the
    codeword; an unbuffered interval raises instead of degrading silently.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    template = probe if probe is not None else ProbeTemplate.for_codebook(codebook)
    if (template.n, template.alpha_slots, template.tau_star) != (
        codebook.n,
        codebook.alpha_slots,
        codebook.tau_star,
    ):
        raise ValueError("probe template does not match the codebook")
    n = codebook.n
    tau_max = codebook.tau_star + 1
    backlog = initial_backlog if initial_backlog is not None else n + tau_max
    if backlog < tau_max:
        raise ValueError(f"initial_backlog must be >= {tau_max}")

    probe_full = np.append(probe_stream(template).slots, np.int8(1))
    decoder = ArrivalSchedule(DECODER, probe_full)
    rng = np.random.default_rng(seed)
    errors = 0
    for _ in range(trials):
        msg = int(rng.integers(codebook.M))
        enc_bits = np.append(codebook.codewords[msg], np.int8(0))
        encoder = ArrivalSchedule(ENCODER, enc_bits)
        background = None
        if background_rate is not None:
            background = ArrivalSchedule.bernoulli(
                BACKGROUND, background_rate, n + 1, rng
            )
        trace = simulate(decoder, encoder, background, initial_backlog=backlog)
        obs = observe(trace)
        if not all(o.buffered for o in obs):
            raise UnbufferedIntervalError(
                "backlog too small: an interval ran unbuffered"
            )
        if background_rate is None:
            decoded = decode_2user(obs, codebook)
        else:
            decoded = decode_3user(obs, codebook, background_rate)
        errors += decoded != msg
    return TransmissionReport(
        messages_sent=trials,
        errors=errors,
        empirical_error_rate=errors / trials,
        empirical_rate_bits_per_slot=codebook.rate_bits_per_slot,
        seed=seed,
    )


# --- random-coding ensemble error measurement ------------------------------
#
# At rates near capacity the codebook sizes 2^(R n) are far beyond anything
# that can be materialized, but the ensemble-average error probability of
# ML decoding is still exactly computable per trial: only the true codeword
# and the channel are sampled, and the score distribution of one random
# competitor codeword factorizes over windows. Window log-likelihoods live
# on an integer lattice spanned by log(2), log(3), ... (prime factors of the
# binomial coefficients) and the count difference, so the competitor score
# distribution is an exact small-tensor convolution.

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67)


def _prime_exponents(value: int) -> dict[int, int]:
    out: dict[int, int] = {}
    v = value
    for p in _PRIMES:
        while v % p == 0:
            out[p] = out.get(p, 0) + 1
            v //= p
    if v != 1:
        raise ValueError(f"{value} has a prime factor beyond the supported table")
    return out


class _ScoreLattice:
    """Exact distribution of one random codeword's ML score given the
    observations, on the integer lattice (prime exponents, total count)."""

    def __init__(self, widths: list[int], r_p: float):
        self.r_p = r_p
        prime_set: set[int] = set()
        self.coeff_exp: dict[int, list[dict[int, int]]] = {}
        for w in set(widths):
            exps = [_prime_exponents(math.comb(w, d)) for d in range(w + 1)]
            self.coeff_exp[w] = exps
            for e in exps:
                prime_set.update(e)
        self.primes = sorted(prime_set)
        self.widths = widths
        self.beta = math.log(r_p) - math.log1p(-r_p) if 0 < r_p < 1 else 0.0

    def _coords(self, w: int, d: int) -> tuple[int, ...]:
        e = self.coeff_exp[w][d]
        return tuple(e.get(p, 0) for p in self.primes) + (d,)

    def score_value(self, coords: np.ndarray) -> float:
        v = float(coords[-1]) * self.beta
        for p, c in zip(self.primes, coords[:-1]):
            v += float(c) * math.log(p)
        return v

    def competitor_distribution(
        self, ys: np.ndarray, symbol_laws: dict[int, np.ndarray]
    ) -> tuple[np.ndarray, np.ndarray]:
        """(tensor of probabilities, base offset) over lattice coordinates.

        Mass that falls off the tensor corresponds to competitors with an
        impossible window (score -inf); it never beats the true codeword.
        """
        mins = None
        maxs = None
        per_window = []
        for w, y in zip(self.widths, ys):
            moves = []
            law = symbol_laws[w]
            for x in range(w + 1):
                d = int(y) - x
                if 0 <= d <= w and law[x] > 0:
                    moves.append((self._coords(w, d), float(law[x])))
            per_window.append(moves)
            if moves:
                lo = np.min([m[0] for m in moves], axis=0)
                hi = np.max([m[0] for m in moves], axis=0)
                mins = lo if mins is None else mins + lo
                maxs = hi if maxs is None else maxs + hi
        if mins is None:
            raise ValueError("no window admits any competitor symbol")
        shape = tuple(int(h - l) + 1 for l, h in zip(mins, maxs))
        tensor = np.zeros(shape)
        tensor[tuple(np.zeros(len(shape), dtype=int))] = 1.0
        # running origin starts at `mins`; each window shifts by move - lo
        for moves in per_window:
            if not moves:
                continue
            lo = np.min([m[0] for m in moves], axis=0)
            new = np.zeros_like(tensor)
            for coords, prob in moves:
                off = np.asarray(coords) - lo
                src = tuple(
                    slice(0, s - o if o else None) for s, o in zip(shape, off)
                )
                dst = tuple(slice(o, None) for o in off)
                new[dst] += prob * tensor[src]
            tensor = new
        return tensor, mins

    def true_coords(self, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
        total = np.zeros(len(self.primes) + 1, dtype=np.int64)
        for w, y, x in zip(self.widths, ys, xs):
            d = int(y) - int(x)
            if not 0 <= d <= w:
                raise ValueError("true codeword scored an impossible window")
            total += np.asarray(self._coords(w, d))
        return total


def _prob_correct(q_lt: float, q_eq: float, M: float) -> float:
    """P(uniformly placed true message survives M-1 i.i.d. competitors)
    under argmax decoding with lowest-index tie-breaking."""
    if M <= 1:
        return 1.0
    q_lt = min(max(q_lt, 0.0), 1.0)
    q_eq = min(max(q_eq, 0.0), 1.0 - q_lt)
    v = q_lt + q_eq  # P(competitor does not strictly beat)
    if v == 0.0:
        return 0.0
    if q_eq <= 1e-18:
        out = math.exp((M - 1) * math.log(v))
    elif q_lt == 0.0:
        out = math.exp((M - 1) * math.log(q_eq)) / M
    else:
        # (v^M - q_lt^M) / (M * q_eq), evaluated stably in the log domain
        lv = M * math.log(v)
        lr = M * (math.log(q_lt) - math.log(v))  # log((q_lt/v)^M) <= 0
        out = math.exp(lv) * (-math.expm1(lr)) / (M * q_eq)
    return min(max(out, 0.0), 1.0)


def ensemble_error_rate(
    n: int,
    M: int | float,
    r_p: float,
    trials: int,
    seed: int,
    tau_max: int = 8,
    delta: float = 1e-3,
    capacity: CapacityResult3 | None = None,
) -> TransmissionReport:
    """Random-coding ensemble error rate of the three-user scheme.

    Every trial samples a true codeword from the scheme's symbol laws, runs
    it through the FCFS scheduler against Bernoulli(r_p) background traffic,
    and computes the exact probability that ML decoding over a codebook of
    M - 1 further i.i.d. codewords fails, via the lattice distribution of a
    competitor's score. Monte Carlo averages over the true codeword and the
    channel only, so M may be astronomically large.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cap = capacity if capacity is not None else solve_capacity_3user(r_p, tau_max)
    tau = cap.tau_star
    p1 = i_tilde(cap.gamma1, tau, r_p).maximizing_input
    p2 = i_tilde(cap.gamma2, tau + 1, r_p).maximizing_input
    alpha = max(cap.alpha - delta, 0.0)
    a = admissible_alpha_slots(n, alpha, tau)
    w1, w2 = a // tau, (n - a) // (tau + 1)
    widths = [tau] * w1 + [tau + 1] * w2
    laws = {tau: p1.probs, tau + 1: p2.probs}
    lattice = _ScoreLattice(widths, r_p)

    template = ProbeTemplate(n=n, alpha_slots=a, tau_star=tau)
    probe_full = np.append(probe_stream(template).slots, np.int8(1))
    decoder = ArrivalSchedule(DECODER, probe_full)
    backlog = n + tau + 1

    rng = np.random.default_rng(seed)
    err_prob_sum = 0.0
    for _ in range(trials):
        s1 = rng.choice(tau + 1, size=w1, p=p1.probs)
        s2 = rng.choice(tau + 2, size=w2, p=p2.probs)
        xs = np.concatenate([s1, s2]).astype(np.int64)
        bits = np.zeros(n + 1, dtype=np.int8)
        pos = 0
        for x, w in zip(xs, widths):
            bits[pos : pos + int(x)] = 1
            pos += w
        encoder = ArrivalSchedule(ENCODER, bits)
        background = ArrivalSchedule.bernoulli(BACKGROUND, r_p, n + 1, rng)
        trace = simulate(decoder, encoder, background, initial_backlog=backlog)
        obs = observe(trace)
        if not all(o.buffered for o in obs):
            raise UnbufferedIntervalError("ensemble trial ran unbuffered")
        ys = np.array([o.y for o in obs], dtype=np.int64)

        tensor, origin = lattice.competitor_distribution(ys, laws)
        t_coords = lattice.true_coords(ys, xs)
        rel = t_coords - origin
        q_eq = 0.0
        if all(0 <= r < s for r, s in zip(rel, tensor.shape)):
            q_eq = float(tensor[tuple(int(r) for r in rel)])
        t_val = lattice.score_value(t_coords)
        idx_grids = np.meshgrid(
            *[np.arange(s) + o for s, o in zip(tensor.shape, origin)], indexing="ij"
        )
        values = np.zeros(tensor.shape)
        coefs = [math.log(p) for p in lattice.primes] + [lattice.beta]
        for grid, c in zip(idx_grids, coefs):
            values += grid * c
        same = np.ones(tensor.shape, dtype=bool)
        for grid, t in zip(idx_grids, t_coords):
            same &= grid == t
        q_gt = float(tensor[(values > t_val) & ~same].sum())
        q_lt = max(1.0 - q_gt - q_eq, 0.0)
        err_prob_sum += 1.0 - _prob_correct(q_lt, q_eq, float(M))

    rate = float(math.log2(M)) / n if M >= 1 else 0.0
    return TransmissionReport(
        messages_sent=trials,
        errors=round(err_prob_sum),
        empirical_error_rate=err_prob_sum / trials,
        empirical_rate_bits_per_slot=rate,
        seed=seed,
    )


# --- codebook text round-trip ----------------------------------------------

def dump_codebook(cb: Codebook) -> str:
    """Line-oriented text form: a header line then one bitstring per row."""
    header = (
        f"n={cb.n} M={cb.M} alpha_slots={cb.alpha_slots} "
        f"tau_star={cb.tau_star} seed={cb.seed} "
        f"p1={','.join(repr(float(v)) for v in cb.p1.probs)} "
        f"p2={','.join(repr(float(v)) for v in cb.p2.probs)}"
    )
    rows = ["".join(str(int(b)) for b in row) for row in cb.codewords]
    return "\n".join([header] + rows) + "\n"


def load_codebook(text: str) -> Codebook:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    fields = dict(item.split("=", 1) for item in lines[0].split())
    n, M = int(fields["n"]), int(fields["M"])
    cw = np.array(
        [[int(c) for c in line.strip()] for line in lines[1 : 1 + M]], dtype=np.int8
    )
    if cw.shape != (M, n):
        raise ValueError("codebook body does not match its header")
    return Codebook(
        n=n,
        tau_star=int(fields["tau_star"]),
        alpha_slots=int(fields["alpha_slots"]),
        codewords=cw,
        p1=Pmf(np.array([float(v) for v in fields["p1"].split(",")])),
        p2=Pmf(np.array([float(v) for v in fields["p2"].split(",")])),
        seed=int(fields["seed"]),
    )

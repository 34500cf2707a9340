"""Slot-level simulation of a deterministic, work-conserving FCFS scheduler.

Time is slotted; every user issues at most one packet per slot; the server
completes at most one packet per slot. Slot semantics: arrivals at slot t
join the queue tail in within-slot priority order (decoder first), the
head-of-line packet is served during slot t, and a packet served during
slot t departs at t + 1. A packet arriving at t with q packets ahead of it
therefore departs at t + q + 1, which makes the probe's queue-length reading
D - A - 1 exact.

Departures follow the recursion D_i = max(D_{i-1}, t_i) + 1 over packets in
FIFO order, so the whole trace is computed with vectorized prefix maxima
rather than a per-slot event loop; million-slot horizons are cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import Pmf, binomial_pmf

DECODER, ENCODER, BACKGROUND, SENTINEL = "decoder", "encoder", "background", "sentinel"
_OWNER_CODE = {SENTINEL: 0, DECODER: 1, ENCODER: 2, BACKGROUND: 3}
_OWNER_LETTER = {0: "s", 1: "d", 2: "e", 3: "b"}


class TooFewProbesError(ValueError):
    """A probe observation needs at least two decoder packets."""


@dataclass(frozen=True)
class ArrivalSchedule:
    """Binary per-slot issue pattern for one user."""

    user: str
    slots: np.ndarray

    def __post_init__(self):
        if self.user not in (DECODER, ENCODER, BACKGROUND):
            raise ValueError(f"unknown user {self.user!r}")
        s = np.asarray(self.slots)
        if s.ndim != 1:
            raise ValueError("slots must be 1-D")
        if not np.isin(s, (0, 1)).all():
            raise ValueError("at most one packet per user per slot (entries 0/1)")
        s = s.astype(np.int8)
        s.flags.writeable = False
        object.__setattr__(self, "slots", s)

    def __len__(self) -> int:
        return self.slots.size

    @staticmethod
    def bernoulli(user: str, rate: float, n: int, rng: np.random.Generator) -> "ArrivalSchedule":
        if not 0.0 <= rate <= 1.0:
            raise ValueError("rate must lie in [0, 1]")
        return ArrivalSchedule(user, (rng.random(n) < rate).astype(np.int8))


@dataclass(frozen=True)
class SchedulerTrace:
    """Per-packet (owner, arrival, departure) records in FIFO service order,
    plus the end-of-slot queue-length series."""

    owners: np.ndarray  # int codes per _OWNER_CODE
    arrivals: np.ndarray  # sentinels carry arrival -1 (pre-loaded)
    departures: np.ndarray
    queue_len: np.ndarray  # queue at end of each slot, indices 0..len-1
    horizon: int
    initial_backlog: int

    def packets_of(self, user: str) -> tuple[np.ndarray, np.ndarray]:
        """(arrival, departure) arrays of one user's packets in FIFO order."""
        mask = self.owners == _OWNER_CODE[user]
        return self.arrivals[mask], self.departures[mask]

    def queue_at_arrival(self, slot: int) -> int:
        """Queue length seen by a highest-priority arrival at `slot`
        (packets from earlier slots still present)."""
        if slot <= 0:
            return self.initial_backlog
        return int(self.queue_len[slot - 1])


@dataclass(frozen=True)
class ProbeObservation:
    tau: int
    y: int
    buffered: bool
    arrival_slot: int


def simulate(
    decoder: ArrivalSchedule,
    encoder: ArrivalSchedule,
    background: ArrivalSchedule | None = None,
    initial_backlog: int = 0,
    priority: tuple[str, ...] = (DECODER, ENCODER, BACKGROUND),
) -> SchedulerTrace:
    """Run the FCFS scheduler over the given arrival streams.

    Streams must share one length n; service continues past slot n until the
    queue drains so every packet has a departure. `initial_backlog` dummy
    packets owned by a sentinel user sit at the head of the queue at slot 0;
    they prime the queue and are never part of any probe count. Within-slot
    priority defaults to decoder > encoder > background; only the decoder's
    top priority is load-bearing, the rest is declared for determinism.
    """
    if initial_backlog < 0:
        raise ValueError("initial_backlog must be >= 0")
    if set(priority) != {DECODER, ENCODER, BACKGROUND} or priority[0] != DECODER:
        raise ValueError("priority must order decoder first and cover all users")
    streams = [decoder, encoder] + ([background] if background is not None else [])
    n = len(decoder)
    if any(len(s) != n for s in streams):
        raise ValueError("all arrival streams must have the same length")

    rank = {user: i for i, user in enumerate(priority)}
    owner_parts = [np.zeros(initial_backlog, dtype=np.int64)]
    slot_parts = [np.full(initial_backlog, -1, dtype=np.int64)]
    rank_parts = [np.full(initial_backlog, -1, dtype=np.int64)]
    for s in streams:
        t = np.nonzero(s.slots)[0].astype(np.int64)
        owner_parts.append(np.full(t.size, _OWNER_CODE[s.user], dtype=np.int64))
        slot_parts.append(t)
        rank_parts.append(np.full(t.size, rank[s.user], dtype=np.int64))
    owners = np.concatenate(owner_parts)
    slots = np.concatenate(slot_parts)
    ranks = np.concatenate(rank_parts)

    order = np.lexsort((ranks, slots))
    owners, slots = owners[order], slots[order]

    m = owners.size
    if m == 0:
        return SchedulerTrace(
            owners=owners,
            arrivals=slots,
            departures=slots.copy(),
            queue_len=np.zeros(n, dtype=np.int64),
            horizon=n,
            initial_backlog=initial_backlog,
        )
    idx = np.arange(m)
    service_start = np.maximum(slots, 0)  # sentinels are in queue from slot 0
    departures = np.maximum.accumulate(service_start - idx) + idx + 1

    length = max(n, int(departures.max()))
    arr_count = np.bincount(np.maximum(slots, 0), minlength=length)
    dep_count = np.bincount(departures, minlength=length + 1)
    # end-of-slot-u queue: arrived by u (incl. preload) minus departed by u+1
    queue_len = np.cumsum(arr_count) - np.cumsum(dep_count[1:])

    for a in (owners, slots, departures, queue_len):
        a.flags.writeable = False
    return SchedulerTrace(
        owners=owners,
        arrivals=slots,
        departures=departures,
        queue_len=queue_len,
        horizon=n,
        initial_backlog=initial_backlog,
    )


def observe(trace: SchedulerTrace, decoder_id: str = DECODER) -> list[ProbeObservation]:
    """Per-interval observations between consecutive probe packets.

    For interval i: tau = A_{i+1} - A_i, the observed count
    Y = D_{i+1} - D_i - 1, and the buffered flag records whether the queue
    reading D_i - A_i - 1 was at least tau - 1 (the condition under which Y
    is exactly the count of other users' packets in the interval).
    """
    arr, dep = trace.packets_of(decoder_id)
    if arr.size < 2:
        raise TooFewProbesError("need at least two decoder packets to observe")
    taus = np.diff(arr)
    ys = np.diff(dep) - 1
    backlog = dep[:-1] - arr[:-1] - 1
    return [
        ProbeObservation(
            tau=int(t), y=int(y), buffered=bool(b >= t - 1), arrival_slot=int(a)
        )
        for t, y, b, a in zip(taus, ys, backlog, arr[:-1])
    ]


@dataclass(frozen=True)
class DriftReport:
    """Queue-stability summary from a Bernoulli-traffic run."""

    rates: tuple[float, ...]
    total_rate: float
    horizon: int
    seed: int
    final_queue: int
    max_queue: int
    mean_queue_second_half: float
    squared_increment_mean: float  # empirical K = E[(a - s)^2]
    drift_threshold: float | None  # K / (2 (1 - total_rate)) when subcritical
    drift_above_threshold: float | None
    slots_above_threshold: int


def stability_probe(
    rates: tuple[float, ...] | list[float],
    horizon: int,
    seed: int,
    initial_backlog: int = 0,
) -> DriftReport:
    """Drive the scheduler with i.i.d. Bernoulli arrivals and report drift.

    Up to three per-user rates map onto the decoder/encoder/background roles
    (the roles are interchangeable for queue-length purposes). The service
    rate is fixed at one packet per slot, so subcritical means total rate
    below 1; in that regime the report includes the empirical quadratic
    drift E[q(t+1)^2 - q(t)^2 | q(t) >= threshold] at the threshold
    K / (2 (1 - total_rate)), which queue stability requires to be negative.
    """
    rates = tuple(float(r) for r in rates)
    if not 1 <= len(rates) <= 3:
        raise ValueError("stability probe supports 1 to 3 users")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(seed)
    users = (DECODER, ENCODER, BACKGROUND)
    streams = {
        users[i]: ArrivalSchedule.bernoulli(users[i], r, horizon, rng)
        for i, r in enumerate(rates)
    }
    zeros = lambda u: ArrivalSchedule(u, np.zeros(horizon, dtype=np.int8))  # noqa: E731
    trace = simulate(
        streams.get(DECODER, zeros(DECODER)),
        streams.get(ENCODER, zeros(ENCODER)),
        streams.get(BACKGROUND),
        initial_backlog=initial_backlog,
    )
    q_end = trace.queue_len[:horizon].astype(float)
    q_start = np.concatenate([[float(initial_backlog)], q_end[:-1]])
    arrivals = sum(np.asarray(s.slots, dtype=float) for s in streams.values())
    served = np.minimum(q_start + arrivals, 1.0) > 0  # one service when busy
    inc = arrivals - served.astype(float)
    k_hat = float((inc**2).mean())

    total = sum(rates)
    threshold = k_hat / (2.0 * (1.0 - total)) if total < 1.0 else None
    drift = None
    above = 0
    if threshold is not None:
        sq_inc = q_end**2 - q_start**2
        mask = q_start >= threshold
        above = int(mask.sum())
        if above:
            drift = float(sq_inc[mask].mean())
    half = q_end[horizon // 2 :]
    return DriftReport(
        rates=rates,
        total_rate=total,
        horizon=horizon,
        seed=seed,
        final_queue=int(q_end[-1]),
        max_queue=int(q_end.max()),
        mean_queue_second_half=float(half.mean()),
        squared_increment_mean=k_hat,
        drift_threshold=threshold,
        drift_above_threshold=drift,
        slots_above_threshold=above,
    )


def empirical_channel_law(
    tau: int, r_p: float, intervals: int, seed: int, encoder_rate: float = 0.5
) -> Pmf:
    """Empirical law of Y - X at fixed probe spacing under Bernoulli noise.

    Probes are sent every tau slots (plus one closing probe); the encoder
    issues i.i.d. Bernoulli(encoder_rate) packets known to the harness, the
    background i.i.d. Bernoulli(r_p). The initial backlog equals the horizon,
    which pins every buffered flag, so Y - X isolates the background count
    per interval; its histogram estimates Bin(tau, r_p).
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if intervals < 1:
        raise ValueError("intervals must be >= 1")
    n = tau * intervals + 1
    rng = np.random.default_rng(seed)
    probe = np.zeros(n, dtype=np.int8)
    probe[:: tau] = 1
    decoder = ArrivalSchedule(DECODER, probe)
    encoder = ArrivalSchedule.bernoulli(ENCODER, encoder_rate, n, rng)
    background = ArrivalSchedule.bernoulli(BACKGROUND, r_p, n, rng)
    trace = simulate(decoder, encoder, background, initial_backlog=n)
    obs = observe(trace)
    assert all(o.buffered for o in obs)
    enc = np.asarray(encoder.slots)
    x = enc[: tau * intervals].reshape(intervals, tau).sum(axis=1)
    diff = np.array([o.y for o in obs]) - x
    if diff.min() < 0 or diff.max() > tau:
        raise AssertionError("buffered intervals must give Y - X within [0, tau]")
    counts = np.bincount(diff, minlength=tau + 1).astype(float)
    return Pmf(counts / counts.sum())


def total_variation(p: Pmf, q: Pmf) -> float:
    """Total-variation distance between two pmfs on the same support."""
    if p.k != q.k:
        raise ValueError("supports differ")
    return 0.5 * float(np.abs(p.probs - q.probs).sum())


def expected_channel_law(tau: int, r_p: float) -> Pmf:
    return binomial_pmf(tau, r_p)


def trace_to_csv_rows(
    trace: SchedulerTrace,
    decoder: ArrivalSchedule,
    encoder: ArrivalSchedule,
    background: ArrivalSchedule | None = None,
) -> list[tuple[int, str, str, int]]:
    """Rows (slot, arrivals_by_user, served_owner, queue_len) for CSV export.

    Covers every slot from 0 through the drain of the queue; arrival codes
    are the user initials in priority order and '-' marks an idle server.
    """
    length = trace.queue_len.size
    served = np.full(length, "-", dtype=object)
    service_slots = trace.departures - 1
    for s, owner in zip(service_slots, trace.owners):
        served[s] = _OWNER_LETTER[int(owner)]
    streams = [decoder, encoder] + ([background] if background is not None else [])
    rows = []
    for t in range(length):
        arr = "".join(
            _OWNER_LETTER[_OWNER_CODE[s.user]]
            for s in streams
            if t < len(s) and s.slots[t]
        )
        rows.append((t, arr, str(served[t]), int(trace.queue_len[t])))
    return rows

"""Markov dynamics of the branching-turnover particle system.

At each step an ordered pair (i, j) of distinct particle indices is drawn
uniformly among the n*(n-1) possibilities, an offset delta is drawn, and
particle i jumps to ``x[j] + delta``; all other particles stay put.

The module also provides the renormalised view (positions centred by the
ensemble mean and scaled by 1/sqrt(n)), the row of inter-particle distances
``D_j = xbar[0] - xbar[j]``, the reconstruction of ``xbar[0]`` from that row,
and the equivalent direct update of the distance row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .offsets import OffsetDistribution

# Draw-batch size. Randomness is consumed in per-variable batches:
# for each batch of b steps the stream yields b jumper indices, then b
# target indices, then b offsets. The batch boundaries depend only on the
# total step count, so trajectories are reproducible from the seed alone.
CHUNK = 1 << 20

INIT_KINDS = ("all_zero", "iid_gaussian", "iid_uniform")


@dataclass(frozen=True)
class SimConfig:
    """Configuration of one simulation run.

    ``burn_in=None`` resolves to ``100 * n_particles``, a conservative
    equilibration window (the one-distance marginal relaxes geometrically).
    Every ``thin``-th post-burn-in state is recorded, starting with the state
    reached at the end of burn-in.
    """

    n_particles: int
    offsets: OffsetDistribution
    steps: int
    burn_in: int | None = None
    seed: int = 0
    thin: int = 1
    init: str = "all_zero"
    init_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.n_particles < 2:
            raise ValueError(f"n_particles must be >= 2, got {self.n_particles}")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.init not in INIT_KINDS:
            raise ValueError(f"unknown init {self.init!r}; expected one of {INIT_KINDS}")

    @property
    def resolved_burn_in(self) -> int:
        return 100 * self.n_particles if self.burn_in is None else self.burn_in


@dataclass
class EnsembleState:
    """Positions of all particles at one time step."""

    time: int
    positions: np.ndarray


def draw_moves(
    rng: np.random.Generator,
    n_particles: int,
    offsets: OffsetDistribution,
    count: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``count`` moves (i, j, delta) from the stream.

    The jumper i is uniform on [0, n); the target j is uniform on the other
    n-1 indices, realised by drawing on [0, n-1) and shifting past i. This is
    the canonical consumption order of the random stream.
    """
    if n_particles < 2:
        raise ValueError(f"n_particles must be >= 2, got {n_particles}")
    ii = rng.integers(0, n_particles, size=count)
    jj = rng.integers(0, n_particles - 1, size=count)
    jj += jj >= ii
    dd = offsets.sample(rng, count)
    return ii, jj, dd


def sample_pair(n_particles: int, rng: np.random.Generator) -> tuple[int, int]:
    """Draw one ordered pair (i, j) with i != j, uniform over n*(n-1) pairs."""
    if n_particles < 2:
        raise ValueError(f"n_particles must be >= 2, got {n_particles}")
    i = int(rng.integers(0, n_particles))
    j = int(rng.integers(0, n_particles - 1))
    if j >= i:
        j += 1
    return i, j


def apply_move(positions: np.ndarray, i: int, j: int, delta: float) -> None:
    """In place: particle i jumps to positions[j] + delta."""
    positions[i] = positions[j] + delta


def step(
    state: EnsembleState, offsets: OffsetDistribution, rng: np.random.Generator
) -> EnsembleState:
    """Advance the ensemble by one move; exactly one coordinate changes."""
    n = len(state.positions)
    ii, jj, dd = draw_moves(rng, n, offsets, 1)
    new = state.positions.copy()
    apply_move(new, int(ii[0]), int(jj[0]), float(dd[0]))
    return EnsembleState(time=state.time + 1, positions=new)


def renormalise(positions: np.ndarray) -> np.ndarray:
    """Centre by the ensemble mean and scale by 1/sqrt(n); output sums to 0."""
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[-1]
    mean = positions.mean(axis=-1, keepdims=True)
    return (positions - mean) / math.sqrt(n)


def distance_row(xbar: np.ndarray) -> np.ndarray:
    """Row (xbar[0]-xbar[1], ..., xbar[0]-xbar[n-1]) of length n-1."""
    xbar = np.asarray(xbar, dtype=float)
    return xbar[..., :1] - xbar[..., 1:]


def reconstruct_first(row: np.ndarray) -> float:
    """Recover xbar[0] as the sum of its distance row divided by n."""
    row = np.asarray(row, dtype=float)
    n = row.shape[-1] + 1
    return row.sum(axis=-1) / n


def step_distance_row(
    row: np.ndarray, i: int, j: int, delta_scaled: float
) -> np.ndarray:
    """Advance the distance row directly, given the move (i, j) and the
    already-scaled offset delta/sqrt(n).

    Mirrors the single-coordinate jump: with the same move sequence it
    reproduces ``distance_row(renormalise(...))`` applied to the evolving
    positions (exactly so when all quantities are dyadic).
    """
    row = np.asarray(row, dtype=float)
    new = row.copy()
    if i == 0:
        # particle 0 jumps next to j: every distance is measured from its
        # new position x[j] + delta
        d0j = row[j - 1]
        new = row - d0j + delta_scaled
        new[j - 1] = delta_scaled
    elif j == 0:
        new[i - 1] = -delta_scaled
    else:
        new[i - 1] = row[j - 1] - delta_scaled
    return new


@dataclass
class Trajectory:
    """Recorded frames of one run: raw positions at the recorded steps."""

    config: SimConfig
    times: np.ndarray
    positions: np.ndarray  # shape (n_frames, n_particles)
    _renormalised: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_frames(self) -> int:
        return self.positions.shape[0]

    def renormalised(self) -> np.ndarray:
        if self._renormalised is None:
            self._renormalised = renormalise(self.positions)
        return self._renormalised

    def distance_rows(self) -> np.ndarray:
        return distance_row(self.renormalised())

    def observable(self, name: str) -> np.ndarray:
        """Frames of the named observable: raw | positions | distances."""
        if name == "raw":
            return self.positions
        if name == "positions":
            return self.renormalised()
        if name == "distances":
            return self.distance_rows()
        raise ValueError(f"unknown observable {name!r}")


def _initial_positions(config: SimConfig, rng: np.random.Generator) -> list[float]:
    n = config.n_particles
    if config.init == "all_zero":
        return [0.0] * n
    if config.init == "iid_gaussian":
        return list(rng.standard_normal(n) * config.init_scale)
    # iid uniform with standard deviation init_scale
    half = math.sqrt(3.0) * config.init_scale
    return list(rng.uniform(-half, half, n))


def run(config: SimConfig) -> Trajectory:
    """Run the chain and record frames.

    Deterministic given the seed. The state reached after burn-in is the
    first recorded frame; afterwards every thin-th state is recorded, so a
    run with steps=0 records exactly one frame.
    """
    rng = np.random.default_rng(config.seed)
    x = _initial_positions(config, rng)
    n = config.n_particles
    burn_in = config.resolved_burn_in
    total = burn_in + config.steps
    thin = config.thin

    frames: list[list[float]] = []
    times: list[int] = []
    last_record = burn_in + (config.steps // thin) * thin
    never = total + 1  # sentinel once the recording schedule is exhausted
    record_at = burn_in
    done = 0
    if record_at == 0:
        frames.append(x.copy())
        times.append(0)
        record_at = thin if thin <= last_record else never
    while done < total:
        m = min(CHUNK, total - done)
        ii, jj, dd = draw_moves(rng, n, config.offsets, m)
        il = ii.tolist()
        jl = jj.tolist()
        dl = dd.tolist()
        pos = 0
        while pos < m:
            stop = m if record_at - done > m else record_at - done
            for t in range(pos, stop):
                x[il[t]] = x[jl[t]] + dl[t]
            pos = stop
            if done + pos == record_at:
                frames.append(x.copy())
                times.append(record_at)
                record_at = record_at + thin if record_at + thin <= last_record else never
        done += m
    return Trajectory(
        config=config,
        times=np.asarray(times, dtype=np.int64),
        positions=np.asarray(frames, dtype=float),
    )

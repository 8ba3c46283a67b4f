"""Fixed-capacity rollout storage and generalized advantage estimation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Segment:
    """A contiguous run of steps sharing one recurrent state lineage.

    Segments break at episode boundaries (hidden state reset) and at rollout
    window boundaries (carried hidden state stored in ``init_state``).
    """

    start: int
    end: int  # exclusive
    init_state: object = None


@dataclass
class RolloutBuffer:
    """Per-step training tuples for one update, plus bootstrap metadata.

    ``pre_squash`` holds the raw Gaussian samples whose tanh became the
    executed control; ``stops``/``stop_logits`` stay zero for policies
    without a stop head.  Steps from different environment instances live in
    contiguous chunks, each with its own bootstrap value at the cut point.
    """

    capacity: int
    obs_dim: int
    has_stop: bool = False
    observations: np.ndarray = field(init=False)
    pre_squash: np.ndarray = field(init=False)
    stops: np.ndarray = field(init=False)
    log_probs: np.ndarray = field(init=False)
    rewards: np.ndarray = field(init=False)
    values: np.ndarray = field(init=False)
    dones: np.ndarray = field(init=False)
    size: int = 0
    chunk_ends: list[int] = field(default_factory=list)
    chunk_bootstraps: list[float] = field(default_factory=list)
    segments: list[Segment] = field(default_factory=list)
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def __post_init__(self):
        self.observations = np.zeros((self.capacity, self.obs_dim))
        self.pre_squash = np.zeros(self.capacity)
        self.stops = np.zeros(self.capacity)
        self.log_probs = np.zeros(self.capacity)
        self.rewards = np.zeros(self.capacity)
        self.values = np.zeros(self.capacity)
        self.dones = np.zeros(self.capacity)

    @property
    def full(self) -> bool:
        return self.size == self.capacity

    def add(self, obs, pre_squash, stop, log_prob, reward, value, done) -> None:
        if self.full:
            raise RuntimeError("rollout buffer is full")
        i = self.size
        self.observations[i] = obs
        self.pre_squash[i] = pre_squash
        self.stops[i] = stop
        self.log_probs[i] = log_prob
        self.rewards[i] = reward
        self.values[i] = value
        self.dones[i] = done
        self.size += 1

    def close_chunk(self, bootstrap_value: float) -> None:
        """Mark the current fill level as an environment-chunk boundary."""
        if self.chunk_ends and self.chunk_ends[-1] == self.size:
            return
        self.chunk_ends.append(self.size)
        self.chunk_bootstraps.append(float(bootstrap_value))

    def set_bootstrap(self, value: float) -> None:
        """Single-environment convenience: one chunk covering the whole buffer."""
        self.chunk_ends = [self.size]
        self.chunk_bootstraps = [float(value)]


def compute_gae(buffer: RolloutBuffer, gamma: float, lam: float):
    """Advantages by the standard backward recursion, returns = advantages + values.

    A_t = delta_t + gamma*lam*(1 - done_t)*A_{t+1},
    delta_t = r_t + gamma*(1 - done_t)*V_{t+1} - V_t,
    with each chunk's stored bootstrap standing in for V at its cut point.
    """
    if buffer.size == 0:
        raise ValueError("cannot compute advantages on an empty buffer")
    if not buffer.full:
        raise ValueError("advantages are computed only on a full buffer")
    if not buffer.chunk_ends:
        raise ValueError("buffer has no bootstrap value; call set_bootstrap/close_chunk")
    advantages = np.zeros(buffer.size)
    start = 0
    for end, bootstrap in zip(buffer.chunk_ends, buffer.chunk_bootstraps):
        last_adv = 0.0
        for t in reversed(range(start, end)):
            non_terminal = 1.0 - buffer.dones[t]
            next_value = bootstrap if t == end - 1 else buffer.values[t + 1]
            delta = buffer.rewards[t] + gamma * next_value * non_terminal - buffer.values[t]
            last_adv = delta + gamma * lam * non_terminal * last_adv
            advantages[t] = last_adv
        start = end
    returns = advantages + buffer.values[: buffer.size]
    buffer.advantages = advantages
    buffer.returns = returns
    return advantages, returns

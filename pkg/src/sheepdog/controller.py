"""Evolvable feedforward controller for the shepherd.

The genome is a fixed-layout single-hidden-layer network (9 inputs
including bias, up to 20 hidden units behind an enable mask, 2 outputs)
plus self-adaptive crossover and mutation rates. Outputs map to a world
heading in [0, 2pi) and a speed fraction in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._jit import njit
from .geometry import TWO_PI, furthest_index, mean2
from .world import WorldParams, WorldState

N_INPUTS = 9  # four relative 2-vectors + bias
N_HIDDEN = 20
N_OUTPUTS = 2
N_WEIGHTS = N_INPUTS * N_HIDDEN + (N_HIDDEN + 1) * N_OUTPUTS  # 222
MASK_INIT_P = 0.9

__all__ = [
    "Genome",
    "ControlOutput",
    "NeuralController",
    "encode_inputs",
    "forward",
    "init_genome",
    "genome_to_text",
    "genome_from_text",
    "save_genome",
    "load_genome",
    "N_INPUTS",
    "N_HIDDEN",
    "N_OUTPUTS",
    "N_WEIGHTS",
]


class ControlOutput(NamedTuple):
    direction: float  # radians in [0, 2pi)
    speed: float  # fraction in [0, 1]


@dataclass
class Genome:
    w_ih: np.ndarray  # (9, 20) input->hidden, bias carried by input 9
    w_ho: np.ndarray  # (21, 2) hidden->output, row 20 is the output bias
    mask: np.ndarray  # (20,) bool hidden-unit enable
    cr: float  # crossover rate in [0, 1]
    mr: float  # mutation rate in [0, 1]

    def flat_weights(self) -> np.ndarray:
        """All weight genes as one (222,) vector, w_ih rows first."""
        return np.concatenate([self.w_ih.ravel(), self.w_ho.ravel()])

    @staticmethod
    def from_flat(flat: np.ndarray, mask: np.ndarray, cr: float, mr: float) -> "Genome":
        w_ih = flat[: N_INPUTS * N_HIDDEN].reshape(N_INPUTS, N_HIDDEN).copy()
        w_ho = flat[N_INPUTS * N_HIDDEN:].reshape(N_HIDDEN + 1, N_OUTPUTS).copy()
        return Genome(w_ih=w_ih, w_ho=w_ho, mask=mask.copy(), cr=float(cr), mr=float(mr))

    def copy(self) -> "Genome":
        return Genome(self.w_ih.copy(), self.w_ho.copy(), self.mask.copy(), self.cr, self.mr)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def logistic(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@njit(cache=True)
def encode_kernel(phi_x, phi_y, sig_x, sig_y, psi_x, psi_y,
                  goal_x, goal_y, length, out: np.ndarray) -> None:
    """Relative positions, each component scaled by the paddock side; bias last."""
    out[0] = (phi_x - psi_x) / length
    out[1] = (phi_y - psi_y) / length
    out[2] = (sig_x - psi_x) / length
    out[3] = (sig_y - psi_y) / length
    out[4] = (goal_x - psi_x) / length
    out[5] = (goal_y - psi_y) / length
    out[6] = (goal_x - phi_x) / length
    out[7] = (goal_y - phi_y) / length
    out[8] = 1.0


@njit(cache=True)
def forward_kernel(w_ih: np.ndarray, w_ho: np.ndarray, mask_f: np.ndarray,
                   x: np.ndarray) -> tuple[float, float]:
    """Masked logistic MLP; disabled hidden units contribute exactly zero."""
    z0 = w_ho[N_HIDDEN, 0]
    z1 = w_ho[N_HIDDEN, 1]
    for j in range(N_HIDDEN):
        if mask_f[j] != 0.0:
            s = 0.0
            for i in range(N_INPUTS):
                s += w_ih[i, j] * x[i]
            hj = logistic(s)
            z0 += w_ho[j, 0] * hj
            z1 += w_ho[j, 1] * hj
    direction = (TWO_PI * logistic(z0)) % TWO_PI
    speed = logistic(z1)
    return direction, speed


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def encode_inputs(world: WorldState, params: WorldParams) -> np.ndarray:
    """9-vector fed to the network; the furthest sheep is measured from the herd centre."""
    phi_x, phi_y = mean2(world.sheep_pos)
    idx, _ = furthest_index(world.sheep_pos, phi_x, phi_y)
    out = np.empty(N_INPUTS, dtype=np.float64)
    encode_kernel(phi_x, phi_y,
                  world.sheep_pos[idx, 0], world.sheep_pos[idx, 1],
                  world.shepherd_pos[0], world.shepherd_pos[1],
                  world.goal[0], world.goal[1], params.length, out)
    return out


def forward(genome: Genome, inputs: np.ndarray) -> ControlOutput:
    """Evaluate the network on a 9-vector of finite inputs."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.shape != (N_INPUTS,):
        raise ValueError(f"expected {N_INPUTS} inputs")
    direction, speed = forward_kernel(genome.w_ih, genome.w_ho,
                                      genome.mask.astype(np.float64), x)
    return ControlOutput(direction, speed)


def init_genome(rng: np.random.Generator) -> Genome:
    """Fresh genome: clipped standard-normal weights, mostly-on mask, uniform rates."""
    w_ih = np.clip(rng.standard_normal((N_INPUTS, N_HIDDEN)), -1.0, 1.0)
    w_ho = np.clip(rng.standard_normal((N_HIDDEN + 1, N_OUTPUTS)), -1.0, 1.0)
    mask = rng.random(N_HIDDEN) < MASK_INIT_P
    cr, mr = rng.random(2)
    return Genome(w_ih=w_ih, w_ho=w_ho, mask=mask, cr=float(cr), mr=float(mr))


class NeuralController:
    """Callable wrapper binding a genome to a paddock; world -> ControlOutput."""

    def __init__(self, genome: Genome, params: WorldParams):
        self.genome = genome
        self.params = params
        self._mask_f = genome.mask.astype(np.float64)

    def __call__(self, world: WorldState) -> ControlOutput:
        x = encode_inputs(world, self.params)
        direction, speed = forward_kernel(self.genome.w_ih, self.genome.w_ho,
                                          self._mask_f, x)
        return ControlOutput(direction, speed)


# ---------------------------------------------------------------------------
# Serialization: flat text, bit-exact round trip
# ---------------------------------------------------------------------------
#
# Line layout: 9 rows of w_ih (20 floats each), 21 rows of w_ho (2 floats
# each), the mask as a 20-char 0/1 string, then cr and mr on their own
# lines. Floats use shortest round-trip decimal form.


def genome_to_text(genome: Genome) -> str:
    lines = []
    for row in genome.w_ih:
        lines.append(" ".join(repr(float(v)) for v in row))
    for row in genome.w_ho:
        lines.append(" ".join(repr(float(v)) for v in row))
    lines.append("".join("1" if b else "0" for b in genome.mask))
    lines.append(repr(float(genome.cr)))
    lines.append(repr(float(genome.mr)))
    return "\n".join(lines) + "\n"


def genome_from_text(text: str) -> Genome:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != N_INPUTS + N_HIDDEN + 1 + 3:
        raise ValueError("malformed genome text")
    w_ih = np.array([[float(v) for v in lines[i].split()] for i in range(N_INPUTS)])
    w_ho = np.array([[float(v) for v in lines[N_INPUTS + i].split()]
                     for i in range(N_HIDDEN + 1)])
    if w_ih.shape != (N_INPUTS, N_HIDDEN) or w_ho.shape != (N_HIDDEN + 1, N_OUTPUTS):
        raise ValueError("malformed genome text")
    mask_line = lines[N_INPUTS + N_HIDDEN + 1]
    if len(mask_line) != N_HIDDEN or set(mask_line) - {"0", "1"}:
        raise ValueError("malformed mask line")
    mask = np.array([ch == "1" for ch in mask_line])
    cr = float(lines[-2])
    mr = float(lines[-1])
    return Genome(w_ih=w_ih, w_ho=w_ho, mask=mask, cr=cr, mr=mr)


def save_genome(genome: Genome, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(genome_to_text(genome))


def load_genome(path) -> Genome:
    with open(path) as fh:
        return genome_from_text(fh.read())

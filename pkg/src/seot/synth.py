"""Synthetic domain-shift benchmarks: Gaussian class blobs plus a target shift.

Class means sit on a ring in the first two coordinates with adjacent means
`class_separation` apart, and the whole constellation is offset from the
origin. The offset matters: rotations act about the coordinate origin, and a
constellation centered there would be (nearly) rotation-symmetric, turning a
rotation "shift" into a label permutation no unsupervised method could undo.
With the offset, a rotation displaces every class blob by a comparable
translation-like motion, which is a genuine covariate shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .measures import LabeledDomain, uniform_measure
from .seeding import substream

ROTATE = "rotate"
TRANSLATE = "translate"
SCALE = "scale"
NOISE = "noise"

# Constellation center distance from the origin, in units of class_separation.
OFFSET_FACTOR = 1.5


@dataclass(frozen=True)
class SynthSpec:
    """Generator settings for one multi-source benchmark instance.

    `noise_sigma` is the isotropic std of every class blob. Rotations whose
    angle approaches the angular spacing of the class ring turn the shift
    into a label permutation that no unsupervised method can undo, so keep
    the rotation below half that spacing (90 degrees for two classes).
    """

    n_classes: int = 2
    samples_per_class: int = 100
    d: int = 2
    class_separation: float = 4.0
    noise_sigma: float = 0.5
    n_sources: int = 3
    shift_kind: str = ROTATE
    shift_param: float | tuple[float, ...] = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.n_classes, self.samples_per_class, self.d, self.n_sources) < 1:
            raise InvalidInput("all counts must be >= 1")
        if self.noise_sigma <= 0:
            raise InvalidInput("noise_sigma must be > 0")
        if self.shift_kind not in (ROTATE, TRANSLATE, SCALE, NOISE):
            raise InvalidInput(f"unknown shift kind {self.shift_kind!r}")
        if self.shift_kind == ROTATE and self.d < 2:
            raise InvalidInput("rotation needs at least 2 feature dimensions")
        if self.shift_kind == TRANSLATE:
            v = np.atleast_1d(np.asarray(self.shift_param, dtype=np.float64))
            if v.shape[0] != self.d:
                raise InvalidInput(
                    f"translation vector has {v.shape[0]} entries for d={self.d}"
                )
            object.__setattr__(self, "shift_param", tuple(float(x) for x in v))


def class_means(spec: SynthSpec) -> np.ndarray:
    """Mean of each class blob; unit-variance noise is added around these."""
    means = np.zeros((spec.n_classes, spec.d))
    offset = OFFSET_FACTOR * spec.class_separation
    if spec.d == 1:
        means[:, 0] = offset + spec.class_separation * np.arange(spec.n_classes)
        return means
    means[:, 0] = offset
    if spec.n_classes == 1:
        return means
    # ring with adjacent chord length equal to class_separation
    radius = spec.class_separation / (2.0 * np.sin(np.pi / spec.n_classes))
    angles = 2.0 * np.pi * np.arange(spec.n_classes) / spec.n_classes
    means[:, 0] += radius * np.cos(angles)
    means[:, 1] += radius * np.sin(angles)
    return means


def _draw_domain(spec: SynthSpec, means: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for c in range(spec.n_classes):
        noise = spec.noise_sigma * rng.standard_normal((spec.samples_per_class, spec.d))
        xs.append(means[c] + noise)
        ys.append(np.full(spec.samples_per_class, c, dtype=np.int64))
    x = np.vstack(xs)
    y = np.concatenate(ys)
    perm = rng.permutation(x.shape[0])
    return x[perm], y[perm]


def apply_shift(spec: SynthSpec, x: np.ndarray, rng) -> np.ndarray:
    """Apply the configured target shift to a sample matrix."""
    if spec.shift_kind == ROTATE:
        theta = np.deg2rad(float(spec.shift_param))
        c, s = np.cos(theta), np.sin(theta)
        out = x.copy()
        out[:, 0] = c * x[:, 0] - s * x[:, 1]
        out[:, 1] = s * x[:, 0] + c * x[:, 1]
        return out
    if spec.shift_kind == TRANSLATE:
        return x + np.asarray(spec.shift_param)
    if spec.shift_kind == SCALE:
        return x * float(spec.shift_param)
    return x + float(spec.shift_param) * rng.standard_normal(x.shape)


def generate(spec: SynthSpec) -> tuple[list[LabeledDomain], LabeledDomain]:
    """Draw the source domains and the shifted (still labeled) target."""
    rng = substream(spec.seed, "synth")
    means = class_means(spec)
    sources = []
    for _ in range(spec.n_sources):
        x, y = _draw_domain(spec, means, rng)
        sources.append(LabeledDomain(uniform_measure(x), y))
    x, y = _draw_domain(spec, means, rng)
    target = LabeledDomain(uniform_measure(apply_shift(spec, x, rng)), y)
    return sources, target

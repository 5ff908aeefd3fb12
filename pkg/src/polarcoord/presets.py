"""Named target distributions used by the CLI and the acceptance suite."""

from __future__ import annotations

import numpy as np

from .probmodel import CondDist, CoordinationSpec, FiniteDist


def _xor_noise_uxs(noise: float) -> CondDist:
    """``U = X xor S xor N`` with ``N ~ Bern(noise)``, table ``[x, s, u]``."""
    t = np.empty((2, 2, 2))
    for x in range(2):
        for s in range(2):
            u = x ^ s
            t[x, s, u] = 1 - noise
            t[x, s, 1 - u] = noise
    return CondDist(t, (2, 2))


def _copy_u() -> CondDist:
    # Shat = U whatever Y is
    return CondDist.deterministic((2, 2), 2, lambda u, y: u)


def bsc_scenario(flip: float = 0.1, noise: float = 0.3) -> CoordinationSpec:
    """Uniform source and input over a BSC, ``U = X xor S`` seen through extra noise, ``Shat = U``."""
    return CoordinationSpec(
        p_s=FiniteDist.bernoulli(0.5),
        p_x=FiniteDist.bernoulli(0.5),
        p_u_given_xs=_xor_noise_uxs(noise),
        p_y_given_x=CondDist.bsc(flip),
        p_shat_given_uy=_copy_u(),
    )


def noiseless(noise: float = 0.3) -> CoordinationSpec:
    """Same target as :func:`bsc_scenario` over a perfect channel ``Y = X``."""
    return CoordinationSpec(
        p_s=FiniteDist.bernoulli(0.5),
        p_x=FiniteDist.bernoulli(0.5),
        p_u_given_xs=_xor_noise_uxs(noise),
        p_y_given_x=CondDist.bsc(0.0),
        p_shat_given_uy=_copy_u(),
    )


def biased_input(p_one: float = 0.2, flip: float = 0.03, noise: float = 0.3) -> CoordinationSpec:
    """Non-uniform channel input, so the signal chain is shaped rather than uniform."""
    return CoordinationSpec(
        p_s=FiniteDist.bernoulli(0.5),
        p_x=FiniteDist.bernoulli(p_one),
        p_u_given_xs=_xor_noise_uxs(noise),
        p_y_given_x=CondDist.bsc(flip),
        p_shat_given_uy=_copy_u(),
    )


PRESETS = {
    "bsc-scenario": bsc_scenario,
    "noiseless": noiseless,
    "biased-input": biased_input,
}


def preset(name: str) -> CoordinationSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None

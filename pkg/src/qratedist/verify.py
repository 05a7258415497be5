"""Random instances and slack checks for the entropic inequalities behind the
converse bound: strong subadditivity, its four-party rearrangement,
superadditivity of coherent information over marginal channels, data
processing and positivity of entropy exchange.

Every check returns a *slack*, the amount by which the inequality holds;
negative values are violations. :func:`fuzz` draws instances from seeds
derived from ``(master seed, family, trial)``, so any instance can be
regenerated from the seed recorded in its report.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ._stiefel import random_isometry
from .channels import (
    KrausChannel,
    StinespringIsometry,
    compose,
    marginal_channel,
    reduced_channel,
    stinespring_to_kraus,
)
from .entropics import coherent_information, entropy_exchange
from .exceptions import DimensionError
from .qmath import DensityMatrix, as_density, tensor, von_neumann_entropy
from . import serialize

__all__ = [
    "FuzzConfig",
    "SlackReport",
    "FAMILIES",
    "DEFAULT_TRIALS",
    "random_density_matrix",
    "random_channel",
    "check_ssa_instance",
    "check_entanglement_form",
    "check_marginal_superadditivity",
    "check_block_superadditivity",
    "check_data_processing",
    "fuzz",
    "generate_instance",
    "evaluate_instance",
    "instance_to_json",
    "recheck_bundle",
]


def random_density_matrix(d: int, seed=None, rank: int | None = None, dims: Sequence[int] | None = None) -> DensityMatrix:
    """Hilbert-Schmidt random state ``G G^dagger / tr(G G^dagger)``.

    ``G`` is ``d x rank`` with i.i.d. standard complex Gaussian entries
    (``rank = d`` by default, the Hilbert-Schmidt measure). ``seed`` may be
    an integer or a ``numpy`` Generator.
    """
    rng = np.random.default_rng(seed)
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return DensityMatrix(0.5 * (m + m.conj().T), dims)


def random_channel(d_in: int, d_out: int, env_dim: int, seed=None) -> KrausChannel:
    """Channel from a Haar-random isometry ``d_in -> d_out (x) env``."""
    if env_dim < 1:
        raise ValueError("env_dim must be at least 1")
    if d_out * env_dim < d_in:
        raise DimensionError(f"no isometry from {d_in} into {d_out} x {env_dim}")
    rng = np.random.default_rng(seed)
    v = random_isometry(d_out * env_dim, d_in, rng)
    return stinespring_to_kraus(StinespringIsometry(v, d_out, env_dim))


def _entropies(rho: DensityMatrix, subsets: Sequence[Sequence[int]]) -> list[float]:
    return [von_neumann_entropy(rho.reduce(s)) for s in subsets]


def check_ssa_instance(rho_abc) -> float:
    """``S(AB) + S(BC) - S(ABC) - S(B)`` for a state with three declared factors."""
    rho = as_density(rho_abc)
    if len(rho.dims) != 3:
        raise DimensionError(f"need three tensor factors, got dims {rho.dims}")
    s_ab, s_bc, s_b = _entropies(rho, [(1, 2), (2, 3), (2,)])
    return s_ab + s_bc - von_neumann_entropy(rho) - s_b


def check_entanglement_form(rho) -> float:
    """Marginal-over-joint entropy excess of (R1Q1 : R2Q2) minus that of (Q1 : Q2).

    Factors are ordered R1, Q1, R2, Q2.
    """
    rho = as_density(rho)
    if len(rho.dims) != 4:
        raise DimensionError(f"need four tensor factors, got dims {rho.dims}")
    s_r1q1, s_r2q2, s_q1, s_q2, s_q1q2 = _entropies(rho, [(1, 2), (3, 4), (2,), (4,), (2, 4)])
    return (s_r1q1 + s_r2q2 - von_neumann_entropy(rho)) - (s_q1 + s_q2 - s_q1q2)


def _as_bipartite(ch: KrausChannel, d1: int, d2: int) -> KrausChannel:
    if ch.dim_in != d1 * d2:
        raise DimensionError(f"joint channel expects {ch.dim_in}, sources give {d1} x {d2}")
    if len(ch.dims_in) == 2:
        return ch
    if ch.dim_out != ch.dim_in:
        raise DimensionError("joint channel output has no declared two-factor structure")
    return ch.with_dims((d1, d2), (d1, d2))


def check_marginal_superadditivity(rho1, rho2, joint_ch: KrausChannel) -> float:
    """``I_c(rho1 (x) rho2, E) - I_c(rho1, E_1) - I_c(rho2, E_2)``.

    ``E_i`` is the marginal channel on slot ``i`` with the other slot fed
    its own source state.
    """
    rho1, rho2 = as_density(rho1), as_density(rho2)
    joint = _as_bipartite(joint_ch, rho1.dim, rho2.dim)
    source = DensityMatrix(tensor(rho1.matrix, rho2.matrix), (rho1.dim, rho2.dim))
    e1 = reduced_channel(joint, [rho1, rho2], 1, 2)
    e2 = reduced_channel(joint, [rho1, rho2], 2, 2)
    return (
        coherent_information(source, joint)
        - coherent_information(rho1, e1)
        - coherent_information(rho2, e2)
    )


def check_block_superadditivity(rho, block_ch: KrausChannel, n: int = 3) -> tuple[float, ...]:
    """Iterated two-system slacks for an ``n``-slot block channel on ``rho^(x)n``.

    Slot 1 is split from slots ``2..n``, then the remainder is split again,
    and so on; the slacks add up to the direct ``n``-slot slack.
    """
    rho = as_density(rho)
    d = rho.dim
    if block_ch.dim_in != d ** n:
        raise DimensionError(f"block channel acts on {block_ch.dim_in}, expected {d}^{n}")
    ch = block_ch.with_dims((d,) * n, (d,) * n) if len(block_ch.dims_in) != n else block_ch
    slacks = []
    for m in range(n, 1, -1):
        states = [rho] * m
        first = marginal_channel(ch, states, (1,))
        rest = marginal_channel(ch, states, tuple(range(2, m + 1)))
        src = DensityMatrix(tensor(*([rho.matrix] * m)), (d,) * m)
        src_rest = DensityMatrix(tensor(*([rho.matrix] * (m - 1))), (d,) * (m - 1))
        slacks.append(
            coherent_information(src, ch)
            - coherent_information(rho, first)
            - coherent_information(src_rest, rest)
        )
        ch = rest
    return tuple(slacks)


def check_data_processing(rho, e: KrausChannel, d: KrausChannel) -> float:
    """``I_c(rho, e) - I_c(rho, d o e)``."""
    rho = as_density(rho)
    return coherent_information(rho, e) - coherent_information(rho, compose(d, e))


# --- fuzzing -------------------------------------------------------------------


@dataclass(frozen=True)
class FuzzConfig:
    """Fuzz settings.

    ``trials`` is either one count for every family or a mapping from family
    name to count; families missing from a mapping use their default count.
    ``slack_floor`` applies to pure-entropy inequalities and
    ``channel_slack_floor`` to those that go through marginal channels or
    compositions.
    """

    trials: int | Mapping[str, int] | None = None
    dims: tuple[int, ...] = (2,)
    seed: int = 0
    slack_floor: float = -1e-8
    channel_slack_floor: float = -1e-7
    families: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.dims or any(d < 2 for d in self.dims):
            raise ValueError("dims must be a nonempty list of dimensions >= 2")
        counts = self.trials if isinstance(self.trials, Mapping) else {}
        if isinstance(self.trials, int) and self.trials < 1:
            raise ValueError("trials must be at least 1")
        if any(int(v) < 1 for v in counts.values()):
            raise ValueError("trials must be at least 1")
        unknown = set(counts) | set(self.families or ())
        unknown -= set(FAMILIES)
        if unknown:
            raise ValueError(f"unknown families: {sorted(unknown)}")

    def trials_for(self, family: str) -> int:
        if self.trials is None:
            return DEFAULT_TRIALS[family]
        if isinstance(self.trials, Mapping):
            return int(self.trials.get(family, DEFAULT_TRIALS[family]))
        return int(self.trials)

    def floor_for(self, family: str) -> float:
        return self.channel_slack_floor if FAMILIES[family].channel else self.slack_floor


@dataclass(frozen=True)
class SlackReport:
    inequality_name: str
    trials: int
    min_slack: float
    mean_slack: float
    worst_instance_seed: int
    violations: int
    slack_floor: float

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class _Family:
    generate: Callable[[np.random.Generator, FuzzConfig], dict]
    evaluate: Callable[[dict], float]
    channel: bool


def _pick(rng, dims, k):
    return [int(rng.choice(dims)) for _ in range(k)]


def _rand_state(rng, dims):
    d = int(np.prod(dims))
    return random_density_matrix(d, rng, rank=int(rng.integers(1, d + 1)), dims=dims)


def _rand_env(rng, d_in, d_out):
    lo = -(-d_in // d_out)
    return int(rng.integers(lo, d_in * d_out + 1))


def _gen_ssa(rng, cfg):
    return {"states": {"rho": _rand_state(rng, _pick(rng, cfg.dims, 3))}, "channels": {}}


def _gen_four(rng, cfg):
    return {"states": {"rho": _rand_state(rng, _pick(rng, cfg.dims, 4))}, "channels": {}}


def _gen_superadd(rng, cfg):
    d1, d2 = _pick(rng, cfg.dims, 2)
    d = d1 * d2
    joint = random_channel(d, d, _rand_env(rng, d, d), rng).with_dims((d1, d2), (d1, d2))
    return {
        "states": {"rho1": _rand_state(rng, [d1]), "rho2": _rand_state(rng, [d2])},
        "channels": {"joint": joint},
    }


def _gen_dp(rng, cfg):
    d0, d1, d2 = _pick(rng, cfg.dims, 3)
    return {
        "states": {"rho": _rand_state(rng, [d0])},
        "channels": {
            "e": random_channel(d0, d1, _rand_env(rng, d0, d1), rng),
            "d": random_channel(d1, d2, _rand_env(rng, d1, d2), rng),
        },
    }


def _gen_se(rng, cfg):
    d0, d1 = _pick(rng, cfg.dims, 2)
    return {
        "states": {"rho": _rand_state(rng, [d0])},
        "channels": {"e": random_channel(d0, d1, _rand_env(rng, d0, d1), rng)},
    }


def _gen_block(rng, cfg):
    d, n = 2, 3
    big = d ** n
    ch = random_channel(big, big, int(rng.integers(1, big + 1)), rng).with_dims((d,) * n, (d,) * n)
    return {"states": {"rho": _rand_state(rng, [d])}, "channels": {"block": ch}}


FAMILIES: dict[str, _Family] = {
    "strong_subadditivity": _Family(_gen_ssa, lambda i: check_ssa_instance(i["states"]["rho"]), False),
    "entanglement_form": _Family(_gen_four, lambda i: check_entanglement_form(i["states"]["rho"]), False),
    "marginal_superadditivity": _Family(
        _gen_superadd,
        lambda i: check_marginal_superadditivity(
            i["states"]["rho1"], i["states"]["rho2"], i["channels"]["joint"]
        ),
        True,
    ),
    "data_processing": _Family(
        _gen_dp,
        lambda i: check_data_processing(i["states"]["rho"], i["channels"]["e"], i["channels"]["d"]),
        True,
    ),
    "entropy_exchange": _Family(
        _gen_se, lambda i: entropy_exchange(i["states"]["rho"], i["channels"]["e"]), False
    ),
    "block_superadditivity": _Family(
        _gen_block,
        lambda i: min(check_block_superadditivity(i["states"]["rho"], i["channels"]["block"], 3)),
        True,
    ),
}

DEFAULT_TRIALS = {
    "strong_subadditivity": 1000,
    "entanglement_form": 500,
    "marginal_superadditivity": 500,
    "data_processing": 500,
    "entropy_exchange": 500,
    "block_superadditivity": 100,
}


def trial_seed(master: int, family: str, trial: int) -> int:
    fam = list(FAMILIES).index(family)
    return int(np.random.SeedSequence([int(master), fam, int(trial)]).generate_state(1)[0])


def generate_instance(family: str, seed: int, cfg: FuzzConfig = FuzzConfig()) -> dict:
    return FAMILIES[family].generate(np.random.default_rng(seed), cfg)


def evaluate_instance(family: str, instance: dict) -> float:
    return float(FAMILIES[family].evaluate(instance))


def instance_to_json(family: str, seed: int, instance: dict, slack: float) -> dict:
    return {
        "family": family,
        "seed": int(seed),
        "expected_slack": float(slack),
        "states": {k: serialize.state_to_json(v) for k, v in instance["states"].items()},
        "channels": {k: serialize.channel_to_json(v) for k, v in instance["channels"].items()},
    }


def recheck_bundle(bundle) -> tuple[float, float]:
    """Re-evaluate a stored instance; returns ``(stored slack, recomputed slack)``."""
    if not isinstance(bundle, Mapping):
        bundle = serialize.load_json(bundle)
    inst = {
        "states": {k: serialize.state_from_json(v) for k, v in bundle["states"].items()},
        "channels": {k: serialize.channel_from_json(v) for k, v in bundle["channels"].items()},
    }
    return float(bundle["expected_slack"]), evaluate_instance(bundle["family"], inst)


def fuzz(cfg: FuzzConfig = FuzzConfig(), regression_dir: str | Path | None = None) -> list[SlackReport]:
    """Run every inequality family and summarise slacks.

    With ``regression_dir`` the worst instance of each family is written
    there as a self-contained JSON bundle.
    """
    reports = []
    for name in cfg.families or tuple(FAMILIES):
        count = cfg.trials_for(name)
        floor = cfg.floor_for(name)
        slacks = np.empty(count)
        seeds = []
        for t in range(count):
            s = trial_seed(cfg.seed, name, t)
            seeds.append(s)
            slacks[t] = evaluate_instance(name, generate_instance(name, s, cfg))
        worst = int(np.argmin(slacks))
        reports.append(
            SlackReport(
                inequality_name=name,
                trials=count,
                min_slack=float(slacks[worst]),
                mean_slack=float(slacks.mean()),
                worst_instance_seed=seeds[worst],
                violations=int(np.sum(slacks < floor)),
                slack_floor=floor,
            )
        )
        if regression_dir is not None:
            inst = generate_instance(name, seeds[worst], cfg)
            bundle = instance_to_json(name, seeds[worst], inst, slacks[worst])
            serialize.atomic_write(Path(regression_dir) / f"{name}.json", json.dumps(bundle, indent=2) + "\n")
    return reports

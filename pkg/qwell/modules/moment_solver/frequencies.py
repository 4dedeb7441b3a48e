# qwell/modules/moment_solver/frequencies.py
import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from qwell.core.exceptions import InputError

Pair = Tuple[int, int]

_D0_TOL = 1e-12


@dataclass
class FrequencyEntry:
    n: int
    omega: float
    pairs: List[Pair]


@dataclass
class FrequencySet:
    """Sorted distinct frequencies lambda_k - lambda_j with the mode pairs that share each one."""
    entries: List[FrequencyEntry]
    T: float
    collisions: List[List[Pair]] = field(default_factory=list)

    def __post_init__(self):
        omegas = self.omegas
        if omegas.size and np.any(np.diff(omegas) <= 0):
            raise InputError("Frequencies must be strictly increasing")
        if not (np.isfinite(self.T) and self.T > 0):
            raise InputError(f"Horizon must be positive, got {self.T}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([e.omega for e in self.entries], dtype=float)

    @property
    def has_zero(self) -> bool:
        return bool(self.entries) and self.entries[0].omega == 0.0

    def index_of(self, pair: Pair) -> int:
        for e in self.entries:
            if tuple(pair) in e.pairs:
                return e.n
        raise InputError(f"Pair {pair} is not in the frequency set")

    def pair_map(self) -> Dict[Pair, int]:
        return {p: e.n for e in self.entries for p in e.pairs}

    def gaps(self, row: Optional[int] = None) -> np.ndarray:
        """omega_{n+1} - omega_n, over the whole set or over the entries holding a pair (row, k)."""
        if row is None:
            return np.diff(self.omegas)
        return np.diff([e.omega for e in self.entries if any(j == row for j, _ in e.pairs)])

    def with_horizon(self, T: float) -> "FrequencySet":
        return FrequencySet(entries=self.entries, T=T, collisions=self.collisions)


@dataclass
class MomentTargets:
    """d_n for every entry of a FrequencySet; d_0 real when omega_0 = 0."""
    d: np.ndarray

    def __post_init__(self):
        self.d = np.atleast_1d(np.asarray(self.d, dtype=complex))
        if not np.all(np.isfinite(self.d)):
            raise InputError("Moment targets must be finite")

    def check_against(self, freqs: FrequencySet) -> None:
        if self.d.size != len(freqs):
            raise InputError(f"{self.d.size} targets for {len(freqs)} frequencies")
        if freqs.has_zero and abs(self.d[0].imag) > _D0_TOL * max(1.0, abs(self.d[0])):
            raise InputError(f"Target at omega=0 must be real, got {self.d[0]}")

    @classmethod
    def zeros(cls, freqs: FrequencySet) -> "MomentTargets":
        return cls(np.zeros(len(freqs), dtype=complex))


def canonical_pairs(N: int, K_trunc: int) -> List[Pair]:
    """{(j, k) : j <= N, j + 1 <= k <= K_trunc} together with (N, N)."""
    pairs = [(j, k) for j in range(1, N + 1) for k in range(j + 1, K_trunc + 1)]
    pairs.append((N, N))
    return pairs


def first_row_pairs(K_trunc: int) -> List[Pair]:
    """(1, k) for k = 1..K_trunc: the frequencies lambda_k - lambda_1 removed by V_T."""
    return [(1, k) for k in range(1, K_trunc + 1)]


def build_frequency_set(N: int, K_trunc: int, T: float,
                        index_set: Union[str, Iterable[Pair]] = "canonical") -> FrequencySet:
    """Groups pairs by the exact integer k^2 - j^2 so colliding frequencies share one entry."""
    if K_trunc < N + 1:
        raise InputError(f"K_trunc={K_trunc} must be at least N+1={N + 1}")
    if isinstance(index_set, str):
        if index_set == "canonical":
            pairs = canonical_pairs(N, K_trunc)
        elif index_set == "first_row":
            pairs = first_row_pairs(K_trunc)
        else:
            raise InputError(f"Unknown index set: {index_set}")
    else:
        pairs = [tuple(int(x) for x in p) for p in index_set]

    groups: Dict[int, List[Pair]] = {}
    for j, k in pairs:
        if not (1 <= j <= K_trunc and 1 <= k <= K_trunc):
            raise InputError(f"Pair {(j, k)} outside truncation 1..{K_trunc}")
        if k < j:
            raise InputError(f"Pair {(j, k)} has negative frequency; only k >= j is stored")
        groups.setdefault(k * k - j * j, [])
        if (j, k) not in groups[k * k - j * j]:
            groups[k * k - j * j].append((j, k))

    entries = [
        FrequencyEntry(n=n, omega=float(key) * np.pi ** 2, pairs=sorted(groups[key]))
        for n, key in enumerate(sorted(groups))
    ]
    collisions = [e.pairs for e in entries if len(e.pairs) > 1]
    return FrequencySet(entries=entries, T=float(T), collisions=collisions)


def targets_from_pairs(freqs: FrequencySet, values: Dict[Pair, complex], tol: float = 1e-12) -> MomentTargets:
    """One shared moment per collision group; conflicting values within a group are rejected."""
    d = np.zeros(len(freqs), dtype=complex)
    pair_map = freqs.pair_map()
    seen: Dict[int, complex] = {}
    for pair, value in values.items():
        pair = tuple(pair)
        if pair not in pair_map:
            raise InputError(f"Pair {pair} is not in the frequency set")
        n = pair_map[pair]
        if n in seen and abs(seen[n] - value) > tol * max(1.0, abs(value)):
            raise InputError(f"Incompatible moments requested for colliding pairs at omega_{n}")
        seen[n] = complex(value)
        d[n] = value
    targets = MomentTargets(d)
    targets.check_against(freqs)
    return targets


def moment_problem_to_json(freqs: FrequencySet, targets: MomentTargets) -> str:
    doc = {
        "T": freqs.T,
        "omegas": freqs.omegas.tolist(),
        "pairs": [[list(p) for p in e.pairs] for e in freqs.entries],
        "targets": [[float(z.real), float(z.imag)] for z in targets.d],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def moment_problem_from_json(text: str) -> Tuple[FrequencySet, MomentTargets]:
    try:
        doc = json.loads(text)
        omegas = [float(w) for w in doc["omegas"]]
        raw = doc["targets"]
        T = float(doc["T"])
    except (ValueError, KeyError, TypeError) as e:
        raise InputError(f"Malformed moment problem: {e}")
    pairs: Optional[Sequence] = doc.get("pairs")
    entries = [
        FrequencyEntry(n=n, omega=w, pairs=[tuple(p) for p in (pairs[n] if pairs else [])])
        for n, w in enumerate(omegas)
    ]
    freqs = FrequencySet(entries=entries, T=T)
    targets = MomentTargets(np.array([complex(re, im) for re, im in raw]))
    targets.check_against(freqs)
    return freqs, targets

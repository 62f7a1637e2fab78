"""Feature-vector corpus handling: CSV ingestion, synthetic generation,
and genuine/impostor pair sampling.

CSV contract (bit-exact round trip): header ``user_id,sample_id,f1,...,fn``,
one row per sample, floats serialized with 17 significant digits, UTF-8,
LF line endings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidInput, IomlabError


class ParseError(IomlabError):
    """Corpus file is not valid CSV per the format contract."""


class DimensionError(IomlabError):
    """A corpus row has the wrong number of feature values."""


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    samples: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class Corpus:
    users: tuple[UserRecord, ...]
    n: int

    def __post_init__(self):
        seen = set()
        for rec in self.users:
            if rec.user_id in seen:
                raise InvalidInput(f"duplicate user_id {rec.user_id!r}")
            seen.add(rec.user_id)
            if not rec.samples:
                raise InvalidInput(f"user {rec.user_id!r} has no samples")
            for s in rec.samples:
                if s.shape != (self.n,):
                    raise InvalidInput(
                        f"sample of user {rec.user_id!r} has length {s.size}, expected {self.n}"
                    )

    @property
    def user_count(self) -> int:
        return len(self.users)

    @property
    def sample_count(self) -> int:
        return sum(len(rec.samples) for rec in self.users)

    def all_samples(self):
        """Yield (user_index, sample_index, vector) in corpus order."""
        for ui, rec in enumerate(self.users):
            for si, s in enumerate(rec.samples):
                yield ui, si, s


def load_corpus(path) -> Corpus:
    """Load and validate a corpus CSV; rejects ragged rows and non-finite values."""
    by_user: dict[str, list[np.ndarray]] = {}
    order: list[str] = []
    n = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header:
            raise ParseError(f"{path}: empty file")
        cols = header.rstrip("\n").rstrip("\r").split(",")
        if len(cols) < 3 or cols[0] != "user_id" or cols[1] != "sample_id":
            raise ParseError(f"{path}: line 1: expected header user_id,sample_id,f1,...")
        n = len(cols) - 2
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) - 2 != n:
                raise DimensionError(
                    f"{path}: line {lineno}: {len(parts) - 2} values, expected {n}"
                )
            user_id = parts[0]
            try:
                values = np.array([float(v) for v in parts[2:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
            if not np.all(np.isfinite(values)):
                raise ParseError(f"{path}: line {lineno}: non-finite feature value")
            values.setflags(write=False)
            if user_id not in by_user:
                by_user[user_id] = []
                order.append(user_id)
            by_user[user_id].append(values)
    if not order:
        raise ParseError(f"{path}: no data rows")
    users = tuple(
        UserRecord(user_id=uid, samples=tuple(by_user[uid])) for uid in order
    )
    return Corpus(users=users, n=n)


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus in the CSV contract format (17 significant digits)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        cols = ",".join(f"f{i + 1}" for i in range(corpus.n))
        fh.write(f"user_id,sample_id,{cols}\n")
        for rec in corpus.users:
            for si, sample in enumerate(rec.samples):
                values = ",".join(f"{v:.17g}" for v in sample)
                fh.write(f"{rec.user_id},{si + 1},{values}\n")


DEFAULT_RANGE = (-0.2504, 0.2132)


def synth_corpus(seed: int, users: int, samples_per_user: int, n: int,
                 value_range: tuple[float, float] = DEFAULT_RANGE,
                 noise_sigma: float = 0.02) -> Corpus:
    """Synthetic corpus: per-user uniform mean vectors plus Gaussian noise.

    Each sample is mean + N(0, noise_sigma^2), clipped back into the range.
    This is a convenience model for property-style experiments, not a
    distribution match for any real feature extractor.
    """
    lo, hi = value_range
    if not lo < hi:
        raise InvalidInput(f"invalid range: ({lo}, {hi})")
    if noise_sigma < 0:
        raise InvalidInput("noise_sigma must be >= 0")
    if users < 1 or samples_per_user < 1 or n < 1:
        raise InvalidInput("users, samples_per_user, and n must be >= 1")
    rng = np.random.default_rng(seed)
    width = max(1, len(str(users)))
    records = []
    for ui in range(users):
        mean = rng.uniform(lo, hi, n)
        samples = []
        for _ in range(samples_per_user):
            sample = mean + noise_sigma * rng.standard_normal(n)
            np.clip(sample, lo, hi, out=sample)
            sample.setflags(write=False)
            samples.append(sample)
        records.append(
            UserRecord(user_id=f"u{ui + 1:0{width}d}", samples=tuple(samples))
        )
    return Corpus(users=tuple(records), n=n)


def sample_pairs(corpus: Corpus, seed: int, count: int, kind: str):
    """Deterministically sample genuine or impostor feature-vector pairs.

    kind="genuine": both vectors from the same user, distinct samples.
    kind="impostor": vectors from two distinct users.
    Returns a list of ((user_idx, sample_idx), (user_idx, sample_idx)) index
    pairs so callers can look up vectors or derived artifacts.
    """
    if kind not in ("genuine", "impostor"):
        raise InvalidInput(f"kind must be 'genuine' or 'impostor', got {kind!r}")
    if count < 1:
        raise InvalidInput("count must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "genuine":
        eligible = [ui for ui, rec in enumerate(corpus.users) if len(rec.samples) >= 2]
        if not eligible:
            raise InvalidInput("genuine pairs need a user with >= 2 samples")
        pairs = []
        for _ in range(count):
            ui = eligible[int(rng.integers(len(eligible)))]
            n_s = len(corpus.users[ui].samples)
            a = int(rng.integers(n_s))
            b = int(rng.integers(n_s - 1))
            if b >= a:
                b += 1
            pairs.append(((ui, a), (ui, b)))
        return pairs
    if corpus.user_count < 2:
        raise InvalidInput("impostor pairs need >= 2 users")
    pairs = []
    for _ in range(count):
        ua = int(rng.integers(corpus.user_count))
        ub = int(rng.integers(corpus.user_count - 1))
        if ub >= ua:
            ub += 1
        a = int(rng.integers(len(corpus.users[ua].samples)))
        b = int(rng.integers(len(corpus.users[ub].samples)))
        pairs.append(((ua, a), (ub, b)))
    return pairs


def corpus_mean(corpus: Corpus) -> np.ndarray:
    """Arithmetic mean of all feature vectors in the corpus."""
    total = np.zeros(corpus.n)
    for _, _, s in corpus.all_samples():
        total += s
    return total / corpus.sample_count

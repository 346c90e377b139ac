"""Generator for a corpus in the exact ml-100k file layout.

Ratings are drawn from a planted model (global mean + user/item biases +
low-rank factors + noise, rounded and clamped to 1..5), so neighborhood and
factorization methods have real structure to recover while a global-mean
predictor is left around the marginal standard deviation. Demographics,
genres, and the three modality embedding stores are seeded from the same
generator; store vectors optionally mix in the items' planted factors the way
real content embeddings carry signal about the item.

Counts default to the ML-100K marginals (943 users, 1682 movies, 100k
ratings) so the stats and split arithmetic of the standard release hold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..features.store import write_store
from .movielens import GENRES_100K, OCCUPATIONS_100K

_ZIP_LETTERS = "ABCDEGHJKLMNPRSTVXY"


@dataclass
class SyntheticSpec:
    n_users: int = 943
    n_items: int = 1682
    n_ratings: int = 100_000
    seed: int = 7
    mean: float = 3.55
    user_bias_sd: float = 0.50
    item_bias_sd: float = 0.50
    n_factors: int = 4
    factor_sd: float = 0.45
    noise_sd: float = 0.90
    min_per_user: int = 20
    store_dim: int = 768
    store_signal: float = 0.8
    store_miss_rate: float = 0.05
    store_seed: int = 101


@dataclass
class SyntheticTruth:
    """Planted parameters, kept for calibration and diagnostics."""

    user_bias: np.ndarray
    item_bias: np.ndarray
    user_factors: np.ndarray
    item_factors: np.ndarray
    spec: SyntheticSpec = field(repr=False, default=None)


def _rating_counts(rng, spec: SyntheticSpec) -> np.ndarray:
    """Per-user counts: heavy-tailed, >= min_per_user, summing exactly to n_ratings."""
    raw = rng.lognormal(mean=4.1, sigma=0.85, size=spec.n_users)
    counts = np.clip(raw, spec.min_per_user, spec.n_items * 0.6).astype(int)
    diff = spec.n_ratings - counts.sum()
    step = 1 if diff > 0 else -1
    i = 0
    while diff != 0:
        u = i % spec.n_users
        c = counts[u] + step
        if spec.min_per_user <= c <= spec.n_items:
            counts[u] = c
            diff -= step
        i += 1
    return counts


def generate_ml100k(out_dir: str | Path, spec: SyntheticSpec | None = None,
                    ) -> SyntheticTruth:
    """Write u.data, u.user, u.item, u.genre, u.occupation plus three MMEB stores."""
    spec = spec or SyntheticSpec()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    user_bias = rng.normal(0.0, spec.user_bias_sd, spec.n_users)
    item_bias = rng.normal(0.0, spec.item_bias_sd, spec.n_items)
    p = rng.normal(0.0, spec.factor_sd, (spec.n_users, spec.n_factors))
    q = rng.normal(0.0, spec.factor_sd, (spec.n_items, spec.n_factors))

    # long-tailed item popularity
    pop = 1.0 / np.power(np.arange(1, spec.n_items + 1), 0.8)
    rng.shuffle(pop)
    pop /= pop.sum()

    counts = _rating_counts(rng, spec)
    lines = []
    ts_lo, ts_hi = 874_724_710, 893_286_638
    for u in range(spec.n_users):
        items = rng.choice(spec.n_items, size=counts[u], replace=False, p=pop)
        scores = (spec.mean + user_bias[u] + item_bias[items]
                  + p[u] @ q[items].T
                  + rng.normal(0.0, spec.noise_sd, items.size))
        ratings = np.clip(np.rint(scores), 1, 5).astype(int)
        stamps = rng.integers(ts_lo, ts_hi, items.size)
        for it, r, ts in zip(items, ratings, stamps):
            lines.append(f"{u + 1}\t{it + 1}\t{r}\t{ts}")
    order = rng.permutation(len(lines))
    (out / "u.data").write_text("\n".join(lines[i] for i in order) + "\n",
                                encoding="ascii")

    _write_users(out, rng, spec)
    _write_movies(out, rng, spec)
    (out / "u.genre").write_text(
        "".join(f"{g}|{i}\n" for i, g in enumerate(GENRES_100K)), encoding="ascii")
    (out / "u.occupation").write_text(
        "".join(f"{o}\n" for o in OCCUPATIONS_100K), encoding="ascii")

    _write_stores(out, spec, item_bias, q)
    return SyntheticTruth(user_bias, item_bias, p, q, spec)


def _write_users(out: Path, rng, spec: SyntheticSpec) -> None:
    rows = []
    for u in range(spec.n_users):
        age = int(np.clip(rng.normal(34, 12), 7, 73))
        gender = "M" if rng.random() < 0.71 else "F"
        occ = OCCUPATIONS_100K[rng.integers(len(OCCUPATIONS_100K))]
        if rng.random() < 0.05:  # a few alphanumeric codes, like Canadian zips
            zip_code = "".join(rng.choice(list(_ZIP_LETTERS + "0123456789"), 5))
        else:
            zip_code = f"{rng.integers(0, 100000):05d}"
        rows.append(f"{u + 1}|{age}|{gender}|{occ}|{zip_code}")
    (out / "u.user").write_text("\n".join(rows) + "\n", encoding="ascii")


def _write_movies(out: Path, rng, spec: SyntheticSpec) -> None:
    rows = []
    for m in range(spec.n_items):
        year = int(rng.integers(1926, 1999))
        title = f"Film No. {m + 1:04d} ({year})"
        flags = ["0"] * len(GENRES_100K)
        if rng.random() < 0.004:
            flags[0] = "1"  # the "unknown" genre
        else:
            for g in rng.choice(np.arange(1, len(GENRES_100K)),
                                size=rng.integers(1, 4), replace=False):
                flags[g] = "1"
        release = f"01-Jan-{year}"
        url = f"http://example.invalid/movie/{m + 1}"
        rows.append("|".join([str(m + 1), title, release, "", url] + flags))
    (out / "u.item").write_text("\n".join(rows) + "\n", encoding="latin-1")


def _write_stores(out: Path, spec: SyntheticSpec, item_bias: np.ndarray,
                  q: np.ndarray) -> None:
    """One MMEB store per modality; ~store_miss_rate of movies are absent."""
    payload = np.concatenate([q, item_bias[:, None]], axis=1)
    for tag_idx, tag in enumerate(("title", "intro", "poster")):
        srng = np.random.default_rng(spec.store_seed + tag_idx)
        directions = srng.standard_normal((payload.shape[1], spec.store_dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        vectors = {}
        for m in range(spec.n_items):
            if srng.random() < spec.store_miss_rate:
                continue
            base = srng.standard_normal(spec.store_dim)
            base /= np.linalg.norm(base)
            vec = base + spec.store_signal * (payload[m] @ directions)
            vectors[m + 1] = vec.astype(np.float32)
        write_store(out / f"{tag}.mmeb", tag, vectors, dim=spec.store_dim)

"""Parsers for the official MovieLens 100K and 1M file layouts.

100K ships tab-separated ratings (u.data), pipe-separated users (u.user) and
movies (u.item, 19 trailing binary genre flags), plus the u.genre and
u.occupation index files. 1M uses "::"-separated ratings.dat / users.dat /
movies.dat with genre names joined by "|". Both are decoded as latin-1:
movie titles contain bytes that are not valid UTF-8, and latin-1 is a strict
superset of ASCII so pure-ASCII files round-trip unchanged.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import DataError

ML100K = "ml100k"
ML1M = "ml1m"
FORMATS = (ML100K, ML1M)

# index order of the published u.genre file
GENRES_100K = (
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
)

# genre vocabulary of the 1M release (no "unknown" entry)
GENRES_1M = (
    "Action", "Adventure", "Animation", "Children's", "Comedy", "Crime",
    "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "Musical",
    "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
)

# line order of the published u.occupation file
OCCUPATIONS_100K = (
    "administrator", "artist", "doctor", "educator", "engineer",
    "entertainment", "executive", "healthcare", "homemaker", "lawyer",
    "librarian", "marketing", "none", "other", "programmer", "retired",
    "salesman", "scientist", "student", "technician", "writer",
)

# the seven age bucket codes of the 1M release
AGE_BUCKETS_1M = (1, 18, 25, 35, 45, 50, 56)

_YEAR_RE = re.compile(r"\((\d{4})\)\s*$")


@dataclass(frozen=True)
class RatingRecord:
    """One (user, movie, rating, timestamp) interaction."""

    user_id: int
    movie_id: int
    rating: int
    timestamp: int

    def __post_init__(self):
        if self.user_id <= 0 or self.movie_id <= 0:
            raise DataError(f"ids must be positive: {self.user_id}/{self.movie_id}")
        if not 1 <= self.rating <= 5:
            raise DataError(f"rating {self.rating} outside [1, 5]")


@dataclass(frozen=True)
class UserProfile:
    user_id: int
    age: int  # raw years in 100K, bucket code in 1M
    gender: str
    occupation: str  # name in 100K, numeric code string in 1M
    zip: str


@dataclass(frozen=True)
class MovieMeta:
    movie_id: int
    title: str
    genres: frozenset[str]
    release_year: int | None


def _read_lines(path: str | Path) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    text = path.read_text(encoding="latin-1")
    return [ln for ln in text.split("\n") if ln.strip() != ""]


def _split(line: str, fmt: str, path, lineno: int, n_fields: int,
           max_split: int = -1) -> list[str]:
    sep = "\t" if fmt == ML100K else "::"
    parts = line.rstrip("\r").split(sep, max_split)
    if len(parts) != n_fields:
        raise DataError(
            f"{path}:{lineno}: expected {n_fields} {sep!r}-separated fields, "
            f"got {len(parts)}")
    return parts


def _int(raw: str, what: str, path, lineno: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise DataError(f"{path}:{lineno}: non-numeric {what}: {raw!r}") from None


def parse_ratings(path: str | Path, fmt: str) -> list[RatingRecord]:
    """Parse u.data (ml100k) or ratings.dat (ml1m) into rating records.

    Every line must yield exactly one record; a malformed line aborts with its
    line number.
    """
    if fmt not in FORMATS:
        raise DataError(f"unknown format {fmt!r}, expected one of {FORMATS}")
    records = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        parts = _split(line, fmt, path, lineno, 4)
        user = _int(parts[0], "user id", path, lineno)
        movie = _int(parts[1], "movie id", path, lineno)
        rating = _int(parts[2], "rating", path, lineno)
        ts = _int(parts[3], "timestamp", path, lineno)
        try:
            records.append(RatingRecord(user, movie, rating, ts))
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    return records


def parse_users(path: str | Path, fmt: str) -> list[UserProfile]:
    """Parse u.user (id|age|gender|occupation|zip) or users.dat (id::gender::age::occ::zip)."""
    if fmt not in FORMATS:
        raise DataError(f"unknown format {fmt!r}, expected one of {FORMATS}")
    users = []
    seen: set[int] = set()
    for lineno, line in enumerate(_read_lines(path), start=1):
        if fmt == ML100K:
            parts = line.rstrip("\r").split("|")
            if len(parts) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 '|'-separated fields")
            uid = _int(parts[0], "user id", path, lineno)
            age = _int(parts[1], "age", path, lineno)
            gender, occupation, zip_code = parts[2], parts[3], parts[4]
            if age <= 0:
                raise DataError(f"{path}:{lineno}: age must be positive")
        else:
            parts = _split(line, fmt, path, lineno, 5)
            uid = _int(parts[0], "user id", path, lineno)
            gender = parts[1]
            age = _int(parts[2], "age bucket", path, lineno)
            occupation, zip_code = parts[3], parts[4]
            if age not in AGE_BUCKETS_1M:
                raise DataError(f"{path}:{lineno}: unknown age bucket {age}")
        if gender not in ("M", "F"):
            raise DataError(f"{path}:{lineno}: gender must be M or F, got {gender!r}")
        if uid in seen:
            raise DataError(f"{path}:{lineno}: duplicate user id {uid}")
        seen.add(uid)
        users.append(UserProfile(uid, age, gender, occupation, zip_code))
    return users


def _year_from_title(title: str) -> int | None:
    m = _YEAR_RE.search(title)
    return int(m.group(1)) if m else None


def parse_movies(path: str | Path, fmt: str) -> list[MovieMeta]:
    """Parse u.item (pipe fields + 19 genre flags) or movies.dat (id::title::genres)."""
    if fmt not in FORMATS:
        raise DataError(f"unknown format {fmt!r}, expected one of {FORMATS}")
    movies = []
    seen: set[int] = set()
    for lineno, line in enumerate(_read_lines(path), start=1):
        if fmt == ML100K:
            parts = line.rstrip("\r").split("|")
            if len(parts) != 5 + len(GENRES_100K):
                raise DataError(
                    f"{path}:{lineno}: expected {5 + len(GENRES_100K)} fields, "
                    f"got {len(parts)}")
            mid = _int(parts[0], "movie id", path, lineno)
            title = parts[1]
            flags = parts[5:]
            genres = set()
            for g_idx, flag in enumerate(flags):
                if flag not in ("0", "1"):
                    raise DataError(f"{path}:{lineno}: genre flag must be 0/1")
                if flag == "1":
                    genres.add(GENRES_100K[g_idx])
            if not genres:
                raise DataError(f"{path}:{lineno}: no genre flag set and no "
                                f"'unknown' fallback")
            # release date like 01-Jan-1995; fall back to the (year) in the title
            year = None
            if parts[2]:
                tail = parts[2].rsplit("-", 1)[-1]
                if tail.isdigit():
                    year = int(tail)
            if year is None:
                year = _year_from_title(title)
        else:
            parts = _split(line, fmt, path, lineno, 3)
            mid = _int(parts[0], "movie id", path, lineno)
            title = parts[1]
            names = [g for g in parts[2].split("|") if g]
            if not names:
                raise DataError(f"{path}:{lineno}: empty genre list")
            genres = set(names)
            year = _year_from_title(title)
        if mid in seen:
            raise DataError(f"{path}:{lineno}: duplicate movie id {mid}")
        seen.add(mid)
        movies.append(MovieMeta(mid, title, frozenset(genres), year))
    return movies


def format_rating_line(rec: RatingRecord, fmt: str) -> str:
    sep = "\t" if fmt == ML100K else "::"
    return sep.join(str(v) for v in (rec.user_id, rec.movie_id, rec.rating,
                                     rec.timestamp))


def write_ratings(path: str | Path, records: list[RatingRecord], fmt: str) -> None:
    with open(path, "w", encoding="latin-1") as f:
        for rec in records:
            f.write(format_rating_line(rec, fmt) + "\n")

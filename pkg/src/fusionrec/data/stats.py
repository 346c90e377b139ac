"""Corpus statistics: user/item/rating counts and sparsity."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import DataError
from .movielens import RatingRecord

# Widely circulated sparsity figures for the standard releases. For ML-1M some
# sources quote 95.359%, while 1 - 1000209/(6040*3883) = 95.735%; when counts
# match the standard release we report our arithmetic next to the quoted value.
QUOTED_SPARSITY = {
    (943, 1682, 100_000): 0.93695,
    (6040, 3883, 1_000_209): 0.95359,
}


@dataclass(frozen=True)
class DatasetStats:
    n_users: int
    n_items: int
    n_ratings: int
    sparsity: float  # fraction of the user x item grid with no rating

    def sparsity_note(self) -> str | None:
        """Flags a mismatch against the quoted figure for a standard release."""
        quoted = QUOTED_SPARSITY.get((self.n_users, self.n_items, self.n_ratings))
        if quoted is None or abs(self.sparsity - quoted) < 5e-4:
            return None
        return (f"computed sparsity {self.sparsity * 100:.3f}% differs from the "
                f"commonly quoted {quoted * 100:.3f}% for this release; the "
                f"computed value is 1 - ratings/(users*items)")

    def render_block(self) -> str:
        lines = ["Dataset statistics",
                 f"  Users     {self.n_users}",
                 f"  Items     {self.n_items}",
                 f"  Ratings   {self.n_ratings}",
                 f"  Sparsity  {self.sparsity * 100:.3f}%"]
        note = self.sparsity_note()
        if note:
            lines.append(f"  Note      {note}")
        return "\n".join(lines)


def compute_stats(records: list[RatingRecord], n_users: int | None = None,
                  n_items: int | None = None) -> DatasetStats:
    """Counts joined with the declared catalog sizes when those are larger.

    Without a catalog, distinct ids in the rating file are used. Sparsity is
    1 - n_ratings / (n_users * n_items).
    """
    if not records:
        raise DataError("compute_stats needs a nonempty record list")
    users = {r.user_id for r in records}
    items = {r.movie_id for r in records}
    n_users = max(len(users), n_users or 0)
    n_items = max(len(items), n_items or 0)
    n_ratings = len(records)
    sparsity = 1.0 - n_ratings / (n_users * n_items)
    return DatasetStats(n_users, n_items, n_ratings, sparsity)

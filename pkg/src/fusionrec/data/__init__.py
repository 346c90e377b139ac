from .movielens import (AGE_BUCKETS_1M, GENRES_100K, GENRES_1M, ML100K, ML1M,
                        MovieMeta, RatingRecord, UserProfile, parse_movies,
                        parse_ratings, parse_users, write_ratings)
from .splits import (DEFAULT_RATIOS, DEFAULT_SEED, assign_splits, read_manifest,
                     split_dataset, write_manifest)
from .stats import DatasetStats, compute_stats

__all__ = [
    "AGE_BUCKETS_1M", "GENRES_100K", "GENRES_1M", "ML100K", "ML1M",
    "MovieMeta", "RatingRecord", "UserProfile",
    "parse_movies", "parse_ratings", "parse_users", "write_ratings",
    "DEFAULT_RATIOS", "DEFAULT_SEED", "assign_splits", "read_manifest",
    "split_dataset", "write_manifest",
    "DatasetStats", "compute_stats",
]

"""Quantifiable sentence editing toward numeric outcome targets."""

from quase._core import (  # noqa: F401
    LexiconScorer,
    Model,
    config_hash,
    detokenize,
    edit_distance,
    jaccard,
    kl_standard_normal,
    log_density,
    mae,
    mine_pairs,
    polarity_accuracy,
    run_stage,
    tokenize,
    word_delta,
)

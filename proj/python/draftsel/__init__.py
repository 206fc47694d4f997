# Copyright 2026 The draftsel Authors
# SPDX-License-Identifier: Apache-2.0
"""Online drafter selection for speculative decoding."""

import json

from ._draftsel import (
    DraftselError,
    Learner,
    __version__,
    accept_length_estimate,
    chunk_length_loss,
    chunk_prob_loss,
    exact_hedge_regret,
    length_loss,
    overlap_mass,
    prob_loss,
    residual_distribution,
    top_l,
    tv_distance,
)
from . import _draftsel


def resolve_config(config=None):
    """Fills defaults and validates; returns the full flat config dict."""
    return json.loads(_draftsel._validate_json(json.dumps(config or {})))


def run(config=None, seed=None):
    """Runs one episode and returns its summary, regret series included."""
    return json.loads(_draftsel._run_json(json.dumps(config or {}), seed))


def censor(config=None):
    return json.loads(_draftsel._censor_json(json.dumps(config or {})))


__all__ = [
    "DraftselError",
    "Learner",
    "accept_length_estimate",
    "censor",
    "chunk_length_loss",
    "chunk_prob_loss",
    "exact_hedge_regret",
    "length_loss",
    "overlap_mass",
    "prob_loss",
    "residual_distribution",
    "resolve_config",
    "run",
    "top_l",
    "tv_distance",
]

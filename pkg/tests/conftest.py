"""Shared fixtures: the bundled desk-scale operators and their spectral data."""

import numpy as np
import pytest

from lpbesov import (
    build_laplacian,
    eigendecompose,
    make_filter_bank,
    make_window_pair,
    spectral_bound,
)
from lpbesov.operators import Operator


def _diag64():
    return Operator(np.logspace(-2, np.log10(4.0), 64), "diagonal", source="generator:diag64")


@pytest.fixture(scope="session")
def bundled_operators():
    return {
        "path64": build_laplacian("path", 64),
        "grid8": build_laplacian("grid2d", 8),
        "diag64": _diag64(),
    }


@pytest.fixture(scope="session")
def bundled_spectral(bundled_operators):
    """(operator, decomposition, bank) triples for the bundled suite."""
    out = {}
    for name, op in bundled_operators.items():
        decomp = eigendecompose(op)
        bound = max(spectral_bound(op), decomp.lambda_max)
        bank = make_filter_bank(make_window_pair(), bound)
        out[name] = (op, decomp, bank)
    return out


@pytest.fixture(scope="session")
def p4():
    op = build_laplacian("path", 4)
    decomp = eigendecompose(op)
    bank = make_filter_bank(make_window_pair(), max(spectral_bound(op), decomp.lambda_max))
    return op, decomp, bank


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

import json

import numpy as np
import pytest

from rsgd_lab.data import DatasetKind, DatasetSpec, generate
from rsgd_lab.problems import PcaProblem, SqrtAbsSphereProblem


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def pca_problem():
    X = np.random.default_rng(1).standard_normal((20, 8))
    return PcaProblem(X, 3)


@pytest.fixture
def lrmc_problem():
    spec = DatasetSpec(DatasetKind.MASKED_LOW_RANK, N=15, n=8, r_true=3,
                       noise=0.3, mask_density=0.6, seed=2)
    return generate(spec)


@pytest.fixture
def sqrt_abs_problem():
    return generate(DatasetSpec(DatasetKind.SPHERE_UNIFORM, N=20, n=8, seed=3))


@pytest.fixture
def cap_problem():
    """sqrt-abs rows clustered around e1, smooth near w = e1."""
    X = np.random.default_rng(4).standard_normal((20, 8)) * 0.1
    X[:, 0] += 1.0
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return SqrtAbsSphereProblem(X)


@pytest.fixture
def write_config(tmp_path):
    """Writes a config document into tmp_path and returns its path."""

    def _write(doc, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return path

    return _write


@pytest.fixture
def small_pca_doc(tmp_path):
    return {
        "problem": {
            "kind": "pca",
            "r": 2,
            "dataset": {"kind": "gaussian_low_rank", "N": 40, "n": 6, "r_true": 2,
                        "noise": 0.05, "seed": 11},
        },
        "lr": {"cosine": {"eta_max": 0.05, "eta_min": 0.0}},
        "bs": {"bs_constant": {"b0": 4}},
        "run": {"label": "small", "T": 30, "eval_period": 5, "seeds": [0, 1],
                "output_dir": str(tmp_path / "out"), "jobs": 1},
    }

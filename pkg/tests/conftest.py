import numpy as np
import pytest

from ghicast.config import config_from_dict
from ghicast.synth import SynthConfig, gen_dataset


@pytest.fixture(scope="session")
def small_series():
    """Seven sites, 18 months, no missing data: shared by feature/model tests."""
    cfg = SynthConfig(
        n_sites=7, start="2014-06-01", end="2015-11-30", seed=901, missing_rate=0.0
    )
    return gen_dataset(cfg)


@pytest.fixture(scope="session")
def small_run_config():
    return config_from_dict(
        {
            "seed": 901,
            "synth": {"n_sites": 7, "start": "2014-06-01", "end": "2015-11-30",
                      "seed": 901, "missing_rate": 0.0},
            "splits": {
                "train": ["2014-06-01", "2015-05-31"],
                "validation": ["2015-06-01", "2015-08-31"],
                "test": ["2015-09-01", "2015-11-30"],
            },
            "train_site_count": 2,
            "global_train": {"max_epochs": 40, "patience": 10, "n_starts": 1},
            "local_train": {"max_epochs": 30, "patience": 8, "n_starts": 1},
            "local_gbt": {"n_trees": 25, "max_depth": 3, "min_leaf": 20, "shrinkage": 0.1},
        }
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

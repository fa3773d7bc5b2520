import numpy as np
import pytest

from cudi.data import synthetic_corpus


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Small deterministic training corpus shared across the suite."""
    directory = tmp_path_factory.mktemp("corpus")
    synthetic_corpus(directory, count=50, size=128, seed=7)
    return directory


@pytest.fixture(scope="session")
def held_out_images():
    """Images outside the training corpus: underexposed and overexposed
    variants of the same held-out scenes."""
    from cudi.data import synthetic_image
    normals = [synthetic_image(31_337 + i, 128) for i in range(4)]
    under = [np.clip(img * 0.45, 0, 1).astype(np.float32) for img in normals]
    over = [np.clip(img * 1.5 + 0.25, 0, 1).astype(np.float32) for img in normals]
    return normals, under, over

import numpy as np
import pytest

from spritecheck import (AssetStore, GameConfig, SceneGraph, SceneNode,
                         make_asset_pack, run_test_case)


def solid(w, h, rgba):
    img = np.zeros((h, w, 4), dtype=np.uint8)
    img[:] = rgba
    return img


def checker(w, h, seed=1):
    """Asymmetric opaque texture: no accidental symmetry under rotation."""
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, (h, w, 4), dtype=np.int64).astype(np.uint8)
    img[..., 3] = 255
    img[0, 0] = (255, 0, 0, 255)  # pin one corner
    return img


def make_scene(*nodes, background=(0, 0, 0)):
    """Root container plus the given nodes as its children, in order."""
    table = {"root": SceneNode(id="root", kind="container")}
    for n in nodes:
        n.parent_id = "root"
        table["root"].children.append(n.id)
        table[n.id] = n
    return SceneGraph(root_id="root", nodes=table, background=background)


@pytest.fixture(scope="session")
def asset_pack():
    return make_asset_pack()


@pytest.fixture(scope="session")
def small_config(asset_pack):
    return GameConfig(canvas_w=640, canvas_h=360, snapshot_count=10,
                      asset_pack=asset_pack)


@pytest.fixture(scope="session")
def clean_bundles(small_config):
    """One clean 640x360 episode shared by everything that reads it."""
    return run_test_case(small_config)


@pytest.fixture()
def store():
    return AssetStore()

from __future__ import annotations

import numpy as np
import pytest

import salroi
from salroi import BoundingBox, SyntheticScene


@pytest.fixture
def partial_overlap_scene() -> SyntheticScene:
    """Fixed point inside (but smaller than) the ground-truth region.

    Survives the pipeline's per-map normalization: the cells of the ground
    truth outside the fixed point keep a large difference, so the recovered
    region's bounding box still equals the ground-truth box.
    """
    return SyntheticScene(
        width=64,
        height=64,
        gt_box=BoundingBox(8, 8, 24, 24),
        fixed_point_box=BoundingBox(12, 12, 8, 8),
        gt_in_ori=0.9,
        fp_in_ori=0.9,
        fp_in_back=0.7,
        distractor_box=BoundingBox(40, 40, 12, 12),
        distractor_intensity=0.3,
        noise_sigma=0.0,
        seed=0,
    )


@pytest.fixture
def cli_workspace(tmp_path, partial_overlap_scene):
    """Input files for CLI runs: saliency pair, image, embeddings, catalog, lexicon."""
    ori, back = salroi.gen_scene_maps(partial_overlap_scene)
    paths = {
        "ori": tmp_path / "ori.smap",
        "back": tmp_path / "back.smap",
        "image": tmp_path / "img.ppm",
        "image_emb": tmp_path / "img.emb",
        "catalog": tmp_path / "catalog.tsv",
        "lexicon": tmp_path / "lex.tsv",
        "dir": tmp_path,
    }
    salroi.write_smap(paths["ori"], ori)
    salroi.write_smap(paths["back"], back)
    salroi.write_ppm(paths["image"], np.full((64, 64, 3), 200, dtype=np.uint8))
    salroi.write_embedding(paths["image_emb"], [1.0, 0.0, 0.0])
    salroi.write_embedding(tmp_path / "ct.emb", [0.9, 0.1, 0.0])
    salroi.write_embedding(tmp_path / "mri.emb", [0.5, 0.5, 0.5])
    salroi.write_embedding(tmp_path / "xray.emb", [0.0, 1.0, 0.0])
    paths["catalog"].write_text("CT\tct.emb\nMRI\tmri.emb\nX-ray\txray.emb\n", encoding="utf-8")
    paths["lexicon"].write_text("lung\t2.0\norgan\t1.0\n", encoding="utf-8")
    return paths

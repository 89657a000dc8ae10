"""Tune a color matrix for one image and one prompt, end to end.

Builds a small synthetic test scene, asks for a "warm" look, and saves the
before/after pair plus the per-iteration loss curve. Everything runs on the
analytic synthetic backend, so there is no model to download.

    python demos/tune_with_prompt.py
"""

from pathlib import Path

import numpy as np

from ccmtune import RgbImage, ccm, colorfulness, decode_image, encode_display
from ccmtune.embedding import SyntheticBackend
from ccmtune.objective import PromptSpec
from ccmtune.optimizer import TuneConfig, tune

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def make_scene(seed=0, side=256):
    """A gray courtyard with a grassy band and a brick wall."""
    rng = np.random.default_rng(seed)
    img = np.full((3, side, side), 0.5) + rng.normal(0, 0.02, (3, side, side))
    grass = slice(0, side // 3)
    for c, v in enumerate((0.35, 0.75, 0.2)):
        img[c, grass, :] = v + rng.normal(0, 0.05, (side // 3, side))
    wall = slice(2 * side // 3, side)
    for c, v in enumerate((0.6, 0.45, 0.35)):
        img[c, wall, :] = v + rng.normal(0, 0.04, (side - 2 * side // 3, side))
    return RgbImage(np.clip(img, 0, 1))


def main():
    img = make_scene()
    backend = SyntheticBackend()
    config = TuneConfig(objective=PromptSpec("B", "warm"), iterations=400, seed=0)

    result = tune(img, config, backend)

    styled = ccm.apply(result.final_matrix, img)
    (OUT / "warm_before.png").write_bytes(encode_display(img))
    (OUT / "warm_after.png").write_bytes(encode_display(styled))
    (OUT / "warm_matrix.json").write_text(
        ccm.matrix_to_json(result.final_matrix, result.final_params))

    records = result.trajectory.records
    print(f"prompt:            'A warm photo'")
    print(f"iterations:        {records[-1].iteration}")
    print(f"similarity:        {records[0].sim_a:+.4f} -> {records[-1].sim_a:+.4f}")
    before = colorfulness(decode_image(encode_display(img)))
    after = colorfulness(decode_image(encode_display(styled)))
    print(f"colorfulness:      {before:.1f} -> {after:.1f}")
    print("final matrix rows: "
          f"{[[round(float(v), 3) for v in row] for row in result.final_matrix.m]}")
    print(f"artifacts:         {OUT}/warm_before.png, warm_after.png, warm_matrix.json")


if __name__ == "__main__":
    main()

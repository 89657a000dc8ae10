"""Interpolate between two opposing prompts with the alpha dial.

Runs the two-prompt objective at several alpha targets between "warm" and
"cool" and lays the styled results out in one horizontal strip: the left
end should read cool, the right end warm.

With the default temperature the achievable softmax weights sit in a narrow
band around 0.5 (cosine similarities are small), so extreme alpha targets
saturate at the feasible set's corners; a lower temperature spreads the
weights out and makes the interpolation visibly smooth.

    python demos/two_prompt_alpha_sweep.py
"""

from pathlib import Path

import numpy as np

from ccmtune import RgbImage, ccm, encode_display
from ccmtune.embedding import SyntheticBackend
from ccmtune.objective import PromptSpec, TwoPromptSpec
from ccmtune.optimizer import TuneConfig, tune

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

ALPHAS = (0.01, 0.25, 0.5, 0.75, 0.99)


def balanced_scene(seed=0, side=256):
    """Gray field with warm and cool patches of equal weight plus a green
    cast. The untouched image sits midway between the two prompts, and the
    green-channel surplus is what the matrix trades against to move the
    red/blue balance either way (with equal channel means everywhere a
    row-sum-1 matrix cannot move any mean at all)."""
    rng = np.random.default_rng(seed)
    img = np.full((3, side, side), 0.5) + rng.normal(0, 0.02, (3, side, side))
    img[1, :, :] += 0.18
    half = side // 2
    for c, v in enumerate((0.7, 0.68, 0.3)):   # warm patch, left
        img[c, half:, :half] = v + rng.normal(0, 0.03, (side - half, half))
    for c, v in enumerate((0.3, 0.68, 0.7)):   # cool patch, right
        img[c, half:, half:] = v + rng.normal(0, 0.03, (side - half, half))
    return RgbImage(np.clip(img, 0, 1))


def main():
    img = balanced_scene(seed=3)
    backend = SyntheticBackend()
    warm = PromptSpec("B", "warm")
    cool = PromptSpec("B", "cool")

    panels = []
    for alpha in ALPHAS:
        objective = TwoPromptSpec(warm, cool, alpha=alpha, temperature=0.1)
        config = TuneConfig(objective=objective, iterations=300, seed=0)
        result = tune(img, config, backend)
        styled = ccm.apply(result.final_matrix, img)
        panels.append(np.clip(styled.samples, 0, 1))
        final = result.trajectory.records[-1]
        print(f"alpha={alpha:.2f}  p_warm={final.p_a:.3f}  "
              f"sim_warm={final.sim_a:+.3f}  sim_cool={final.sim_b:+.3f}")

    gap = np.ones((3, img.height, 4))
    strip = panels[0]
    for panel in panels[1:]:
        strip = np.concatenate([strip, gap, panel], axis=2)
    (OUT / "alpha_sweep_warm_cool.png").write_bytes(encode_display(RgbImage(strip)))
    print(f"strip (cool -> warm): {OUT}/alpha_sweep_warm_cool.png")


if __name__ == "__main__":
    main()

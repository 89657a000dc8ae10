"""How the clip level bounds the strength of a style.

The vibrant/dull harness measures how far apart "vibrant"-tuned and
"dull"-tuned outputs land on the colorfulness scale. Relaxing the parameter
clip tau widens the feasible set, so the gap should grow monotonically.

    python demos/tau_sweep_colorfulness.py
"""

from dataclasses import replace

from ccmtune.embedding import SyntheticBackend
from ccmtune.experiment import vibrant_dull_experiment
from ccmtune.objective import PromptSpec
from ccmtune.optimizer import TuneConfig

from tune_with_prompt import make_scene

TAUS = (0.25, 0.33, 0.5, 1.0)


def main():
    images = [(f"scene{i}", make_scene(seed=i, side=128)) for i in range(3)]
    backend = SyntheticBackend()
    base = TuneConfig(objective=PromptSpec("B", "vibrant"), iterations=300, seed=0)

    print(f"{'tau':>5}  {'delta C':>8}  {'delta CLIP-IQA':>14}")
    for tau in TAUS:
        report = vibrant_dull_experiment(images, replace(base, tau=tau), backend)
        print(f"{tau:>5.2f}  {report.delta_c:>8.2f}  {report.delta_clip_iqa:>14.4f}")


if __name__ == "__main__":
    main()

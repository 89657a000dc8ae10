"""Pixel-population color statistics.

Colorfulness follows the Hasler-Suesstrunk opponent-channel statistic,
computed on the 0-255 scale regardless of the image's nominal [0, 1] range:

    rg = R - G
    yb = (R + G) / 2 - B
    C  = sqrt(var(rg) + var(yb)) + 0.3 * sqrt(mean(rg)^2 + mean(yb)^2)

with population variances. Grayscale images score exactly 0.
"""

from __future__ import annotations

import numpy as np

from .image import RgbImage


def colorfulness(img: RgbImage) -> float:
    return colorfulness_of_samples(img.samples)


def colorfulness_of_samples(samples: np.ndarray) -> float:
    """Colorfulness of a raw (3, H, W) array on the [0, 1] scale."""
    r, g, b = (samples[i] * 255.0 for i in range(3))
    rg = r - g
    yb = 0.5 * (r + g) - b
    sigma = np.sqrt(np.var(rg) + np.var(yb))
    mu = np.sqrt(np.mean(rg) ** 2 + np.mean(yb) ** 2)
    return float(sigma + 0.3 * mu)


def colorfulness_with_grad(samples: np.ndarray):
    """Colorfulness of a (3, H, W) [0,1]-scale array and its gradient.

    Returns (C, dC/dsamples). At the non-differentiable points (zero
    deviation or zero mean vector) the corresponding term's gradient is
    taken as 0.
    """
    r, g, b = samples[0] * 255.0, samples[1] * 255.0, samples[2] * 255.0
    n = r.size
    rg = r - g
    yb = 0.5 * (r + g) - b
    mu_rg = np.mean(rg)
    mu_yb = np.mean(yb)
    var_sum = np.var(rg) + np.var(yb)
    sigma = np.sqrt(var_sum)
    mu_norm = np.sqrt(mu_rg ** 2 + mu_yb ** 2)
    c = float(sigma + 0.3 * mu_norm)

    d_rg = np.zeros_like(rg)
    d_yb = np.zeros_like(yb)
    if sigma > 0.0:
        d_rg += (rg - mu_rg) / (n * sigma)
        d_yb += (yb - mu_yb) / (n * sigma)
    if mu_norm > 0.0:
        d_rg += 0.3 * mu_rg / (n * mu_norm)
        d_yb += 0.3 * mu_yb / (n * mu_norm)

    grad = np.empty_like(samples)
    grad[0] = 255.0 * (d_rg + 0.5 * d_yb)
    grad[1] = 255.0 * (-d_rg + 0.5 * d_yb)
    grad[2] = 255.0 * (-d_yb)
    return c, grad

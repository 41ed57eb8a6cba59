"""From an exported feature stack to a per-pixel aesthetic map.

The engine never runs a neural network. A trainer exports the last
convolutional layer (FST1 file) and the pooled-classifier weights (HEAD1
file); the engine combines them into a class activation grid for the
high-quality class and scales it up to image resolution. This demo fakes the
export with a synthetic stack so the arithmetic is easy to follow.
"""

import numpy as np

from semcrop import (
    AvaRating,
    ClassifierHead,
    FeatureStack,
    LossParams,
    aesthetic_map,
    ava_label,
    class_activation_map,
    gap_classify,
    weighted_cross_entropy,
)
from semcrop.aesthetics import gap_logit

rng = np.random.default_rng(0)

# -- 1. A fake backbone export: 6 feature grids at 14x14 ----------------------

# Two grids respond to the "subject" region, the rest is noise.
grids = rng.normal(0.0, 0.1, size=(6, 14, 14))
grids[0, 4:10, 7:13] += 1.0
grids[1, 5:9, 8:12] += 0.8
stack = FeatureStack(grids)

# Classifier head: the high-quality class leans on grids 0 and 1.
head = ClassifierHead(
    ("high", "low"),
    np.array([
        [1.2, 0.9, 0.05, -0.1, 0.0, 0.02],
        [-0.6, -0.4, 0.1, 0.2, 0.05, 0.0],
    ]),
)

# -- 2. Classify by global average pooling ------------------------------------

probs = gap_classify(stack, head)
print(f"P(high)={probs[0]:.3f} P(low)={probs[1]:.3f}")

# -- 3. The activation grid localizes what drove the decision ------------------

raw = class_activation_map(stack, head, "high")
print(f"raw activation grid {raw.width}x{raw.height}, "
      f"mean {raw.values.mean():.4f} == high logit {gap_logit(stack, head, 'high'):.4f}")

# -- 4. Image-sized aesthetic map in [0, 1] ------------------------------------

amap = aesthetic_map(stack, head, img_w=448, img_h=448)
peak_y, peak_x = np.unravel_index(np.argmax(amap.values), amap.values.shape)
print(f"aesthetic map {amap.width}x{amap.height}, peak at ({peak_x}, {peak_y}) "
      "(inside the subject region)")

# -- 5. Rating thresholds and the training-side loss ---------------------------

for rating in (7.8, 6.2, 3.1):
    print(f"mean rating {rating} -> {ava_label(AvaRating('shot', rating))}")

# Low-quality samples are three times rarer, so they weigh three times more.
truth = np.array([[0.0, 1.0], [1.0, 0.0]])
pred = np.array([[0.3, 0.7], [0.85, 0.15]])
loss = weighted_cross_entropy(truth, pred, LossParams((1.0, 3.0)))
print(f"class-weighted cross-entropy: {loss:.4f}")

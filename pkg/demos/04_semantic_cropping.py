"""The full cropping pipeline on a staged two-subject scene.

A wide frame holds a dog on the left and a person on the right; its most
photogenic region sits in the middle. A square crop cannot keep both
subjects, so the queried entity decides what survives. Watch the winner move
as the weights and the entity change.
"""

import numpy as np

from semcrop import (
    AspectRatio,
    CandidateConfig,
    CombineWeights,
    Detection,
    EntityQuery,
    Rect,
    ScoreMap,
    bundled_taxonomy,
    best_crops,
    resolve_entity,
    semantic_map,
)

WIDTH, HEIGHT = 300, 150

# -- 1. Stage the scene ---------------------------------------------------------

# Aesthetic map: a soft blob in the middle of the frame.
yy, xx = np.mgrid[0:HEIGHT, 0:WIDTH]
aesthetic = ScoreMap(np.exp(-((xx - 150) ** 2 + (yy - 75) ** 2) / (2 * 35.0**2)))

detections = [
    Detection("dog", 0.93, Rect(20, 55, 50, 45)),
    Detection("person", 0.95, Rect(235, 30, 40, 95)),
]

config = CandidateConfig(AspectRatio(1, 1), stride=5)
tax = bundled_taxonomy()


def crop_for(entity_text, aesthetic_weight, semantic_weight):
    relevance = None
    if entity_text is not None:
        resolved = resolve_entity(tax, EntityQuery(entity_text), detections)
        chosen = [d for d in detections if d.label == resolved.label]
        relevance = semantic_map(WIDTH, HEIGHT, chosen)
    weights = CombineWeights(aesthetic_weight, semantic_weight)
    top = best_crops(aesthetic, relevance, weights, config, n=1)[0]
    return top.rect, top.score


# -- 2. Aesthetics only: the crop hugs the center -------------------------------

rect, score = crop_for(None, 1.0, 0.0)
print(f"aesthetic only:      x={rect.x:<3} ({rect.w}x{rect.h}, score {score:.3f})")

# -- 3. Ask for the dog: the crop jumps left ------------------------------------

rect, score = crop_for("dog", 0.0, 1.0)
print(f"entity 'dog':        x={rect.x:<3} ({rect.w}x{rect.h}, score {score:.3f})")

# -- 4. Ask for the person: it jumps right --------------------------------------

rect, score = crop_for("person", 0.0, 1.0)
print(f"entity 'person':     x={rect.x:<3} ({rect.w}x{rect.h}, score {score:.3f})")

# -- 5. Balance both: keep the subject without losing the pretty center ---------

rect, score = crop_for("dog", 1.0, 1.0)
print(f"dog + aesthetics:    x={rect.x:<3} ({rect.w}x{rect.h}, score {score:.3f})")

# A synonym works as well as the exact label: the taxonomy resolves it.
rect, score = crop_for("puppy", 0.0, 1.0)
print(f"entity 'puppy':      x={rect.x:<3} (same side as 'dog')")

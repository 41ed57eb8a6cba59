"""Resolving a free-text entity against detector labels.

A detector only knows a fixed label set; the crop query can be any word. The
bridge is a concept taxonomy with information-content values: enumerate the
query's senses, score sense pairs by Jiang-Conrath distance, squash into
[0, 1], and keep the best label above a threshold. The winning detections
then become a per-pixel relevance map.
"""

import numpy as np

from semcrop import (
    Detection,
    EntityQuery,
    Rect,
    ResolutionConfig,
    bundled_taxonomy,
    jcn_similarity,
    resolve_entity,
    semantic_map,
    senses,
)

tax = bundled_taxonomy()

# -- 1. Disambiguate: one word, several senses ---------------------------------

for word in ("dog", "mouse", "tie"):
    print(f"senses of {word!r}: {senses(tax, EntityQuery(word))}")

# -- 2. Similarity between concepts --------------------------------------------

print(f"sim(dog, dog) = {jcn_similarity(tax, 'dog.n.01', 'dog.n.01'):.4f}")
print(f"sim(dog, cat) = {jcn_similarity(tax, 'dog.n.01', 'cat.n.01'):.4f}")
print(f"sim(dog, laptop) = {jcn_similarity(tax, 'dog.n.01', 'computer.n.01'):.4f}")

# -- 3. Resolve a query against what was actually detected ----------------------

detections = [
    Detection("cat", 0.91, Rect(40, 60, 140, 120)),
    Detection("person", 0.97, Rect(300, 20, 160, 340)),
    Detection("cat", 0.78, Rect(520, 260, 90, 80)),
]

for query in ("kitten", "human", "asteroid"):
    result = resolve_entity(tax, EntityQuery(query), detections, ResolutionConfig(0.1))
    if result is None:
        print(f"{query!r}: below threshold, no usable detection")
    else:
        print(f"{query!r}: -> label {result.label!r} (similarity {result.similarity:.4f})")

# -- 4. The winning label becomes a relevance map -------------------------------

# Two cats detected: the larger box wins, mask smoothed and peak-normalized.
chosen = [d for d in detections if d.label == "cat"]
relevance = semantic_map(640, 400, chosen)
peak_y, peak_x = np.unravel_index(np.argmax(relevance.values), relevance.values.shape)
print(f"relevance map peak at ({peak_x}, {peak_y}) "
      f"(inside the 140x120 cat box, not the 90x80 one)")
print(f"support size: {(relevance.values > 0.01).sum()} px of {640 * 400}")

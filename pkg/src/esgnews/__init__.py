"""News-signal timeseries construction and small sequence models for
predicting annual company ESG ratings.

Subpackages and modules:

* ``catalog``     — companies, rating targets, market-cap bands
* ``gdelt``       — query builder / client for the GDELT article-list API
* ``corpus``      — article cleaning, summarization, JSONL persistence
* ``weak_label``  — cosine-similarity relevance labeling, prediction ingestion
* ``clustering``  — plain and spherical k-means, elbow / silhouette selection
* ``features``    — monthly timeseries assembly and standard scaling
* ``neuro``       — tensors with reverse-mode gradients, layers, losses, RAdam
* ``models``      — the four network architectures with both heads
* ``experiment``  — training harness, baselines, evaluation protocol, ablation
* ``synthetic``   — seeded generators for model-ready synthetic datasets
"""

__version__ = "0.1.0"

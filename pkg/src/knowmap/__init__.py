"""knowmap: build navigable cartographic knowledge maps from annotated document corpora.

The pipeline turns a JSON-lines corpus plus a concept gazetteer (or a curated
annotation table) into three linked graphs — an entity similarity graph, a topic
hierarchy, and a per-level occupancy graph with entity clones — then lays them
out as nested circles with contour topography and serves the result over HTTP.
"""

__version__ = "0.1.0"

"""Context Canvas: graph-RAG orchestration for text-to-image generation.

The package is organised around an embedded character knowledge graph:

* :mod:`context_canvas.graph` -- the in-memory property graph and its
  JSON persistence format.
* :mod:`context_canvas.cql` -- parser and executor for the Cypher subset
  the pipeline emits.
* :mod:`context_canvas.kg` -- two-phase knowledge-graph construction from
  character record files.
* :mod:`context_canvas.pipeline` -- prompt analysis, graph retrieval and
  contrastive prompt enrichment.
* :mod:`context_canvas.srd` -- the self-correcting generation loop.
* :mod:`context_canvas.judge` -- weighted image scoring and suite
  aggregation.
* :mod:`context_canvas.backends` -- pluggable HTTP and deterministic mock
  backends for every external model call.
"""

__version__ = "0.1.0"

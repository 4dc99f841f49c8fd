"""Corpus pipeline and multi-dimension dialogue benchmark harness.

Submodules:

* :mod:`emoeval.corpus`    sample types and manifest I/O
* :mod:`emoeval.segmenter` chunking, speaker-turn merging, clip windows
* :mod:`emoeval.ecot`      reasoning-chain records, serialization, losses
* :mod:`emoeval.filters`   semantic/hallucination quality gates
* :mod:`emoeval.judge`     rubric prompts, verdict parsing, scorecards
* :mod:`emoeval.metrics`   WER/CER, means, confidence intervals
* :mod:`emoeval.backends`  completion backends, mocks, bounded dispatch
* :mod:`emoeval.talker`    instruction derivation and speech-synthesis leg
* :mod:`emoeval.report`    score matrices and emitters
* :mod:`emoeval.cli`       the ``emoeval`` command
"""

__version__ = "0.1.0"

"""Multilingual toxicity detection toolkit.

Submodules:

* ``corpus`` -- utterance/score/embedding data model and file formats
* ``wordlist`` -- lexical (wordlist-based) toxicity detection
* ``classifier`` -- feed-forward classifier head over embeddings
* ``selection`` -- dataset pre-selection and stratified splits
* ``evaluation`` -- AUC, P/R/F1, fixed-precision recall, correlations
* ``annotation`` -- annotation campaign service
* ``cli`` -- command-line pipeline
* ``synth`` -- deterministic synthetic fixtures
"""

__version__ = "0.1.0"

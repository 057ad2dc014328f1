"""Origin-destination journey network analysis.

Reconstructs weighted directed journey networks from origin-destination
event records over areal regions and provides the analysis pipeline:
degree/reciprocity/HITS metrics, temporal edge persistence,
interval-censored journey-distance estimation, and hypothesis testing.
"""

__version__ = "0.1.0"

"""Motion-quality scoring workbench for generated video.

Five perception-driven metrics over pre-extracted feature bundles, with
threshold calibration, human-alignment statistics, and a prompt-suite
pipeline. See the module docstrings for the individual pieces:

- bundle: the per-video FeatureBundle container and its JSON format
- skeletons: keypoint schema registry
- metrics: the five metric implementations and bundle scoring
- calibration: threshold sets and quantile calibration
- alignment: annotations, rank correlation, preference pairs, ablations
- prompts: metadata sampling and the staged prompt pipeline
- reports: score report files, leaderboard, CSV tables
- cli: the `vmbench` command
"""

__version__ = "0.1.0"

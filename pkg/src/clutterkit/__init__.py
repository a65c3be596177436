"""clutterkit: deterministic tooling for self-annotated tabletop datasets.

Turns white-background object images into annotated cutouts, composes
synthetic cluttered scenes with carried-along instance masks, scores
segmentation predictions (AP/AR/F1, PR curves), and computes point-cloud
localization and suction grasp points.
"""

__version__ = "0.1.0"

"""Synthetic gait data generation and silhouette-based gait recognition.

Modules, in pipeline order:

``mocap``         BVH / joint-CSV motion capture, resampling, retargeting, forward kinematics
``walker``        procedural walker, capsule avatar, silhouette and shaded rendering
``segmentation``  LAB background subtraction, two-means threshold, chroma key
``gait_cycle``    lower-body pixel-count signal and cycle detection
``features``      silhouette normalization, GEI, GEnI, flip/crop augmentation
``similarity``    Jaccard index, alignment, per-subject statistics
``recognition``   PCA, one-vs-rest linear SVM, six-condition experiments
``cli``           config-driven command-line pipeline
"""

from . import errors

__version__ = "0.1.0"
__all__ = ["errors", "__version__"]

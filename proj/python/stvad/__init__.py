"""Video anomaly detection on top of the native extension.

A bidirectional recurrent frame synthesizer reconstructs each video frame from
its temporal context; a 3-D convolutional patch discriminator judges realness.
Frames that neither reconstruct well nor look real get high abnormality
scores.
"""

try:
    # Installed layout: the extension lives inside the package.
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:
    # Build-tree layout: the extension sits on PYTHONPATH next to the package.
    from _core import *  # type: ignore  # noqa: F401,F403
    from _core import __version__  # type: ignore # noqa: F401

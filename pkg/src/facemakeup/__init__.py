"""Example-based facial makeup transfer.

Pipeline: facial landmarks -> region contours and masks -> automatic
trimaps and alpha mattes -> per-region color style transfer -> alpha-blend
compositing, plus a collection-wide color-consistency optimizer.  Exposed
as a library, a CLI (``facemakeup``) and an HTTP preview service.
"""

__version__ = "0.1.0"

"""Owner-only automobile theft detection from CAN-derived trip time series.

Pipeline: ingest trip CSVs -> select essential features -> slide + highlight
windows -> per-feature k-means codebooks -> nearest-centroid reconstruction ->
windowed reconstruction-error thresholding -> majority-of-5 ensemble.
"""

__version__ = "0.1.0"

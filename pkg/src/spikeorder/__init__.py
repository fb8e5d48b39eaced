"""Order determination for large-dimensional spiked models.

Valley-cliff ridge-ratio estimators (plain and transformed), baseline
estimators, random-matrix oracles for three model families (spiked
population covariance, spiked Fisher matrices, lag-1 auto-covariance
factor models), pure-noise ridge calibration and a seeded Monte-Carlo
harness.
"""

__version__ = "0.1.0"

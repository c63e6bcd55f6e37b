"""Day-to-day traffic network simulator with endogenous trust dynamics.

The package couples within-day network loading, bounded-rationality logit
route choice, and a Beta-evidence trust model that governs how strongly
travelers rely on (possibly manipulated) route guidance. It also ships
closed-form calculators for the activation threshold, stability bounds,
the two-link compliance benchmark, and the post-attack recovery law,
plus an experiment CLI (run / sweep / targets / theory / metrics / gen).
"""

__version__ = "0.1.0"

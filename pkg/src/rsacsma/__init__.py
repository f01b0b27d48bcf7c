"""Random sequential adsorption models of dense CSMA networks.

Analytical medium-access and SINR-coverage results for CSMA networks whose
active access points form an RSA process, plus the Monte Carlo machinery
used to check every analytical quantity.
"""

__version__ = "0.1.0"

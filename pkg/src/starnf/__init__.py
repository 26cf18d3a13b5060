"""STAR-RIS near-field multi-user MIMO downlink simulator.

Joint design of base-station precoders and STAR-RIS transmission/reflection
coefficients by block coordinate descent on a weighted-MMSE surrogate, with
two surface solvers (lifted SDP with a rank-one penalty, and element-wise
closed forms) plus baseline schemes and a Monte-Carlo experiment harness.
"""

__version__ = "0.1.0"

"""Root-protograph LDPC codes over block-fading channels.

Construction of full-diversity root protographs and their rate-compatible
extensions, quasi-cyclic lifting, GF(2) encoding, BP decoding, relay
cooperation protocols, and Monte-Carlo WER/outage measurement.
"""

__version__ = "0.1.0"

"""Asynchronous measurement-device-independent quantum digital signatures.

Modules
-------
gf2, otuh
    GF(2) arithmetic and the LFSR Toeplitz hash used for signing.
messaging
    Key shares, signing, verification and the three-party message flow.
photonics, finitekey
    Analytic channel and pairing model, Monte Carlo oracle and finite-key
    estimation for the asynchronous protocol.
baseline
    Four-intensity MDI comparator with double scanning.
sweep, cli, selftest
    Distance sweeps, reach optimization and the ``aqds`` command.
"""

__version__ = "0.1.0"

"""Hardware-efficient error correction of common-fluctuator dephasing."""

__version__ = "0.1.0"

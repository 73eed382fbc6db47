"""MAC-layer NR-U / Wi-Fi coexistence simulator with constrained CW control."""

__version__ = "0.1.0"

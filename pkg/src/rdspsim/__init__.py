"""Discrete-event simulator comparing the RDSP relay protocol (dynamic ID
assignment, min/max neighbour forwarding) with a DSDV-routed baseline on
post-disaster relay chains."""

__version__ = "0.1.0"

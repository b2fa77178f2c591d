"""
quasiid
A numerical toolkit for deciding whether a probability law is infinitely
divisible, rationally infinitely divisible, or neither, from its
characteristic function.
"""

__version__ = "0.1.0"

#!/usr/bin/env python3

"""Feynman-Kac corrected sampling for masked discrete diffusion."""

__version__ = "0.1.0"

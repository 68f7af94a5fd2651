"""Disassortative 3-community block model, list-3-colouring dynamics, and
the differential-equation / branching-process machinery behind them."""

__version__ = "0.1.0"

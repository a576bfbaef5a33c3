"""From-scratch support vector regression toolkit and experiment harness."""

__version__ = "0.1.0"

"""citepref: signed national citation-preference networks and their
downstream analysis (communities, balance, inequality, idea diffusion,
and regression models)."""

__version__ = "0.1.0"

"""qwell: simultaneous bilinear control of particles in an infinite square well."""

__version__ = "0.4.0"

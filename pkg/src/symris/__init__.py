"""Random induced symmetric multiqubit states: generation, PPT and separability classification, geometry."""

__version__ = "0.1.0"

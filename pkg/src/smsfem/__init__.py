"""SMS stabilization for convection-dominated convection-diffusion
problems: Galerkin/SUPG baselines, layer-adapted meshes, uniqueness
diagnostics and an experiment harness."""

__version__ = "0.1.0"

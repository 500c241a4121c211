"""Simultaneous unitarization of loop monodromies and CMC n-noid surfaces.

Loops are complex arrays of shape (N, n, n); sample j lies at
lambda = exp(2 pi i j / N) and N is a power of two.
"""

from ._core import (
    AdmissibilityReport,
    ClosingReport,
    ClosureReport,
    Error,
    GoldmanReport,
    ImmersionMesh,
    IwasawaOptions,
    MeshOptions,
    MonodromySet,
    NoidPotential,
    SpaceForm,
    SpaceFormKind,
    SurfaceOptions,
    SymmetricNoid,
    Trinoid,
    UnitarizeOptions,
    UnitarizerResult,
    Verdict,
    admissible,
    build_monodromy_set,
    build_surface,
    chi,
    closing_check,
    closing_residual,
    conjugated_unitary_fixture,
    export_diagnostics_csv,
    export_obj,
    generators_at,
    goldman_report,
    iwasawa,
    rho,
    set_thread_limit,
    symmetry_matrix,
    thread_limit,
    unitarity_residuals,
    unitarize,
)

__all__ = [name for name in dir() if not name.startswith("_")]

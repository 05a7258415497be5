"""Global numerical tolerances.

Every tolerance used for validating inputs lives here so that there is one
place to read them from. Reporting tolerances (the ``--tol`` CLI flag) never
touch these.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10          # max |M - M^dagger| entrywise
    psd: float = 1e-10           # smallest allowed eigenvalue is -psd
    trace: float = 1e-10         # |tr(rho) - 1|
    norm: float = 1e-10          # | ||psi||^2 - 1 |
    eig_clip: float = 1e-12      # eigenvalues below this count as zero in entropies
    tp: float = 1e-9             # trace preservation of Kraus sets
    choi_psd: float = 1e-9       # Choi positivity
    choi_drop: float = 1e-10     # Choi eigenvalues dropped when extracting Kraus ops
    isometry: float = 1e-9       # V^dagger V = I
    weights: float = 1e-12       # probability vectors sum to one
    range_slack: float = 1e-8    # functionals outside their declared range beyond this raise
    crosscheck_fidelity: float = 1e-9   # purification vs Kraus-form F_e
    crosscheck_entropy: float = 1e-8    # purification vs W-matrix S_e


TOL = Tolerances()

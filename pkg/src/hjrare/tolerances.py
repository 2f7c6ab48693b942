"""Central numerical tolerances and defaults."""

ALGEBRA_TOL = 1e-10
OPTIM_TOL = 1e-6

# discriminants in [-DISC_CLAMP, 0) are treated as 0
DISC_CLAMP = 1e-12
CRITICAL_MARGIN = 1e-12

QUAD_TOL = 1e-10
QUAD_MAX_DEPTH = 40

CRITICAL_GRID_N = 2048

GOLDEN_TOL = 1e-9
C_CAP = 1e6
# boundary objectives closer than this count as a tie (resolved toward b)
TIE_TOL = 1e-9

LAGRANGIAN_SEARCH_RADIUS = 8.0
LAGRANGIAN_MAX_RADIUS = 1e4

HOPF_LAX_RADIUS = 10.0

UC_SIGN_GRID = 4096
